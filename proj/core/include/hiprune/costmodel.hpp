// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hiprune {

/// Dimensions of a vision-encoder + LLM pair for prefill FLOPs estimates.
///
/// Conventions: one multiply-accumulate is 2 FLOPs; a transformer layer over
/// T tokens with hidden size h and MLP width f costs
///   2*T*(4*h^2 + 2*h*f_eff) + 4*T^2*h
/// (QKV/output projections, MLP, and the two attention matmuls). Gated MLPs
/// use three projections, so f_eff = 3*f/2. Norms, softmax, biases, the
/// multimodal projector and the vocabulary head are not counted.
struct CostModelSpec {
    std::uint32_t llm_layers = 32;
    std::uint64_t llm_hidden = 4096;
    std::uint64_t llm_ffn = 11008;
    std::uint64_t llm_vocab = 32000;  // recorded for completeness; excluded from prefill
    bool llm_gated_ffn = true;
    std::uint32_t vision_layers = 24;
    std::uint64_t vision_hidden = 1024;
    std::uint64_t vision_ffn = 4096;
    std::uint64_t vision_tokens_per_crop = 577;
    std::uint32_t crops = 1;
    std::uint64_t text_tokens = 64;
};

/// Throws ConfigError when any dimension is zero.
void validate_cost_spec(const CostModelSpec& spec);

/// FLOPs of `layers` transformer layers over `tokens` tokens.
double transformer_flops(std::uint64_t tokens, std::uint32_t layers, std::uint64_t hidden, std::uint64_t ffn,
                         bool gated_ffn);

/// Vision encoder over every crop.
double vision_flops(const CostModelSpec& spec);

/// Vision encoder plus LLM prefill over visual_tokens + spec.text_tokens.
double prefill_flops(const CostModelSpec& spec, std::uint64_t visual_tokens);

/// prefill_flops(full) / prefill_flops(pruned). Throws ConfigError when
/// pruned > full.
double flops_ratio(const CostModelSpec& spec, std::uint64_t full, std::uint64_t pruned);

std::vector<std::string> cost_preset_names();
std::optional<CostModelSpec> cost_preset(std::string_view name);

/// Missing keys keep the defaults of CostModelSpec.
CostModelSpec cost_spec_from_json(std::string_view text);
std::string cost_spec_to_json(const CostModelSpec& spec);

struct FlopsTarget {
    std::uint64_t visual_tokens = 0;
    double flops = 0.0;
};

struct TextTokenFit {
    std::uint64_t text_tokens = 0;
    double sum_squared_log_error = 0.0;
    double max_relative_error = 0.0;
};

/// Integer text_tokens in [lo, hi] minimising sum(log(estimate / target)^2)
/// over `targets`; ties go to the smaller count.
TextTokenFit fit_text_tokens(CostModelSpec spec, std::span<const FlopsTarget> targets, std::uint64_t lo = 20,
                             std::uint64_t hi = 120);

}  // namespace hiprune
