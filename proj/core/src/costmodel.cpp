// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hiprune/costmodel.hpp"

#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>

#include "hiprune/error.hpp"

namespace hiprune {

namespace {

// Vicuna-7B language model with a CLIP ViT-L/14-336 encoder (577 tokens per
// crop including the class token).
CostModelSpec llava_7b_base() {
    CostModelSpec spec;
    spec.llm_layers = 32;
    spec.llm_hidden = 4096;
    spec.llm_ffn = 11008;
    spec.llm_vocab = 32000;
    spec.llm_gated_ffn = true;
    spec.vision_layers = 24;
    spec.vision_hidden = 1024;
    spec.vision_ffn = 4096;
    spec.vision_tokens_per_crop = 577;
    // Output of `hiprune-fit-flops` against the published LLaVA-NeXT-7B FLOPs.
    spec.text_tokens = 45;
    return spec;
}

}  // namespace

void validate_cost_spec(const CostModelSpec& spec) {
    if (spec.llm_layers == 0 || spec.llm_hidden == 0 || spec.llm_ffn == 0 || spec.llm_vocab == 0 ||
        spec.vision_layers == 0 || spec.vision_hidden == 0 || spec.vision_ffn == 0 ||
        spec.vision_tokens_per_crop == 0 || spec.crops == 0) {
        throw ConfigError("cost model dimensions must all be positive");
    }
}

double transformer_flops(std::uint64_t tokens, std::uint32_t layers, std::uint64_t hidden, std::uint64_t ffn,
                         bool gated_ffn) {
    const double t = static_cast<double>(tokens);
    const double h = static_cast<double>(hidden);
    const double f = static_cast<double>(ffn) * (gated_ffn ? 1.5 : 1.0);
    const double per_layer = 2.0 * t * (4.0 * h * h + 2.0 * h * f) + 4.0 * t * t * h;
    return per_layer * layers;
}

double vision_flops(const CostModelSpec& spec) {
    return spec.crops * transformer_flops(spec.vision_tokens_per_crop, spec.vision_layers, spec.vision_hidden,
                                          spec.vision_ffn, false);
}

double prefill_flops(const CostModelSpec& spec, std::uint64_t visual_tokens) {
    validate_cost_spec(spec);
    return vision_flops(spec) + transformer_flops(visual_tokens + spec.text_tokens, spec.llm_layers, spec.llm_hidden,
                                                  spec.llm_ffn, spec.llm_gated_ffn);
}

double flops_ratio(const CostModelSpec& spec, std::uint64_t full, std::uint64_t pruned) {
    if (pruned > full) {
        throw ConfigError("pruned token count exceeds the full count");
    }
    const double denominator = prefill_flops(spec, pruned);
    if (denominator <= 0.0) {
        throw ConfigError("pruned prefill cost is zero");
    }
    return prefill_flops(spec, full) / denominator;
}

std::vector<std::string> cost_preset_names() {
    return {"llava-1.5-7b", "llava-next-7b"};
}

std::optional<CostModelSpec> cost_preset(std::string_view name) {
    if (name == "llava-1.5-7b") {
        return llava_7b_base();
    }
    if (name == "llava-next-7b") {
        auto spec = llava_7b_base();
        spec.crops = 5;  // base view plus four high-resolution tiles, 576 visual tokens each
        return spec;
    }
    return std::nullopt;
}

CostModelSpec cost_spec_from_json(std::string_view text) {
    const auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ConfigError("cost model spec is not a JSON object");
    }
    CostModelSpec spec;
    if (doc.contains("preset")) {
        const auto name = doc["preset"].get<std::string>();
        const auto preset = cost_preset(name);
        if (!preset) {
            throw ConfigError("unknown cost model preset '" + name + "'");
        }
        spec = *preset;
    }
    try {
        const auto read = [&](const char* key, auto& field) {
            if (doc.contains(key)) {
                doc.at(key).get_to(field);
            }
        };
        read("llm_layers", spec.llm_layers);
        read("llm_hidden", spec.llm_hidden);
        read("llm_ffn", spec.llm_ffn);
        read("llm_vocab", spec.llm_vocab);
        read("llm_gated_ffn", spec.llm_gated_ffn);
        read("vision_layers", spec.vision_layers);
        read("vision_hidden", spec.vision_hidden);
        read("vision_ffn", spec.vision_ffn);
        read("vision_tokens_per_crop", spec.vision_tokens_per_crop);
        read("crops", spec.crops);
        read("text_tokens", spec.text_tokens);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("cost model spec: ") + e.what());
    }
    validate_cost_spec(spec);
    return spec;
}

std::string cost_spec_to_json(const CostModelSpec& spec) {
    nlohmann::ordered_json doc;
    doc["llm_layers"] = spec.llm_layers;
    doc["llm_hidden"] = spec.llm_hidden;
    doc["llm_ffn"] = spec.llm_ffn;
    doc["llm_vocab"] = spec.llm_vocab;
    doc["llm_gated_ffn"] = spec.llm_gated_ffn;
    doc["vision_layers"] = spec.vision_layers;
    doc["vision_hidden"] = spec.vision_hidden;
    doc["vision_ffn"] = spec.vision_ffn;
    doc["vision_tokens_per_crop"] = spec.vision_tokens_per_crop;
    doc["crops"] = spec.crops;
    doc["text_tokens"] = spec.text_tokens;
    return doc.dump(2) + "\n";
}

TextTokenFit fit_text_tokens(CostModelSpec spec, std::span<const FlopsTarget> targets, std::uint64_t lo,
                             std::uint64_t hi) {
    if (targets.empty() || lo > hi) {
        throw ConfigError("fit needs at least one target and lo <= hi");
    }
    TextTokenFit best{lo, std::numeric_limits<double>::infinity(), 0.0};
    for (std::uint64_t t = lo; t <= hi; ++t) {
        spec.text_tokens = t;
        double loss = 0.0;
        double worst = 0.0;
        for (const auto& target : targets) {
            const double estimate = prefill_flops(spec, target.visual_tokens);
            loss += std::pow(std::log(estimate / target.flops), 2);
            worst = std::max(worst, std::abs(estimate - target.flops) / target.flops);
        }
        if (loss < best.sum_squared_log_error) {
            best = {t, loss, worst};
        }
    }
    return best;
}

}  // namespace hiprune
