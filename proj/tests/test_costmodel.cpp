// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "hiprune/costmodel.hpp"
#include "hiprune/error.hpp"

namespace hiprune {
namespace {

const FlopsTarget kTable[] = {{2880, 40.57e12}, {640, 10.97e12}, {320, 6.74e12}, {160, 4.63e12}};

CostModelSpec next_spec() {
    return *cost_preset("llava-next-7b");
}

TEST(TransformerFlops, ClosedForm) {
    // T = 10, h = 4, f = 8 (not gated): 2*10*(64 + 64) + 4*100*4 = 2560 + 1600.
    EXPECT_DOUBLE_EQ(transformer_flops(10, 1, 4, 8, false), 4160.0);
    EXPECT_DOUBLE_EQ(transformer_flops(10, 3, 4, 8, false), 3 * 4160.0);
    // Gated: f_eff = 12 -> 2*10*(64 + 96) + 1600.
    EXPECT_DOUBLE_EQ(transformer_flops(10, 1, 4, 8, true), 4800.0);
    EXPECT_DOUBLE_EQ(transformer_flops(0, 5, 4, 8, true), 0.0);
}

TEST(PrefillFlops, EmptySequenceIsVisionOnly) {
    auto spec = next_spec();
    spec.text_tokens = 0;
    EXPECT_DOUBLE_EQ(prefill_flops(spec, 0), vision_flops(spec));
    EXPECT_DOUBLE_EQ(vision_flops(spec), 5 * transformer_flops(577, 24, 1024, 4096, false));
}

TEST(PrefillFlops, Monotonicity) {
    const auto base = next_spec();
    for (const std::uint64_t v : {0u, 1u, 160u, 640u, 2880u}) {
        EXPECT_LT(prefill_flops(base, v), prefill_flops(base, v + 1));
        auto more_text = base;
        more_text.text_tokens *= 2;
        EXPECT_LT(prefill_flops(base, v), prefill_flops(more_text, v));
        auto more_layers = base;
        ++more_layers.llm_layers;
        EXPECT_LT(prefill_flops(base, v), prefill_flops(more_layers, v));
        auto wider = base;
        wider.llm_hidden += 64;
        EXPECT_LT(prefill_flops(base, v), prefill_flops(wider, v));
    }
}

TEST(PrefillFlops, SuperLinear) {
    auto spec = next_spec();
    spec.text_tokens = 0;
    const double vision = vision_flops(spec);
    for (const std::uint64_t t : {1u, 16u, 160u, 2880u}) {
        EXPECT_GT(prefill_flops(spec, 2 * t), 2 * prefill_flops(spec, t) - vision);
    }
}

TEST(PrefillFlops, RejectsZeroDimensions) {
    auto spec = next_spec();
    spec.llm_hidden = 0;
    EXPECT_THROW(prefill_flops(spec, 10), ConfigError);
}

TEST(FlopsRatio, Basics) {
    const auto spec = next_spec();
    EXPECT_DOUBLE_EQ(flops_ratio(spec, 640, 640), 1.0);
    EXPECT_THROW(flops_ratio(spec, 160, 640), ConfigError);
    double previous = 1.0;
    for (std::uint64_t pruned = 2880; pruned-- > 0;) {
        const double r = flops_ratio(spec, 2880, pruned);
        ASSERT_GT(r, previous);
        previous = r;
        if (pruned > 100) {
            pruned -= 97;
        }
    }
}

TEST(FlopsRatio, PublishedSpeedupRange) {
    const double ratio = flops_ratio(next_spec(), 2880, 160);
    EXPECT_GE(ratio, 7.5);
    EXPECT_LE(ratio, 10.0);
}

TEST(Presets, Names) {
    EXPECT_EQ(cost_preset_names(), (std::vector<std::string>{"llava-1.5-7b", "llava-next-7b"}));
    EXPECT_EQ(cost_preset("llava-1.5-7b")->crops, 1u);
    EXPECT_EQ(next_spec().crops, 5u);
    EXPECT_FALSE(cost_preset("gpt").has_value());
}

TEST(Presets, FittedTextTokensMatchTable) {
    const auto fit = fit_text_tokens(next_spec(), kTable);
    EXPECT_EQ(fit.text_tokens, next_spec().text_tokens);
    EXPECT_GE(fit.text_tokens, 20u);
    EXPECT_LE(fit.text_tokens, 120u);
    EXPECT_LE(fit.max_relative_error, 0.15);
    for (const auto& target : kTable) {
        const double estimate = prefill_flops(next_spec(), target.visual_tokens);
        EXPECT_LE(std::abs(estimate - target.flops) / target.flops, 0.15) << target.visual_tokens;
    }
}

TEST(Presets, ClipGeometryMatchesLlava15) {
    // 336 / 14 = 24 patches per side plus one class token.
    EXPECT_EQ(cost_preset("llava-1.5-7b")->vision_tokens_per_crop, 24u * 24u + 1u);
}

TEST(FitTextTokens, RecoversPlantedValue) {
    auto spec = next_spec();
    spec.text_tokens = 77;
    std::vector<FlopsTarget> targets;
    for (const std::uint64_t v : {100u, 400u, 1600u}) {
        targets.push_back({v, prefill_flops(spec, v)});
    }
    const auto fit = fit_text_tokens(spec, targets);
    EXPECT_EQ(fit.text_tokens, 77u);
    EXPECT_NEAR(fit.max_relative_error, 0.0, 1e-12);
    EXPECT_THROW(fit_text_tokens(spec, std::span<const FlopsTarget>{}), ConfigError);
}

TEST(CostSpecJson, RoundTripAndOverrides) {
    const auto spec = next_spec();
    const auto back = cost_spec_from_json(cost_spec_to_json(spec));
    EXPECT_EQ(cost_spec_to_json(back), cost_spec_to_json(spec));

    const auto overridden = cost_spec_from_json(R"({"preset":"llava-next-7b","crops":3,"text_tokens":10})");
    EXPECT_EQ(overridden.crops, 3u);
    EXPECT_EQ(overridden.text_tokens, 10u);
    EXPECT_EQ(overridden.llm_hidden, 4096u);

    EXPECT_THROW(cost_spec_from_json("[]"), ConfigError);
    EXPECT_THROW(cost_spec_from_json(R"({"preset":"nope"})"), ConfigError);
    EXPECT_THROW(cost_spec_from_json(R"({"crops":"many"})"), ConfigError);
}

}  // namespace
}  // namespace hiprune
