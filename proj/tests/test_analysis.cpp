// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "hiprune/analysis.hpp"
#include "hiprune/error.hpp"
#include "hiprune/synth.hpp"
#include "test_util.hpp"

namespace hiprune {
namespace {

using Indices = std::vector<std::uint32_t>;

ScoreVector scores_of(std::vector<double> values) {
    return ScoreVector{0, std::move(values)};
}

SegMask mask_of(TokenGrid grid, const Indices& on) {
    SegMask mask{grid, std::vector<std::uint8_t>(grid.size(), 0)};
    for (const auto i : on) {
        mask.values[i] = 1;
    }
    return mask;
}

// Stack whose every query row equals `row` (patch keys only, no class token),
// so layer scores are n * row.
std::vector<float> repeated_rows(const std::vector<double>& row) {
    double sum = 0;
    for (const double v : row) {
        sum += v;
    }
    std::vector<float> out;
    for (std::size_t q = 0; q < row.size(); ++q) {
        for (const double v : row) {
            out.push_back(static_cast<float>(v / sum));
        }
    }
    return out;
}

TEST(TopFraction, Examples) {
    std::vector<double> ten(10, 0.0);
    ten[6] = 1.0;
    EXPECT_EQ(top_fraction_indices(scores_of(ten), 0.1), (Indices{6}));
    EXPECT_EQ(top_fraction_indices(scores_of({3, 1, 2, 5}), 1.0), (Indices{0, 1, 2, 3}));
    EXPECT_EQ(top_fraction_indices(scores_of({3, 1, 2, 5}), 0.5), (Indices{0, 3}));
    EXPECT_EQ(top_fraction_indices(scores_of({3, 1, 2, 5}), 0.01), (Indices{3}));
    EXPECT_EQ(top_fraction_indices(scores_of(std::vector<double>(10, 1.0)), 0.3).size(), 3u);
    EXPECT_THROW(top_fraction_indices(scores_of({1}), 0.0), ConfigError);
    EXPECT_THROW(top_fraction_indices(scores_of({1}), 1.5), ConfigError);
}

TEST(Iou, Identities) {
    const TokenGrid grid{2, 2};
    const auto scores = scores_of({0.9, 0.1, 0.8, 0.2});
    EXPECT_DOUBLE_EQ(iou_with_mask(scores, mask_of(grid, {0, 2}), 0.5), 1.0);
    EXPECT_DOUBLE_EQ(iou_with_mask(scores, mask_of(grid, {1, 3}), 0.5), 0.0);
    EXPECT_DOUBLE_EQ(iou_with_mask(scores, mask_of(grid, {0, 1}), 0.5), 1.0 / 3.0);
    EXPECT_THROW(iou_with_mask(scores_of({1, 2, 3}), mask_of(grid, {0}), 0.5), GeometryError);
}

TEST(Iou, SetIouSymmetricAndBounded) {
    FixtureRng rng(41);
    for (int trial = 0; trial < 300; ++trial) {
        Indices a;
        Indices b;
        for (std::uint32_t i = 0; i < 20; ++i) {
            if (rng.below(3) == 0) {
                a.push_back(i);
            }
            if (rng.below(2) == 0) {
                b.push_back(i);
            }
        }
        const double ab = set_iou(a, b);
        ASSERT_EQ(ab, set_iou(b, a));
        ASSERT_GE(ab, 0.0);
        ASSERT_LE(ab, 1.0);
    }
    EXPECT_EQ(set_iou(Indices{}, Indices{}), 0.0);
}

TEST(NormalizedIou, IdenticalLayersGiveOnes) {
    const std::vector<double> row{5, 1, 1, 4, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
    auto layer = repeated_rows(row);
    std::vector<float> values;
    for (int l = 0; l < 4; ++l) {
        values.insert(values.end(), layer.begin(), layer.end());
    }
    const AttentionStack stack(StackShape{4, 1, 16, 0, TokenGrid{4, 4}}, values);
    const Indices layers{0, 1, 2, 3};
    const auto out = normalized_layer_iou(stack, mask_of(stack.grid(), {0, 3}), layers, 0.1);
    for (const auto& v : out) {
        ASSERT_TRUE(v.has_value());
        EXPECT_DOUBLE_EQ(*v, 1.0);
    }
}

TEST(NormalizedIou, ConcentratedMidBeatsUniformFirst) {
    // 4x4 grid, mask = {5, 6, 9, 10}. Layer 0 uniform (top-2 = {0, 1} by
    // tie-break, IoU 0); layer 1 (mid for L = 2) peaks on 5 and 6 (IoU 2/4).
    std::vector<double> uniform(16, 1.0);
    std::vector<double> peaked(16, 1.0);
    peaked[5] = 10;
    peaked[6] = 9;
    auto values = repeated_rows(uniform);
    const auto mid = repeated_rows(peaked);
    values.insert(values.end(), mid.begin(), mid.end());
    const AttentionStack stack(StackShape{2, 1, 16, 0, TokenGrid{4, 4}}, values);
    const auto mask = mask_of(stack.grid(), {5, 6, 9, 10});
    EXPECT_DOUBLE_EQ(iou_with_mask(aggregate_scores(stack, 1), mask, 0.1), 0.5);
    const Indices layers{0, 1};
    const auto out = normalized_layer_iou(stack, mask, layers, 0.1);
    ASSERT_TRUE(out[0].has_value());
    EXPECT_LT(*out[0], 1.0);
    EXPECT_EQ(out[1], 1.0);
}

TEST(NormalizedIou, UndefinedWhenMidIouZero) {
    const std::vector<double> row{5, 1, 1, 1};
    const auto layer = repeated_rows(row);
    std::vector<float> values(layer);
    values.insert(values.end(), layer.begin(), layer.end());
    const AttentionStack stack(StackShape{2, 1, 4, 0, TokenGrid{2, 2}}, values);
    const Indices layers{0, 1};
    const auto out = normalized_layer_iou(stack, mask_of(stack.grid(), {3}), layers, 0.25);
    EXPECT_FALSE(out[0].has_value());
    EXPECT_FALSE(out[1].has_value());
}

TEST(NormalizedIou, RequiresMidLayerAndMatchingGrid) {
    FixtureRng rng(42);
    const auto stack = testing::random_stack(rng, 4, 1, TokenGrid{3, 3}, false);
    const Indices no_mid{0, 1};
    EXPECT_THROW(normalized_layer_iou(stack, mask_of(stack.grid(), {0}), no_mid, 0.1), ConfigError);
    const Indices with_mid{2};
    EXPECT_THROW(normalized_layer_iou(stack, mask_of(TokenGrid{1, 9}, {0}), with_mid, 0.1), GeometryError);
}

TEST(Dispersion, PairDistance) {
    const TokenGrid grid{1, 4};
    EXPECT_DOUBLE_EQ(mean_pairwise_distance(Indices{0, 3}, grid), 3.0);
    EXPECT_DOUBLE_EQ(mean_pairwise_distance(Indices{2}, grid), 0.0);
    EXPECT_DOUBLE_EQ(mean_pairwise_distance(Indices{}, grid), 0.0);
    // (0,0), (0,3), (4,0): distances 3, 4, 5.
    EXPECT_DOUBLE_EQ(mean_pairwise_distance(Indices{0, 3, 20}, TokenGrid{5, 5}), 4.0);
    EXPECT_DOUBLE_EQ(dispersion(scores_of({9, 0, 0, 8}), grid, 0.5), 3.0);
}

TEST(Dispersion, TranslationAndDilation) {
    FixtureRng rng(43);
    const TokenGrid big{40, 40};
    for (int trial = 0; trial < 100; ++trial) {
        Indices base;
        Indices shifted;
        Indices dilated;
        const auto dr = static_cast<std::uint32_t>(rng.below(10));
        const auto dc = static_cast<std::uint32_t>(rng.below(10));
        const std::size_t count = 2 + rng.below(6);
        for (std::size_t i = 0; i < count; ++i) {
            const auto r = static_cast<std::uint32_t>(rng.below(10));
            const auto c = static_cast<std::uint32_t>(rng.below(10));
            base.push_back(static_cast<std::uint32_t>(patch_index_of(big, r, c)));
            shifted.push_back(static_cast<std::uint32_t>(patch_index_of(big, r + dr, c + dc)));
            dilated.push_back(static_cast<std::uint32_t>(patch_index_of(big, 3 * r, 3 * c)));
        }
        const double d = mean_pairwise_distance(base, big);
        ASSERT_NEAR(mean_pairwise_distance(shifted, big), d, 1e-9);
        ASSERT_NEAR(mean_pairwise_distance(dilated, big), 3.0 * d, 1e-9);
    }
}

TEST(Dispersion, ClusteredBelowUniform) {
    // Equal total mass: clustered layer peaks on a 2x2 block in an 8x8 grid,
    // the other layer peaks on the four corners.
    std::vector<double> clustered(64, 1.0);
    std::vector<double> spread(64, 1.0);
    for (const int i : {27, 28, 35, 36}) {
        clustered[i] = 5.0;
    }
    for (const int i : {0, 7, 56, 63}) {
        spread[i] = 5.0;
    }
    auto values = repeated_rows(spread);
    const auto second = repeated_rows(clustered);
    values.insert(values.end(), second.begin(), second.end());
    const AttentionStack stack(StackShape{2, 1, 64, 0, TokenGrid{8, 8}}, values);
    const auto curve = dispersion_curve(stack, 4.0 / 64.0);
    ASSERT_EQ(curve.size(), 2u);
    EXPECT_GT(curve[0], curve[1]);
}

TEST(Dispersion, IdenticalLayersConstantAndSingleLayer) {
    FixtureRng rng(44);
    const auto one = testing::random_stack(rng, 1, 2, TokenGrid{4, 4}, true);
    EXPECT_EQ(dispersion_curve(one, 0.25).size(), 1u);
    std::vector<float> values(one.values().begin(), one.values().end());
    values.insert(values.end(), one.values().begin(), one.values().end());
    const AttentionStack twice(StackShape{2, 2, 17, 1, TokenGrid{4, 4}}, values);
    const auto curve = dispersion_curve(twice, 0.25);
    EXPECT_EQ(curve[0], curve[1]);
}

TEST(Partition, Presets) {
    const auto p24 = default_partition(24);
    EXPECT_EQ(p24.object_layer, 9u);
    EXPECT_TRUE(p24.from_preset);
    EXPECT_EQ(p24.shallow, (LayerRange{0, 4}));
    EXPECT_EQ(p24.middle, (LayerRange{4, 9}));
    EXPECT_EQ(p24.deep, (LayerRange{9, 24}));
    const auto p32 = default_partition(32);
    EXPECT_EQ(p32.object_layer, 16u);
    EXPECT_EQ(default_partition(12).object_layer, 5u);
    EXPECT_FALSE(default_partition(12).from_preset);
    EXPECT_THROW(default_partition(2), ConfigError);
}

TEST(Partition, CoversAllDepths) {
    for (std::uint32_t layers = 3; layers <= 64; ++layers) {
        const auto p = default_partition(layers);
        ASSERT_EQ(p.shallow.begin, 0u);
        ASSERT_EQ(p.shallow.end, p.middle.begin);
        ASSERT_EQ(p.middle.end, p.deep.begin);
        ASSERT_EQ(p.deep.end, layers);
        ASSERT_GE(p.shallow.size(), 1u);
        ASSERT_GE(p.middle.size(), 1u);
        ASSERT_GE(p.deep.size(), 1u);
    }
}

TEST(Mask, RawAndPgm) {
    const TokenGrid grid{2, 3};
    const std::string raw{'\0', '\1', '\0', '\0', '\xff', '\0'};
    EXPECT_EQ(decode_mask(raw, grid).object_indices(), (Indices{1, 4}));
    EXPECT_THROW(decode_mask(raw.substr(1), grid), GeometryError);

    const std::string pgm = std::string("P5\n# object mask\n3 2\n255\n") + raw;
    EXPECT_EQ(decode_mask(pgm, grid).object_indices(), (Indices{1, 4}));
    const std::string pgm16 = std::string("P5 3 2 1000\n") + std::string(8, '\0') + std::string("\0\1", 2) +
                              std::string(2, '\0');
    EXPECT_EQ(decode_mask(pgm16, grid).object_indices(), (Indices{4}));
    EXPECT_THROW(decode_mask(std::string("P5\n2 3\n255\n") + raw, grid), GeometryError);
    EXPECT_THROW(decode_mask(std::string("P5\n3 2\n255\n") + raw.substr(2), grid), FormatError);
    EXPECT_THROW(decode_mask(std::string("P5\n3 x\n255\n") + raw, grid), FormatError);
}

}  // namespace
}  // namespace hiprune
