// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>

#include "hiprune/attention_store.hpp"
#include "test_util.hpp"

namespace hiprune {
namespace {

// CLIP-L/14 at 336 px: 24 layers, 16 heads, 24x24 patches plus a class token.
TEST(LargeStack, ClipGeometryRoundTrip) {
    const StackShape shape{24, 16, 577, 1, TokenGrid{24, 24}};
    FixtureRng rng(81);
    std::vector<float> base(577);
    double total = 0;
    for (auto& v : base) {
        v = static_cast<float>(rng.uniform(0.5, 1.5));
        total += v;
    }
    for (auto& v : base) {
        v = static_cast<float>(v / total);
    }
    std::vector<float> values;
    values.reserve(shape.value_count());
    for (std::size_t row = 0; row < std::size_t{24} * 16 * 577; ++row) {
        const auto shift = static_cast<std::ptrdiff_t>(row % 577);
        values.insert(values.end(), base.begin() + shift, base.end());
        values.insert(values.end(), base.begin(), base.begin() + shift);
    }
    const AttentionStack stack(shape, std::move(values));

    testing::TempDir dir;
    write_stack(stack, dir / "clip.atns");
    EXPECT_EQ(std::filesystem::file_size(dir / "clip.atns"), kAtnsHeaderSize + 24ull * 16 * 577 * 577 * 4);
    const auto back = read_stack(dir / "clip.atns");
    EXPECT_EQ(back.shape(), shape);
    EXPECT_TRUE(std::equal(back.values().begin(), back.values().end(), stack.values().begin()));
}

}  // namespace
}  // namespace hiprune
