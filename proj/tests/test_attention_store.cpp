// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "hiprune/attention_store.hpp"
#include "hiprune/error.hpp"
#include "hiprune/io.hpp"
#include "test_util.hpp"

namespace hiprune {
namespace {

using testing::TempDir;

AttentionStack uniform_pair() {
    return testing::single_layer({0.5f, 0.5f, 0.5f, 0.5f}, 2, 0, TokenGrid{1, 2});
}

TEST(PatchIndex, Examples) {
    EXPECT_EQ(patch_index_of(TokenGrid{3, 3}, 1, 1), 4u);
    EXPECT_EQ(patch_index_of(TokenGrid{2, 5}, 1, 0), 5u);
    EXPECT_EQ(patch_index_of(TokenGrid{1, 1}, 0, 0), 0u);
}

TEST(PatchIndex, OutOfRangeThrowsBounds) {
    const TokenGrid grid{3, 4};
    EXPECT_THROW(patch_index_of(grid, 3, 0), BoundsError);
    EXPECT_THROW(patch_index_of(grid, 0, 4), BoundsError);
    EXPECT_THROW(patch_index_of(grid, -1, 0), BoundsError);
    EXPECT_THROW(patch_index_of(grid, 0, -1), BoundsError);
    EXPECT_THROW(coord_of(grid, 12), BoundsError);
}

TEST(PatchIndex, BijectionOverSeveralGrids) {
    for (const TokenGrid grid : {TokenGrid{1, 1}, TokenGrid{1, 7}, TokenGrid{5, 1}, TokenGrid{4, 6}, TokenGrid{24, 24}}) {
        std::vector<bool> seen(grid.size(), false);
        for (std::uint32_t r = 0; r < grid.rows; ++r) {
            for (std::uint32_t c = 0; c < grid.cols; ++c) {
                const auto index = patch_index_of(grid, r, c);
                ASSERT_LT(index, grid.size());
                EXPECT_FALSE(seen[index]);
                seen[index] = true;
                EXPECT_EQ(coord_of(grid, index), (GridCoord{r, c}));
            }
        }
    }
}

TEST(AttentionStack, ShapeChecks) {
    EXPECT_THROW(AttentionStack(StackShape{1, 1, 3, 0, TokenGrid{1, 2}}, std::vector<float>(9, 1.0f / 3)),
                 GeometryError);
    EXPECT_THROW(AttentionStack(StackShape{1, 1, 2, 0, TokenGrid{1, 2}}, std::vector<float>(3, 0.5f)), GeometryError);
    EXPECT_THROW(AttentionStack(StackShape{1, 1, 3, 2, TokenGrid{1, 1}}, std::vector<float>(9, 1.0f / 3)),
                 FormatError);
    EXPECT_THROW(AttentionStack(StackShape{0, 1, 2, 0, TokenGrid{1, 2}}, {}), FormatError);
}

TEST(AttentionStack, Accessors) {
    const auto stack = testing::single_layer({0.2f, 0.8f, 0.6f, 0.4f}, 2, 0, TokenGrid{1, 2});
    EXPECT_FLOAT_EQ(stack.at(0, 0, 1, 0), 0.6f);
    EXPECT_EQ(stack.row(0, 0, 1).size(), 2u);
    EXPECT_FLOAT_EQ(stack.row(0, 0, 0)[1], 0.8f);
    EXPECT_THROW(stack.at(1, 0, 0, 0), BoundsError);
    EXPECT_THROW(stack.row(0, 1, 0), BoundsError);
}

TEST(Validate, AcceptsUniformRows) {
    EXPECT_NO_THROW(validate_stack(uniform_pair()));
}

TEST(Validate, ReportsFirstBadRow) {
    const auto stack = testing::single_layer({0.7f, 0.7f, 0.5f, 0.5f}, 2, 0, TokenGrid{1, 2});
    try {
        validate_stack(stack);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        ASSERT_TRUE(e.where().has_value());
        EXPECT_EQ(*e.where(), (RowLocation{0, 0, 0}));
    }
}

TEST(Validate, LocatesLaterRow) {
    std::vector<float> values(2 * 4, 0.5f);
    values[4 + 1 * 2 + 0] = 0.9f;  // layer 1, head 0, query 1
    const AttentionStack stack(StackShape{2, 1, 2, 0, TokenGrid{1, 2}}, values);
    try {
        validate_stack(stack);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_EQ(*e.where(), (RowLocation{1, 0, 1}));
    }
}

TEST(Validate, ToleranceBoundary) {
    EXPECT_NO_THROW(validate_stack(testing::single_layer({0.50004f, 0.5f, 0.5f, 0.5f}, 2, 0, TokenGrid{1, 2})));
    EXPECT_THROW(validate_stack(testing::single_layer({0.5003f, 0.5f, 0.5f, 0.5f}, 2, 0, TokenGrid{1, 2})),
                 ValidationError);
}

TEST(Validate, RejectsNegativeAndNonFinite) {
    EXPECT_THROW(validate_stack(testing::single_layer({-0.5f, 1.5f, 0.5f, 0.5f}, 2, 0, TokenGrid{1, 2})),
                 ValidationError);
    EXPECT_THROW(validate_stack(testing::single_layer({NAN, 0.5f, 0.5f, 0.5f}, 2, 0, TokenGrid{1, 2})),
                 ValidationError);
}

TEST(Atns, HeaderLayout) {
    const AttentionStack stack(StackShape{1, 1, 3, 1, TokenGrid{1, 2}}, std::vector<float>(9, 1.0f / 3));
    const auto bytes = encode_stack(stack);
    ASSERT_EQ(bytes.size(), kAtnsHeaderSize + 9 * 4);
    EXPECT_EQ(bytes.substr(0, 4), "ATNS");
    const unsigned char expected[] = {1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 3, 0, 0, 0, 1, 0, 2, 0, 1, 0};
    EXPECT_EQ(std::memcmp(bytes.data() + 4, expected, sizeof(expected)), 0);
    float first = 0;
    std::memcpy(&first, bytes.data() + kAtnsHeaderSize, 4);
    EXPECT_EQ(first, 1.0f / 3);
}

TEST(Atns, RoundTripInMemoryIsBitExact) {
    FixtureRng rng(11);
    const auto stack = testing::random_stack(rng, 3, 2, TokenGrid{3, 4}, true);
    const auto decoded = decode_stack(encode_stack(stack));
    EXPECT_EQ(decoded, stack);
    EXPECT_EQ(std::memcmp(decoded.values().data(), stack.values().data(), stack.values().size_bytes()), 0);
}

TEST(Atns, RoundTripThroughFile) {
    TempDir dir;
    FixtureRng rng(12);
    const auto stack = testing::random_stack(rng, 2, 3, TokenGrid{2, 5}, false);
    write_stack(stack, dir / "s.atns");
    EXPECT_EQ(std::filesystem::file_size(dir / "s.atns"), encoded_stack_size(stack.shape()));
    EXPECT_EQ(read_stack_shape(dir / "s.atns"), stack.shape());
    EXPECT_EQ(read_stack(dir / "s.atns"), stack);
}

TEST(Atns, MinimalFileParses) {
    TempDir dir;
    write_stack(uniform_pair(), dir / "m.atns");
    const auto stack = read_stack(dir / "m.atns");
    EXPECT_EQ(stack.n_total(), 2u);
    EXPECT_EQ(stack.cls_count(), 0);
}

TEST(Atns, BadRowRejectedUnlessValidationOff) {
    TempDir dir;
    const auto bad = testing::single_layer({0.7f, 0.7f, 0.5f, 0.5f}, 2, 0, TokenGrid{1, 2});
    write_stack(bad, dir / "bad.atns");
    try {
        read_stack(dir / "bad.atns");
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_EQ(*e.where(), (RowLocation{0, 0, 0}));
    }
    EXPECT_EQ(read_stack(dir / "bad.atns", ReadOptions{false}), bad);
}

TEST(Atns, MalformedHeaders) {
    auto bytes = encode_stack(uniform_pair());
    EXPECT_THROW(decode_stack(bytes.substr(0, 10)), FormatError);

    auto wrong_magic = bytes;
    wrong_magic[0] = 'X';
    EXPECT_THROW(decode_stack(wrong_magic), FormatError);

    auto wrong_version = bytes;
    wrong_version[4] = 2;
    EXPECT_THROW(decode_stack(wrong_version), FormatError);

    auto reserved = bytes;
    reserved[25] = 1;
    EXPECT_THROW(decode_stack(reserved), FormatError);

    EXPECT_THROW(decode_stack(bytes.substr(0, bytes.size() - 1)), FormatError);
    EXPECT_THROW(decode_stack(bytes + "x"), FormatError);
}

TEST(Atns, GeometryMismatchInHeader) {
    auto bytes = encode_stack(uniform_pair());
    bytes[20] = 3;  // cols = 3, so rows*cols != n_total - cls_count
    EXPECT_THROW(decode_stack(bytes), GeometryError);
}

TEST(Atns, TruncatedFileOnDisk) {
    TempDir dir;
    const auto bytes = encode_stack(uniform_pair());
    write_file_atomic(dir / "t.atns", std::string_view(bytes).substr(0, bytes.size() - 4));
    EXPECT_THROW(read_stack(dir / "t.atns"), FormatError);
}

TEST(Atns, MissingAndUnwritablePaths) {
    TempDir dir;
    EXPECT_THROW(read_stack(dir / "absent.atns"), IoError);
    EXPECT_THROW(write_stack(uniform_pair(), dir / "no" / "such" / "dir" / "x.atns"), IoError);
}

TEST(Manifest, SidecarRoundTrip) {
    TempDir dir;
    const auto stack_path = dir / "x.atns";
    EXPECT_EQ(manifest_path_for(stack_path), dir / "x.atns.json");
    EXPECT_FALSE(read_manifest(stack_path).has_value());
    const Provenance provenance{{"model", "tiny-vit"}, {"revision", "abc123"}};
    write_manifest(stack_path, provenance);
    EXPECT_EQ(read_manifest(stack_path), provenance);
}

TEST(Manifest, RejectsNonObject) {
    TempDir dir;
    write_file_atomic(dir / "x.atns.json", "[1,2]");
    EXPECT_THROW(read_manifest(dir / "x.atns"), FormatError);
}

}  // namespace
}  // namespace hiprune
