// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hiprune {

/// Rectangular patch grid. Flat patch index is `row * cols + col`.
struct TokenGrid {
    std::uint32_t rows = 1;
    std::uint32_t cols = 1;

    std::size_t size() const noexcept {
        return std::size_t{rows} * cols;
    }

    friend bool operator==(const TokenGrid&, const TokenGrid&) = default;
};

struct GridCoord {
    std::uint32_t row = 0;
    std::uint32_t col = 0;

    friend bool operator==(const GridCoord&, const GridCoord&) = default;
};

/// Flat index of (row, col). Throws BoundsError outside the grid.
std::size_t patch_index_of(const TokenGrid& grid, std::int64_t row, std::int64_t col);

/// Inverse of patch_index_of. Throws BoundsError for index >= grid.size().
GridCoord coord_of(const TokenGrid& grid, std::size_t index);

/// Dimensions of an attention stack. `n_total` counts the class token when
/// `cls_count == 1`; the class token always sits at token index 0.
struct StackShape {
    std::uint32_t layers = 1;
    std::uint32_t heads = 1;
    std::uint32_t n_total = 1;
    std::uint8_t cls_count = 0;
    TokenGrid grid;

    std::size_t patch_count() const noexcept {
        return grid.size();
    }
    std::size_t layer_stride() const noexcept {
        return std::size_t{heads} * n_total * n_total;
    }
    std::size_t value_count() const noexcept {
        return std::size_t{layers} * layer_stride();
    }

    friend bool operator==(const StackShape&, const StackShape&) = default;
};

/// Throws GeometryError / FormatError when the shape is internally inconsistent.
void check_shape(const StackShape& shape);

/// Per-layer multi-head attention for one image, stored as float32 in
/// [layer][head][query][key] order. Immutable once built; the constructor
/// checks geometry only, row-stochasticity is checked by validate_stack.
class AttentionStack {
public:
    AttentionStack(StackShape shape, std::vector<float> values);

    const StackShape& shape() const noexcept {
        return m_shape;
    }
    std::uint32_t layers() const noexcept {
        return m_shape.layers;
    }
    std::uint32_t heads() const noexcept {
        return m_shape.heads;
    }
    std::uint32_t n_total() const noexcept {
        return m_shape.n_total;
    }
    std::uint8_t cls_count() const noexcept {
        return m_shape.cls_count;
    }
    const TokenGrid& grid() const noexcept {
        return m_shape.grid;
    }
    std::size_t patch_count() const noexcept {
        return m_shape.patch_count();
    }

    float at(std::uint32_t layer, std::uint32_t head, std::uint32_t query, std::uint32_t key) const;

    /// One attention row (fixed layer, head, query) over all keys.
    std::span<const float> row(std::uint32_t layer, std::uint32_t head, std::uint32_t query) const;

    /// All [head][query][key] values of one layer.
    std::span<const float> layer_values(std::uint32_t layer) const;

    std::span<const float> values() const noexcept {
        return m_values;
    }

    friend bool operator==(const AttentionStack&, const AttentionStack&) = default;

private:
    StackShape m_shape;
    std::vector<float> m_values;
};

inline constexpr double kRowSumTolerance = 1e-4;

/// Checks every entry is finite and within [0, 1 + tolerance] and every row
/// sums to 1 within `tolerance`. Throws ValidationError naming the first
/// offending (layer, head, query).
void validate_stack(const AttentionStack& stack, double tolerance = kRowSumTolerance);

// ATNS file format, little-endian, no padding:
//   "ATNS" | u32 version=1 | u32 L | u32 H | u32 n_total | u16 rows | u16 cols
//   | u8 cls_count | u8 reserved=0 | L*H*n_total*n_total f32 values
inline constexpr std::uint32_t kAtnsVersion = 1;
inline constexpr std::size_t kAtnsHeaderSize = 26;

/// Exact on-disk size of a stack with this shape.
std::uintmax_t encoded_stack_size(const StackShape& shape);

struct ReadOptions {
    bool validate = true;
    double tolerance = kRowSumTolerance;
};

/// Decodes only the header; used to plan work before loading payloads.
StackShape read_stack_shape(const std::filesystem::path& path);

AttentionStack read_stack(const std::filesystem::path& path, const ReadOptions& options = {});

/// In-memory encoding, bit-identical to what write_stack puts on disk.
std::string encode_stack(const AttentionStack& stack);
AttentionStack decode_stack(std::string_view bytes, const ReadOptions& options = {});

void write_stack(const AttentionStack& stack, const std::filesystem::path& path);

/// Free-form provenance carried in an optional `<stack file>.json` sidecar.
/// Never needed to decode the stack itself.
using Provenance = std::map<std::string, std::string>;

std::filesystem::path manifest_path_for(const std::filesystem::path& stack_path);
void write_manifest(const std::filesystem::path& stack_path, const Provenance& provenance);
std::optional<Provenance> read_manifest(const std::filesystem::path& stack_path);

}  // namespace hiprune
