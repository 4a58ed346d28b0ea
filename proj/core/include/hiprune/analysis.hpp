// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "hiprune/attention_store.hpp"
#include "hiprune/scoring.hpp"

namespace hiprune {

/// Share of top-scoring tokens compared against object masks and used for
/// dispersion unless a caller overrides it.
inline constexpr double kDefaultTopFraction = 0.1;

/// Per-patch object mask; nonzero marks an object patch.
struct SegMask {
    TokenGrid grid;
    std::vector<std::uint8_t> values;

    /// Ascending indices of object patches.
    std::vector<std::uint32_t> object_indices() const;
};

/// Parses a binary PGM (P5) or a raw byte dump of rows*cols bytes. The image
/// must match `grid` exactly; otherwise GeometryError.
SegMask decode_mask(std::string_view bytes, const TokenGrid& grid);
SegMask read_mask(const std::filesystem::path& path, const TokenGrid& grid);

/// The ceil(fraction * n) highest scores, ascending by index, lower index
/// first on ties. Throws ConfigError unless 0 < fraction <= 1.
std::vector<std::uint32_t> top_fraction_indices(const ScoreVector& scores, double fraction);

/// |A ∩ B| / |A ∪ B| for ascending index sets; 0 when both are empty.
double set_iou(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

double iou_with_mask(const ScoreVector& scores, const SegMask& mask, double fraction = kDefaultTopFraction);

/// IoU per requested layer divided by the IoU at layer L/2. Entries are empty
/// when the mid-layer IoU is zero. The mid layer must be among `layers`.
std::vector<std::optional<double>> normalized_layer_iou(const AttentionStack& stack, const SegMask& mask,
                                                        std::span<const std::uint32_t> layers,
                                                        double fraction = kDefaultTopFraction,
                                                        const ScoreOptions& options = {});

/// Mean Euclidean distance, in patch units, over unordered pairs.
double mean_pairwise_distance(std::span<const std::uint32_t> indices, const TokenGrid& grid);

double dispersion(const ScoreVector& scores, const TokenGrid& grid, double fraction = kDefaultTopFraction);

std::vector<double> dispersion_curve(const AttentionStack& stack, double fraction = kDefaultTopFraction,
                                     const ScoreOptions& options = {});

/// Half-open layer interval [begin, end).
struct LayerRange {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;

    std::uint32_t size() const noexcept {
        return end - begin;
    }
    bool contains(std::uint32_t layer) const noexcept {
        return layer >= begin && layer < end;
    }

    friend bool operator==(const LayerRange&, const LayerRange&) = default;
};

struct LayerPartition {
    LayerRange shallow;
    LayerRange middle;
    LayerRange deep;
    std::uint32_t object_layer = 0;
    /// False when the object layer comes from the round(3L/8) heuristic.
    bool from_preset = false;
};

/// Known encoder depths map to fixed object layers (24 -> 9, 32 -> 16);
/// other depths use round(3L/8).
std::uint32_t default_object_layer(std::uint32_t layers) noexcept;
bool has_object_layer_preset(std::uint32_t layers) noexcept;

/// shallow = [0, ceil(L/6)), middle ends (exclusive) at the object layer,
/// deep is the rest. Each range holds at least one layer. Throws ConfigError
/// for L < 3.
LayerPartition default_partition(std::uint32_t layers);

}  // namespace hiprune
