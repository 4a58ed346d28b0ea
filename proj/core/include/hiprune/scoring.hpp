// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hiprune/attention_store.hpp"

namespace hiprune {

/// Per-patch importance at one layer (class token excluded).
struct ScoreVector {
    std::uint32_t layer = 0;
    std::vector<double> values;

    std::size_t size() const noexcept {
        return values.size();
    }
};

/// Ascending ranks; a permutation of 0..n-1.
struct RankVector {
    std::vector<std::uint32_t> values;

    friend bool operator==(const RankVector&, const RankVector&) = default;
};

struct ScoreOptions {
    /// Sum the class-token query row into every key's score. Turning this off
    /// restricts the sum to patch queries only.
    bool include_cls_queries = true;
};

/// Head-averaged column sums of one layer's attention:
///   values[k] = (1/H) * sum_h sum_q A[layer][h][q][k + cls_count].
/// Throws BoundsError for a layer outside the stack.
ScoreVector aggregate_scores(const AttentionStack& stack, std::uint32_t layer, const ScoreOptions& options = {});

/// Head-averaged attention of the class-token query onto each patch.
/// Throws UnsupportedError when the stack has no class token.
ScoreVector cls_scores(const AttentionStack& stack, std::uint32_t layer);

/// Indices of the `k` largest scores, returned in ascending index order.
/// Equal scores resolve lower-index-first. Throws BoundsError when k > size
/// and ValidationError on non-finite scores.
std::vector<std::uint32_t> top_k_indices(std::span<const double> scores, std::size_t k);

/// `argsort(argsort(scores))` with a stable sort: ties rank lower index first.
RankVector rank_transform(std::span<const double> scores);
inline RankVector rank_transform(const ScoreVector& scores) {
    return rank_transform(scores.values);
}

/// One rank row per layer, row-major [layers, patches].
class RankMatrix {
public:
    RankMatrix(std::uint32_t layers, std::uint32_t patches, std::vector<std::uint32_t> values);

    std::uint32_t layers() const noexcept {
        return m_layers;
    }
    std::uint32_t patches() const noexcept {
        return m_patches;
    }
    std::span<const std::uint32_t> row(std::uint32_t layer) const;
    std::span<const std::uint32_t> values() const noexcept {
        return m_values;
    }

private:
    std::uint32_t m_layers;
    std::uint32_t m_patches;
    std::vector<std::uint32_t> m_values;
};

RankMatrix rank_trajectory(const AttentionStack& stack, const ScoreOptions& options = {});

/// One line per layer, comma-separated ranks, no header.
std::string rank_matrix_csv(const RankMatrix& ranks);

/// Raw little-endian u32 values, row-major, no header.
std::string rank_matrix_u32(const RankMatrix& ranks);

}  // namespace hiprune
