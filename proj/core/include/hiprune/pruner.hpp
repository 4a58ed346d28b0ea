// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hiprune/attention_store.hpp"
#include "hiprune/scoring.hpp"
#include "hiprune/token_matrix.hpp"

namespace hiprune {

/// Neighbourhood retained around every anchor.
enum class BufferScheme {
    cross4,   // left, right, up, down
    square8,  // all eight surrounding cells
    row2,     // left, right
};

/// How neighbour indices near the grid edge are treated.
enum class BoundaryMode {
    paper_intersect,  // keep any flat index in [0, n); +/-1 may wrap across rows
    grid_aware,       // drop neighbours that leave the grid in either direction
    clamp,            // clamp flat indices into [0, n-1], then dedup
};

/// Which attention signal ranks tokens.
enum class AttentionPattern {
    global,  // column sums over all queries, averaged over heads
    cls,     // class-token query row only
};

struct TokenTypes {
    bool anchors = true;
    bool buffers = true;
    bool registers = true;
};

struct HiPruneConfig {
    std::uint32_t budget = 192;
    std::uint32_t object_layer = 9;
    double alpha = 0.1;
    BufferScheme scheme = BufferScheme::cross4;
    BoundaryMode boundary_mode = BoundaryMode::paper_intersect;
    bool include_cls_queries = true;
    AttentionPattern pattern = AttentionPattern::global;
    /// Ablation switches. Without buffers the whole object share goes to
    /// anchors; without registers the remaining budget is filled from the
    /// object layer instead of the last layer.
    TokenTypes token_types;
};

/// Throws ConfigError for budget == 0 or alpha outside [0, 1].
void validate_config(const HiPruneConfig& config);

struct GridOffset {
    int drow = 0;
    int dcol = 0;
};

std::span<const GridOffset> neighbor_offsets(BufferScheme scheme) noexcept;

/// 1 anchor plus its neighbours: 5, 9 and 3 for cross4, square8 and row2.
std::uint32_t cluster_size(BufferScheme scheme) noexcept;

/// round_half_away_from_zero(alpha * budget / cluster). The cluster is 1 when
/// buffers are disabled and the count is 0 when anchors are disabled.
std::size_t anchor_count(const HiPruneConfig& config);

/// Top `n_anchors` object-layer indices, ascending. Throws BoundsError when
/// n_anchors exceeds the number of scores.
std::vector<std::uint32_t> select_anchors(const ScoreVector& scores, std::size_t n_anchors);

/// Raw neighbour set of the anchors (ascending, deduplicated). May contain
/// anchor indices; callers subtract them.
std::vector<std::uint32_t> expand_buffers(std::span<const std::uint32_t> anchors, const TokenGrid& grid,
                                          BufferScheme scheme, BoundaryMode mode);

/// Top `k` last-layer indices outside `excluded`, ascending. Throws
/// BoundsError when fewer than k candidates remain.
std::vector<std::uint32_t> select_registers(const ScoreVector& scores_last, std::span<const std::uint32_t> excluded,
                                            std::size_t k);

struct Selection {
    std::vector<std::uint32_t> anchors;
    std::vector<std::uint32_t> buffers;    // neighbours that are not anchors
    std::vector<std::uint32_t> registers;
    std::vector<std::uint32_t> retained;   // anchors, then buffers, then registers

    friend bool operator==(const Selection&, const Selection&) = default;
};

struct PruneResult {
    Selection selection;
    std::optional<TokenMatrix> tokens;
    std::vector<std::string> warnings;
};

/// Selection from precomputed scores. `object_scores` drives anchors and
/// buffers, `register_scores` drives registers; both must match grid.size().
PruneResult prune_scores(const ScoreVector& object_scores, const ScoreVector& register_scores, const TokenGrid& grid,
                         const HiPruneConfig& config);

/// Full pipeline on a stack. Registers come from the stack's last layer.
/// When `tokens` is given the pruned matrix holds its rows in retained order.
PruneResult prune(const AttentionStack& stack, const TokenMatrix* tokens, const HiPruneConfig& config);

inline PruneResult prune(const AttentionStack& stack, const HiPruneConfig& config) {
    return prune(stack, nullptr, config);
}

/// Splits `total` across items proportionally to `weights` with the
/// largest-remainder method; ties in remainder favour the earlier item.
std::vector<std::uint32_t> apportion_budget(std::uint32_t total, std::span<const std::size_t> weights);

// Selection JSON: {"anchors":[..],"buffers":[..],"registers":[..],"retained":[..]}
std::string selection_to_json(const Selection& selection);
Selection selection_from_json(std::string_view text);

std::string_view to_string(BufferScheme scheme) noexcept;
std::string_view to_string(BoundaryMode mode) noexcept;
std::string_view to_string(AttentionPattern pattern) noexcept;
std::optional<BufferScheme> parse_buffer_scheme(std::string_view text) noexcept;
std::optional<BoundaryMode> parse_boundary_mode(std::string_view text) noexcept;
std::optional<AttentionPattern> parse_attention_pattern(std::string_view text) noexcept;

}  // namespace hiprune
