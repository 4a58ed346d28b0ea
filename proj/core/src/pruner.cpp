// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hiprune/pruner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hiprune/error.hpp"

namespace hiprune {

namespace {

constexpr std::array<GridOffset, 4> kCross4{{{0, -1}, {0, 1}, {-1, 0}, {1, 0}}};
constexpr std::array<GridOffset, 8> kSquare8{{{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};
constexpr std::array<GridOffset, 2> kRow2{{{0, -1}, {0, 1}}};

std::vector<std::uint32_t> set_difference(const std::vector<std::uint32_t>& sorted_a,
                                          const std::vector<std::uint32_t>& sorted_b) {
    std::vector<std::uint32_t> out;
    std::set_difference(sorted_a.begin(), sorted_a.end(), sorted_b.begin(), sorted_b.end(), std::back_inserter(out));
    return out;
}

}  // namespace

void validate_config(const HiPruneConfig& config) {
    if (config.budget == 0) {
        throw ConfigError("budget must be at least 1");
    }
    if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) {
        throw ConfigError("alpha must lie in [0, 1], got " + std::to_string(config.alpha));
    }
}

std::span<const GridOffset> neighbor_offsets(BufferScheme scheme) noexcept {
    switch (scheme) {
    case BufferScheme::cross4:
        return kCross4;
    case BufferScheme::square8:
        return kSquare8;
    case BufferScheme::row2:
        return kRow2;
    }
    return {};
}

std::uint32_t cluster_size(BufferScheme scheme) noexcept {
    return 1 + static_cast<std::uint32_t>(neighbor_offsets(scheme).size());
}

std::size_t anchor_count(const HiPruneConfig& config) {
    if (!config.token_types.anchors) {
        return 0;
    }
    const double cluster = config.token_types.buffers ? cluster_size(config.scheme) : 1.0;
    // std::round rounds halves away from zero.
    return static_cast<std::size_t>(std::round(config.alpha * config.budget / cluster));
}

std::vector<std::uint32_t> select_anchors(const ScoreVector& scores, std::size_t n_anchors) {
    return top_k_indices(scores.values, n_anchors);
}

std::vector<std::uint32_t> expand_buffers(std::span<const std::uint32_t> anchors, const TokenGrid& grid,
                                          BufferScheme scheme, BoundaryMode mode) {
    const auto n = static_cast<std::int64_t>(grid.size());
    const auto cols = static_cast<std::int64_t>(grid.cols);
    std::vector<std::uint32_t> out;
    out.reserve(anchors.size() * neighbor_offsets(scheme).size());
    for (const auto anchor : anchors) {
        const auto at = coord_of(grid, anchor);
        for (const auto& offset : neighbor_offsets(scheme)) {
            switch (mode) {
            case BoundaryMode::paper_intersect: {
                const std::int64_t flat = std::int64_t{anchor} + offset.drow * cols + offset.dcol;
                if (flat >= 0 && flat < n) {
                    out.push_back(static_cast<std::uint32_t>(flat));
                }
                break;
            }
            case BoundaryMode::grid_aware: {
                const std::int64_t row = std::int64_t{at.row} + offset.drow;
                const std::int64_t col = std::int64_t{at.col} + offset.dcol;
                if (row >= 0 && row < grid.rows && col >= 0 && col < cols) {
                    out.push_back(static_cast<std::uint32_t>(row * cols + col));
                }
                break;
            }
            case BoundaryMode::clamp: {
                const std::int64_t flat = std::int64_t{anchor} + offset.drow * cols + offset.dcol;
                out.push_back(static_cast<std::uint32_t>(std::clamp<std::int64_t>(flat, 0, n - 1)));
                break;
            }
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<std::uint32_t> select_registers(const ScoreVector& scores_last, std::span<const std::uint32_t> excluded,
                                            std::size_t k) {
    const auto n = scores_last.values.size();
    std::vector<bool> masked(n, false);
    for (const auto index : excluded) {
        if (index >= n) {
            throw BoundsError("excluded index " + std::to_string(index) + " outside " + std::to_string(n) + " scores");
        }
        masked[index] = true;
    }
    std::vector<std::uint32_t> candidates;
    std::vector<double> candidate_scores;
    candidates.reserve(n);
    candidate_scores.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        if (!masked[i]) {
            candidates.push_back(i);
            candidate_scores.push_back(scores_last.values[i]);
        }
    }
    if (k > candidates.size()) {
        throw BoundsError("need " + std::to_string(k) + " registers but only " + std::to_string(candidates.size()) +
                          " tokens remain");
    }
    // Candidates are in ascending index order, so positional ties match index ties.
    auto picked = top_k_indices(candidate_scores, k);
    for (auto& p : picked) {
        p = candidates[p];
    }
    return picked;
}

PruneResult prune_scores(const ScoreVector& object_scores, const ScoreVector& register_scores, const TokenGrid& grid,
                         const HiPruneConfig& config) {
    validate_config(config);
    const std::size_t n = grid.size();
    if (object_scores.size() != n || register_scores.size() != n) {
        throw GeometryError("score vectors of length " + std::to_string(object_scores.size()) + " and " +
                            std::to_string(register_scores.size()) + " do not match " + std::to_string(n) +
                            " patches");
    }

    PruneResult result;
    auto& sel = result.selection;
    const std::size_t budget = std::min<std::size_t>(config.budget, n);

    sel.anchors = select_anchors(object_scores, std::min({anchor_count(config), n, budget}));
    if (config.token_types.buffers && !sel.anchors.empty()) {
        sel.buffers = set_difference(expand_buffers(sel.anchors, grid, config.scheme, config.boundary_mode), sel.anchors);
    }

    if (sel.anchors.size() + sel.buffers.size() > budget) {
        const std::size_t keep = budget - sel.anchors.size();
        std::vector<double> buffer_scores;
        buffer_scores.reserve(sel.buffers.size());
        for (const auto index : sel.buffers) {
            buffer_scores.push_back(object_scores.values[index]);
        }
        auto kept = top_k_indices(buffer_scores, keep);
        for (auto& k : kept) {
            k = sel.buffers[k];
        }
        result.warnings.push_back("anchor and buffer clusters need " +
                                  std::to_string(sel.anchors.size() + sel.buffers.size()) +
                                  " tokens; buffers truncated to fit budget " + std::to_string(budget));
        sel.buffers = std::move(kept);
    }

    std::vector<std::uint32_t> chosen;
    std::merge(sel.anchors.begin(), sel.anchors.end(), sel.buffers.begin(), sel.buffers.end(),
               std::back_inserter(chosen));
    const auto& register_source = config.token_types.registers ? register_scores : object_scores;
    sel.registers = select_registers(register_source, chosen, budget - chosen.size());

    sel.retained.reserve(budget);
    sel.retained.insert(sel.retained.end(), sel.anchors.begin(), sel.anchors.end());
    sel.retained.insert(sel.retained.end(), sel.buffers.begin(), sel.buffers.end());
    sel.retained.insert(sel.retained.end(), sel.registers.begin(), sel.registers.end());
    return result;
}

PruneResult prune(const AttentionStack& stack, const TokenMatrix* tokens, const HiPruneConfig& config) {
    validate_config(config);
    if (config.object_layer >= stack.layers()) {
        throw BoundsError("object layer " + std::to_string(config.object_layer) + " outside stack of " +
                          std::to_string(stack.layers()) + " layers");
    }
    if (tokens != nullptr && tokens->n() != stack.patch_count()) {
        throw GeometryError("token matrix has " + std::to_string(tokens->n()) + " rows, grid has " +
                            std::to_string(stack.patch_count()) + " patches");
    }

    const auto score_layer = [&](std::uint32_t layer) {
        if (config.pattern == AttentionPattern::cls) {
            return cls_scores(stack, layer);
        }
        return aggregate_scores(stack, layer, ScoreOptions{config.include_cls_queries});
    };
    const auto object_scores = score_layer(config.object_layer);
    const auto register_scores = score_layer(stack.layers() - 1);

    auto result = prune_scores(object_scores, register_scores, stack.grid(), config);
    if (tokens != nullptr) {
        result.tokens = gather_rows(*tokens, result.selection.retained);
    }
    return result;
}

std::vector<std::uint32_t> apportion_budget(std::uint32_t total, std::span<const std::size_t> weights) {
    std::vector<std::uint32_t> shares(weights.size(), 0);
    const std::uint64_t weight_sum = std::accumulate(weights.begin(), weights.end(), std::uint64_t{0});
    if (weight_sum == 0) {
        return shares;
    }
    std::vector<std::uint64_t> remainders(weights.size());
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const std::uint64_t scaled = std::uint64_t{total} * weights[i];
        shares[i] = static_cast<std::uint32_t>(scaled / weight_sum);
        remainders[i] = scaled % weight_sum;
        assigned += shares[i];
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
    for (std::size_t i = 0; assigned < total; ++i, ++assigned) {
        ++shares[order[i]];
    }
    return shares;
}

std::string_view to_string(BufferScheme scheme) noexcept {
    switch (scheme) {
    case BufferScheme::cross4:
        return "cross4";
    case BufferScheme::square8:
        return "square8";
    case BufferScheme::row2:
        return "row2";
    }
    return "?";
}

std::string_view to_string(BoundaryMode mode) noexcept {
    switch (mode) {
    case BoundaryMode::paper_intersect:
        return "paper_intersect";
    case BoundaryMode::grid_aware:
        return "grid_aware";
    case BoundaryMode::clamp:
        return "clamp";
    }
    return "?";
}

std::string_view to_string(AttentionPattern pattern) noexcept {
    return pattern == AttentionPattern::cls ? "cls" : "global";
}

std::optional<BufferScheme> parse_buffer_scheme(std::string_view text) noexcept {
    for (auto s : {BufferScheme::cross4, BufferScheme::square8, BufferScheme::row2}) {
        if (to_string(s) == text) {
            return s;
        }
    }
    return std::nullopt;
}

std::optional<BoundaryMode> parse_boundary_mode(std::string_view text) noexcept {
    for (auto m : {BoundaryMode::paper_intersect, BoundaryMode::grid_aware, BoundaryMode::clamp}) {
        if (to_string(m) == text) {
            return m;
        }
    }
    return std::nullopt;
}

std::optional<AttentionPattern> parse_attention_pattern(std::string_view text) noexcept {
    for (auto p : {AttentionPattern::global, AttentionPattern::cls}) {
        if (to_string(p) == text) {
            return p;
        }
    }
    return std::nullopt;
}

}  // namespace hiprune
