// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

// Deliberately shares nothing with pruner.cpp / scoring.cpp beyond the
// public data types and validate_config.

#include "hiprune/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "hiprune/error.hpp"

namespace hiprune {

namespace {

using Index = std::uint32_t;
using IndexSet = std::vector<bool>;  // membership bitmap over patch indices

// Column sums accumulated head by head, query by query.
std::vector<double> oracle_scores(const AttentionStack& stack, std::uint32_t layer, const HiPruneConfig& config) {
    const std::uint32_t n = stack.n_total();
    const std::uint32_t cls = stack.cls_count();
    if (config.pattern == AttentionPattern::cls && cls == 0) {
        throw UnsupportedError("class-token pattern on a stack without a class token");
    }
    std::vector<double> scores(n - cls, 0.0);
    for (std::uint32_t key = cls; key < n; ++key) {
        double acc = 0.0;
        for (std::uint32_t h = 0; h < stack.heads(); ++h) {
            if (config.pattern == AttentionPattern::cls) {
                acc += stack.at(layer, h, 0, key);
                continue;
            }
            const std::uint32_t first = (cls == 1 && !config.include_cls_queries) ? 1 : 0;
            for (std::uint32_t q = first; q < n; ++q) {
                acc += stack.at(layer, h, q, key);
            }
        }
        scores[key - cls] = acc / stack.heads();
    }
    return scores;
}

// j outranks i: higher score, or equal score and lower index.
bool outranks(const std::vector<double>& s, Index j, Index i) {
    return s[j] > s[i] || (s[j] == s[i] && j < i);
}

// { i in pool : |{ j in pool : j outranks i }| < quota }
IndexSet rank_below(const std::vector<double>& s, const IndexSet& pool, std::size_t quota) {
    IndexSet out(s.size(), false);
    for (Index i = 0; i < s.size(); ++i) {
        if (!pool[i]) {
            continue;
        }
        std::size_t better = 0;
        for (Index j = 0; j < s.size(); ++j) {
            if (pool[j] && outranks(s, j, i)) {
                ++better;
            }
        }
        out[i] = better < quota;
    }
    return out;
}

std::vector<Index> members(const IndexSet& set) {
    std::vector<Index> out;
    for (Index i = 0; i < set.size(); ++i) {
        if (set[i]) {
            out.push_back(i);
        }
    }
    return out;
}

std::size_t count(const IndexSet& set) {
    return static_cast<std::size_t>(std::count(set.begin(), set.end(), true));
}

struct Step {
    long dr;
    long dc;
};

std::vector<Step> steps_for(BufferScheme scheme) {
    switch (scheme) {
    case BufferScheme::cross4:
        return {{0, -1}, {0, +1}, {-1, 0}, {+1, 0}};
    case BufferScheme::square8: {
        std::vector<Step> out;
        for (long dr = -1; dr <= 1; ++dr) {
            for (long dc = -1; dc <= 1; ++dc) {
                if (dr != 0 || dc != 0) {
                    out.push_back({dr, dc});
                }
            }
        }
        return out;
    }
    case BufferScheme::row2:
        return {{0, -1}, {0, +1}};
    }
    return {};
}

IndexSet neighbours(const IndexSet& anchors, const TokenGrid& grid, const HiPruneConfig& config) {
    const long rows = grid.rows;
    const long cols = grid.cols;
    const long n = rows * cols;
    IndexSet out(static_cast<std::size_t>(n), false);
    for (long a = 0; a < n; ++a) {
        if (!anchors[static_cast<std::size_t>(a)]) {
            continue;
        }
        for (const auto& step : steps_for(config.scheme)) {
            const long flat = a + step.dr * cols + step.dc;
            switch (config.boundary_mode) {
            case BoundaryMode::paper_intersect:
                if (0 <= flat && flat <= n - 1) {
                    out[static_cast<std::size_t>(flat)] = true;
                }
                break;
            case BoundaryMode::grid_aware: {
                const long r = a / cols + step.dr;
                const long c = a % cols + step.dc;
                if (0 <= r && r < rows && 0 <= c && c < cols) {
                    out[static_cast<std::size_t>(r * cols + c)] = true;
                }
                break;
            }
            case BoundaryMode::clamp:
                out[static_cast<std::size_t>(flat < 0 ? 0 : (flat > n - 1 ? n - 1 : flat))] = true;
                break;
            }
        }
    }
    return out;
}

}  // namespace

PruneResult oracle_prune(const AttentionStack& stack, const TokenMatrix* tokens, const HiPruneConfig& config) {
    validate_config(config);
    if (config.object_layer >= stack.layers()) {
        throw BoundsError("object layer outside stack");
    }
    const std::size_t n = stack.patch_count();
    if (tokens != nullptr && tokens->n() != n) {
        throw GeometryError("token matrix rows do not match patch count");
    }

    const auto object = oracle_scores(stack, config.object_layer, config);
    const auto last = oracle_scores(stack, stack.layers() - 1, config);
    const std::size_t budget = std::min<std::size_t>(config.budget, n);

    std::size_t n_anchor = 0;
    if (config.token_types.anchors) {
        const double cluster = config.token_types.buffers ? 1.0 + steps_for(config.scheme).size() : 1.0;
        n_anchor = static_cast<std::size_t>(std::round(config.alpha * config.budget / cluster));
    }
    n_anchor = std::min({n_anchor, n, budget});

    const IndexSet everything(n, true);
    const IndexSet anchors = rank_below(object, everything, n_anchor);

    IndexSet buffers(n, false);
    if (config.token_types.buffers && count(anchors) > 0) {
        buffers = neighbours(anchors, stack.grid(), config);
        for (std::size_t i = 0; i < n; ++i) {
            buffers[i] = buffers[i] && !anchors[i];
        }
    }

    PruneResult result;
    if (count(anchors) + count(buffers) > budget) {
        buffers = rank_below(object, buffers, budget - count(anchors));
        result.warnings.push_back("buffers truncated to fit budget");
    }

    IndexSet open(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        open[i] = !anchors[i] && !buffers[i];
    }
    const std::size_t n_register = budget - count(anchors) - count(buffers);
    const IndexSet registers = rank_below(config.token_types.registers ? last : object, open, n_register);

    auto& sel = result.selection;
    sel.anchors = members(anchors);
    sel.buffers = members(buffers);
    sel.registers = members(registers);
    for (const auto* group : {&sel.anchors, &sel.buffers, &sel.registers}) {
        sel.retained.insert(sel.retained.end(), group->begin(), group->end());
    }

    if (tokens != nullptr) {
        std::vector<float> rows;
        for (const auto index : sel.retained) {
            for (std::uint32_t d = 0; d < tokens->dim(); ++d) {
                rows.push_back(tokens->values()[std::size_t{index} * tokens->dim() + d]);
            }
        }
        result.tokens = TokenMatrix(static_cast<std::uint32_t>(sel.retained.size()), tokens->dim(), std::move(rows));
    }
    return result;
}

}  // namespace hiprune
