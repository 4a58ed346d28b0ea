// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hiprune/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "byte_order.hpp"
#include "hiprune/error.hpp"

namespace hiprune {

ScoreVector aggregate_scores(const AttentionStack& stack, std::uint32_t layer, const ScoreOptions& options) {
    const auto values = stack.layer_values(layer);
    const std::size_t n = stack.n_total();
    const std::size_t cls = stack.cls_count();
    const std::size_t first_query = (cls == 1 && !options.include_cls_queries) ? 1 : 0;

    // Accumulate head-major, query-major so identical columns give identical sums.
    std::vector<double> column(n, 0.0);
    for (std::size_t h = 0; h < stack.heads(); ++h) {
        for (std::size_t q = first_query; q < n; ++q) {
            const float* row = values.data() + (h * n + q) * n;
            for (std::size_t k = 0; k < n; ++k) {
                column[k] += row[k];
            }
        }
    }

    ScoreVector scores{layer, std::vector<double>(column.begin() + static_cast<std::ptrdiff_t>(cls), column.end())};
    const double heads = stack.heads();
    for (auto& v : scores.values) {
        v /= heads;
    }
    return scores;
}

ScoreVector cls_scores(const AttentionStack& stack, std::uint32_t layer) {
    if (stack.cls_count() == 0) {
        throw UnsupportedError("class-token scores need a stack with a class token");
    }
    const auto values = stack.layer_values(layer);
    const std::size_t n = stack.n_total();
    std::vector<double> sums(n - 1, 0.0);
    for (std::size_t h = 0; h < stack.heads(); ++h) {
        const float* row = values.data() + h * n * n;
        for (std::size_t k = 1; k < n; ++k) {
            sums[k - 1] += row[k];
        }
    }
    for (auto& v : sums) {
        v /= stack.heads();
    }
    return {layer, std::move(sums)};
}

std::vector<std::uint32_t> top_k_indices(std::span<const double> scores, std::size_t k) {
    if (k > scores.size()) {
        throw BoundsError("cannot take top " + std::to_string(k) + " of " + std::to_string(scores.size()) + " scores");
    }
    if (!std::all_of(scores.begin(), scores.end(), [](double v) { return std::isfinite(v); })) {
        throw ValidationError("scores contain non-finite values");
    }
    std::vector<std::uint32_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0u);
    const auto before = [&](std::uint32_t a, std::uint32_t b) {
        return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    };
    const auto kth = order.begin() + static_cast<std::ptrdiff_t>(k);
    std::nth_element(order.begin(), kth, order.end(), before);
    order.erase(kth, order.end());
    std::sort(order.begin(), order.end());
    return order;
}

RankVector rank_transform(std::span<const double> scores) {
    std::vector<std::uint32_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return scores[a] < scores[b]; });
    RankVector ranks{std::vector<std::uint32_t>(scores.size())};
    for (std::uint32_t position = 0; position < order.size(); ++position) {
        ranks.values[order[position]] = position;
    }
    return ranks;
}

RankMatrix::RankMatrix(std::uint32_t layers, std::uint32_t patches, std::vector<std::uint32_t> values)
    : m_layers(layers),
      m_patches(patches),
      m_values(std::move(values)) {
    if (m_values.size() != std::size_t{layers} * patches) {
        throw GeometryError("rank matrix size mismatch");
    }
}

std::span<const std::uint32_t> RankMatrix::row(std::uint32_t layer) const {
    if (layer >= m_layers) {
        throw BoundsError("rank row " + std::to_string(layer) + " out of range");
    }
    return std::span<const std::uint32_t>(m_values).subspan(std::size_t{layer} * m_patches, m_patches);
}

RankMatrix rank_trajectory(const AttentionStack& stack, const ScoreOptions& options) {
    const auto patches = static_cast<std::uint32_t>(stack.patch_count());
    std::vector<std::uint32_t> values;
    values.reserve(std::size_t{stack.layers()} * patches);
    for (std::uint32_t layer = 0; layer < stack.layers(); ++layer) {
        const auto ranks = rank_transform(aggregate_scores(stack, layer, options));
        values.insert(values.end(), ranks.values.begin(), ranks.values.end());
    }
    return RankMatrix(stack.layers(), patches, std::move(values));
}

std::string rank_matrix_csv(const RankMatrix& ranks) {
    std::string out;
    for (std::uint32_t layer = 0; layer < ranks.layers(); ++layer) {
        const auto row = ranks.row(layer);
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) {
                out.push_back(',');
            }
            out += std::to_string(row[i]);
        }
        out.push_back('\n');
    }
    return out;
}

std::string rank_matrix_u32(const RankMatrix& ranks) {
    std::string out;
    out.reserve(ranks.values().size() * 4);
    for (const auto v : ranks.values()) {
        detail::put_le<std::uint32_t>(out, v);
    }
    return out;
}

}  // namespace hiprune
