// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hiprune/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "hiprune/error.hpp"
#include "hiprune/io.hpp"

namespace hiprune {

namespace {

void check_fraction(double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ConfigError("fraction must lie in (0, 1], got " + std::to_string(fraction));
    }
}

// Reads one whitespace-delimited PGM header token, skipping '#' comments.
std::string next_pgm_token(std::string_view bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        const auto c = static_cast<unsigned char>(bytes[pos]);
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') {
                ++pos;
            }
        } else if (std::isspace(c)) {
            ++pos;
        } else {
            break;
        }
    }
    const auto start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
    }
    return std::string(bytes.substr(start, pos - start));
}

std::uint32_t parse_pgm_number(const std::string& token) {
    if (token.empty() || !std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
        token.size() > 9) {
        throw FormatError("bad PGM header field '" + token + "'");
    }
    return static_cast<std::uint32_t>(std::stoul(token));
}

}  // namespace

std::vector<std::uint32_t> SegMask::object_indices() const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < values.size(); ++i) {
        if (values[i] != 0) {
            out.push_back(i);
        }
    }
    return out;
}

SegMask decode_mask(std::string_view bytes, const TokenGrid& grid) {
    SegMask mask{grid, {}};
    if (bytes.size() >= 2 && bytes.substr(0, 2) == "P5") {
        std::size_t pos = 2;
        const auto width = parse_pgm_number(next_pgm_token(bytes, pos));
        const auto height = parse_pgm_number(next_pgm_token(bytes, pos));
        const auto maxval = parse_pgm_number(next_pgm_token(bytes, pos));
        if (maxval == 0 || maxval > 65535) {
            throw FormatError("PGM maxval out of range");
        }
        ++pos;  // single whitespace byte before the raster
        if (width != grid.cols || height != grid.rows) {
            throw GeometryError("mask is " + std::to_string(height) + "x" + std::to_string(width) + ", grid is " +
                                std::to_string(grid.rows) + "x" + std::to_string(grid.cols));
        }
        const std::size_t sample_bytes = maxval < 256 ? 1 : 2;
        if (bytes.size() < pos + grid.size() * sample_bytes) {
            throw FormatError("truncated PGM raster");
        }
        mask.values.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            bool nonzero = bytes[pos + i * sample_bytes] != 0;
            if (sample_bytes == 2) {
                nonzero = nonzero || bytes[pos + i * 2 + 1] != 0;
            }
            mask.values[i] = nonzero ? 1 : 0;
        }
        return mask;
    }
    if (bytes.size() != grid.size()) {
        throw GeometryError("raw mask has " + std::to_string(bytes.size()) + " bytes, grid has " +
                            std::to_string(grid.size()) + " patches");
    }
    mask.values.reserve(bytes.size());
    for (const char c : bytes) {
        mask.values.push_back(c != 0 ? 1 : 0);
    }
    return mask;
}

SegMask read_mask(const std::filesystem::path& path, const TokenGrid& grid) {
    return decode_mask(read_file(path), grid);
}

std::vector<std::uint32_t> top_fraction_indices(const ScoreVector& scores, double fraction) {
    check_fraction(fraction);
    const std::size_t n = scores.size();
    if (n == 0) {
        return {};
    }
    // The epsilon keeps products like 0.3 * 10 = 3.0000000000000004 from rounding up.
    auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    count = std::clamp<std::size_t>(count, 1, n);
    return top_k_indices(scores.values, count);
}

double set_iou(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    std::vector<std::uint32_t> both;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
    const std::size_t unite = a.size() + b.size() - both.size();
    if (unite == 0) {
        return 0.0;
    }
    return static_cast<double>(both.size()) / static_cast<double>(unite);
}

double iou_with_mask(const ScoreVector& scores, const SegMask& mask, double fraction) {
    if (scores.size() != mask.values.size() || mask.values.size() != mask.grid.size()) {
        throw GeometryError("score vector of " + std::to_string(scores.size()) + " does not match mask of " +
                            std::to_string(mask.values.size()));
    }
    const auto selected = top_fraction_indices(scores, fraction);
    const auto object = mask.object_indices();
    return set_iou(selected, object);
}

std::vector<std::optional<double>> normalized_layer_iou(const AttentionStack& stack, const SegMask& mask,
                                                        std::span<const std::uint32_t> layers, double fraction,
                                                        const ScoreOptions& options) {
    if (mask.grid != stack.grid()) {
        throw GeometryError("mask grid does not match stack grid");
    }
    const std::uint32_t mid = stack.layers() / 2;
    if (std::find(layers.begin(), layers.end(), mid) == layers.end()) {
        throw ConfigError("layer list must include the mid layer " + std::to_string(mid));
    }
    const double mid_iou = iou_with_mask(aggregate_scores(stack, mid, options), mask, fraction);
    std::vector<std::optional<double>> out;
    out.reserve(layers.size());
    for (const auto layer : layers) {
        if (mid_iou == 0.0) {
            out.emplace_back(std::nullopt);
        } else if (layer == mid) {
            out.emplace_back(1.0);
        } else {
            out.emplace_back(iou_with_mask(aggregate_scores(stack, layer, options), mask, fraction) / mid_iou);
        }
    }
    return out;
}

double mean_pairwise_distance(std::span<const std::uint32_t> indices, const TokenGrid& grid) {
    if (indices.size() < 2) {
        return 0.0;
    }
    std::vector<GridCoord> coords;
    coords.reserve(indices.size());
    for (const auto index : indices) {
        coords.push_back(coord_of(grid, index));
    }
    double total = 0.0;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        for (std::size_t j = i + 1; j < coords.size(); ++j) {
            const double dr = double(coords[i].row) - double(coords[j].row);
            const double dc = double(coords[i].col) - double(coords[j].col);
            total += std::hypot(dr, dc);
        }
    }
    const double pairs = 0.5 * static_cast<double>(coords.size()) * static_cast<double>(coords.size() - 1);
    return total / pairs;
}

double dispersion(const ScoreVector& scores, const TokenGrid& grid, double fraction) {
    if (scores.size() != grid.size()) {
        throw GeometryError("score vector does not match grid");
    }
    return mean_pairwise_distance(top_fraction_indices(scores, fraction), grid);
}

std::vector<double> dispersion_curve(const AttentionStack& stack, double fraction, const ScoreOptions& options) {
    check_fraction(fraction);
    std::vector<double> curve;
    curve.reserve(stack.layers());
    for (std::uint32_t layer = 0; layer < stack.layers(); ++layer) {
        curve.push_back(dispersion(aggregate_scores(stack, layer, options), stack.grid(), fraction));
    }
    return curve;
}

bool has_object_layer_preset(std::uint32_t layers) noexcept {
    return layers == 24 || layers == 32;
}

std::uint32_t default_object_layer(std::uint32_t layers) noexcept {
    switch (layers) {
    case 24:
        return 9;
    case 32:
        return 16;
    default:
        return static_cast<std::uint32_t>(std::round(3.0 * layers / 8.0));
    }
}

LayerPartition default_partition(std::uint32_t layers) {
    if (layers < 3) {
        throw ConfigError("encoder too shallow to partition: " + std::to_string(layers) + " layers (need >= 3)");
    }
    LayerPartition partition;
    partition.object_layer = default_object_layer(layers);
    partition.from_preset = has_object_layer_preset(layers);
    const std::uint32_t shallow_end = (layers + 5) / 6;
    const std::uint32_t middle_end = std::clamp(partition.object_layer, shallow_end + 1, layers - 1);
    partition.shallow = {0, shallow_end};
    partition.middle = {shallow_end, middle_end};
    partition.deep = {middle_end, layers};
    return partition;
}

}  // namespace hiprune
