// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hiprune/synth.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "hiprune/error.hpp"

namespace hiprune {

void validate_synth_spec(const SynthSpec& spec) {
    if (spec.grid.rows == 0 || spec.grid.cols == 0) {
        throw GeometryError("synthetic grid must be non-empty");
    }
    if (spec.layers == 0 || spec.heads == 0) {
        throw ConfigError("synthetic stack needs at least one layer and one head");
    }
    if (spec.object_layers.begin > spec.object_layers.end || spec.object_layers.end > spec.layers) {
        throw ConfigError("object layers [" + std::to_string(spec.object_layers.begin) + ", " +
                          std::to_string(spec.object_layers.end) + ") outside " + std::to_string(spec.layers) +
                          " layers");
    }
    if (spec.object_block) {
        const auto& b = *spec.object_block;
        if (b.height == 0 || b.width == 0 || std::uint64_t{b.row} + b.height > spec.grid.rows ||
            std::uint64_t{b.col} + b.width > spec.grid.cols) {
            throw GeometryError("object block does not fit inside the grid");
        }
    }
    if (!(std::isfinite(spec.object_gain) && spec.object_gain > 0.0)) {
        throw ConfigError("object_gain must be a positive finite number");
    }
}

LayerRange deep_layers(const SynthSpec& spec) {
    if (!spec.deep_dispersion) {
        return {spec.layers, spec.layers};
    }
    if (spec.object_layers.size() == 0) {
        return {spec.layers - 1, spec.layers};
    }
    return {spec.object_layers.end, spec.layers};
}

std::vector<double> softmax_attention(std::span<const double> logits, std::uint32_t heads, std::uint32_t n) {
    if (logits.size() != std::size_t{heads} * n * n) {
        throw ValidationError("logit tensor has " + std::to_string(logits.size()) + " values, expected " +
                              std::to_string(std::size_t{heads} * n * n));
    }
    std::vector<double> out(logits.size());
    for (std::size_t row = 0; row < std::size_t{heads} * n; ++row) {
        const auto in = logits.subspan(row * n, n);
        if (!std::all_of(in.begin(), in.end(), [](double v) { return std::isfinite(v); })) {
            throw ValidationError("non-finite logit in row " + std::to_string(row));
        }
        const double peak = *std::max_element(in.begin(), in.end());
        double total = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            out[row * n + k] = std::exp(in[k] - peak);
            total += out[row * n + k];
        }
        for (std::size_t k = 0; k < n; ++k) {
            out[row * n + k] /= total;
        }
    }
    return out;
}

AttentionStack generate(const SynthSpec& spec) {
    validate_synth_spec(spec);
    FixtureRng rng(spec.seed);

    const std::uint32_t cls = spec.cls_token ? 1 : 0;
    const std::uint32_t n = static_cast<std::uint32_t>(spec.grid.size()) + cls;
    const auto deep = deep_layers(spec);

    std::uint32_t lattice_row = 0;
    std::uint32_t lattice_col = 0;
    if (spec.deep_dispersion) {
        lattice_row = static_cast<std::uint32_t>(rng.below(kDeepLatticeStride));
        lattice_col = static_cast<std::uint32_t>(rng.below(kDeepLatticeStride));
    }

    // Per-layer key boosts; the class-token key is never boosted.
    std::vector<double> boost(n);
    const auto fill_boost = [&](std::uint32_t layer) {
        std::fill(boost.begin(), boost.end(), 0.0);
        for (std::uint32_t k = cls; k < n; ++k) {
            const auto at = coord_of(spec.grid, k - cls);
            if (spec.object_block && spec.object_layers.contains(layer) && spec.object_block->contains(at)) {
                boost[k] += spec.object_gain;
            }
            if (deep.contains(layer) && at.row % kDeepLatticeStride == lattice_row &&
                at.col % kDeepLatticeStride == lattice_col) {
                boost[k] += kDeepGain;
            }
        }
    };

    StackShape shape{spec.layers, spec.heads, n, static_cast<std::uint8_t>(cls), spec.grid};
    std::vector<float> values;
    values.reserve(shape.value_count());
    std::vector<double> logits(std::size_t{spec.heads} * n * n);
    for (std::uint32_t layer = 0; layer < spec.layers; ++layer) {
        fill_boost(layer);
        for (std::size_t i = 0; i < logits.size(); ++i) {
            logits[i] = kSynthNoiseAmplitude * rng.uniform(-1.0, 1.0) + boost[i % n];
        }
        const auto probs = softmax_attention(logits, spec.heads, n);
        for (const double p : probs) {
            values.push_back(static_cast<float>(p));
        }
    }
    return AttentionStack(shape, std::move(values));
}

SynthSpec synth_spec_from_json(std::string_view text) {
    const auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ConfigError("synth spec is not a JSON object");
    }
    SynthSpec spec;
    try {
        if (doc.contains("grid")) {
            doc["grid"].at("rows").get_to(spec.grid.rows);
            doc["grid"].at("cols").get_to(spec.grid.cols);
        }
        if (doc.contains("layers")) {
            doc["layers"].get_to(spec.layers);
        }
        if (doc.contains("heads")) {
            doc["heads"].get_to(spec.heads);
        }
        if (doc.contains("seed")) {
            doc["seed"].get_to(spec.seed);
        }
        if (doc.contains("cls_token")) {
            doc["cls_token"].get_to(spec.cls_token);
        }
        if (doc.contains("object_block") && !doc["object_block"].is_null()) {
            const auto& b = doc["object_block"];
            spec.object_block = PatchBlock{b.at("row").get<std::uint32_t>(), b.at("col").get<std::uint32_t>(),
                                           b.at("height").get<std::uint32_t>(), b.at("width").get<std::uint32_t>()};
        }
        if (doc.contains("object_layers")) {
            doc["object_layers"].at("begin").get_to(spec.object_layers.begin);
            doc["object_layers"].at("end").get_to(spec.object_layers.end);
        }
        if (doc.contains("object_gain")) {
            doc["object_gain"].get_to(spec.object_gain);
        }
        if (doc.contains("deep_dispersion")) {
            doc["deep_dispersion"].get_to(spec.deep_dispersion);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("synth spec: ") + e.what());
    }
    validate_synth_spec(spec);
    return spec;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
    nlohmann::ordered_json doc;
    doc["grid"] = {{"rows", spec.grid.rows}, {"cols", spec.grid.cols}};
    doc["layers"] = spec.layers;
    doc["heads"] = spec.heads;
    doc["seed"] = spec.seed;
    doc["cls_token"] = spec.cls_token;
    if (spec.object_block) {
        const auto& b = *spec.object_block;
        doc["object_block"] = {{"row", b.row}, {"col", b.col}, {"height", b.height}, {"width", b.width}};
    } else {
        doc["object_block"] = nullptr;
    }
    doc["object_layers"] = {{"begin", spec.object_layers.begin}, {"end", spec.object_layers.end}};
    doc["object_gain"] = spec.object_gain;
    doc["deep_dispersion"] = spec.deep_dispersion;
    return doc.dump(2) + "\n";
}

}  // namespace hiprune
