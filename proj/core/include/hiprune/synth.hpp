// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hiprune/analysis.hpp"
#include "hiprune/attention_store.hpp"

namespace hiprune {

/// Deterministic random source for fixtures.
///
/// Bits come from std::mt19937_64, whose output sequence is fixed by the C++
/// standard (it is the reference MT19937-64 with its standard seeding).
/// Reals are formed from the top 53 bits: uniform() = (x >> 11) * 2^-53, so
/// any MT19937-64 implementation reproduces the same stream.
class FixtureRng {
public:
    explicit FixtureRng(std::uint64_t seed) : m_engine(seed) {}

    std::uint64_t next() {
        return m_engine();
    }
    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(m_engine() >> 11) * 0x1.0p-53;
    }
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }
    /// Uniform integer in [0, bound) by modulo reduction; bound must be > 0.
    std::uint64_t below(std::uint64_t bound) {
        return m_engine() % bound;
    }

private:
    std::mt19937_64 m_engine;
};

/// Rectangle of patches, in grid coordinates.
struct PatchBlock {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    std::uint32_t height = 1;
    std::uint32_t width = 1;

    bool contains(const GridCoord& at) const noexcept {
        return at.row >= row && at.row < row + height && at.col >= col && at.col < col + width;
    }
};

/// Recipe for a synthetic attention stack.
///
/// Every logit starts as uniform noise in [-1, 1). In `object_layers` the keys
/// inside `object_block` get `+object_gain`. With `deep_dispersion` the layers
/// after the object layers (or just the last layer when `object_layers` is
/// empty) give `+kDeepGain` to a stride-3 lattice of keys spread over the whole
/// grid. Rows are then soft-maxed. Since noise spans at most 2, any boost
/// above 2 puts every boosted key above every other key in each row, hence in
/// the aggregated scores as well.
struct SynthSpec {
    TokenGrid grid{8, 8};
    std::uint32_t layers = 12;
    std::uint32_t heads = 2;
    std::uint64_t seed = 0;
    bool cls_token = false;
    std::optional<PatchBlock> object_block;
    LayerRange object_layers;
    double object_gain = 6.0;
    bool deep_dispersion = false;
};

inline constexpr double kSynthNoiseAmplitude = 1.0;
inline constexpr double kDeepGain = 4.0;
inline constexpr std::uint32_t kDeepLatticeStride = 3;

/// Throws GeometryError / ConfigError for an inconsistent spec.
void validate_synth_spec(const SynthSpec& spec);

/// Layers receiving the dispersed lattice boost (empty unless deep_dispersion).
LayerRange deep_layers(const SynthSpec& spec);

/// Row-wise softmax over [heads, n, n] logits with max subtraction. Throws
/// ValidationError on non-finite logits or a size mismatch.
std::vector<double> softmax_attention(std::span<const double> logits, std::uint32_t heads, std::uint32_t n);

/// Pure function of the spec: equal specs give bit-identical stacks.
AttentionStack generate(const SynthSpec& spec);

SynthSpec synth_spec_from_json(std::string_view text);
std::string synth_spec_to_json(const SynthSpec& spec);

}  // namespace hiprune
