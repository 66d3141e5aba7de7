// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hivtp/importance.hpp"
#include "hivtp/pruner.hpp"

namespace hivtp::synth {

/// splitmix64 with the reference constants; the fixture stream must be
/// reproducible by any implementation.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : m_state(seed) {}

    std::uint64_t next() {
        m_state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = m_state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Top 53 bits scaled to [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Box-Muller cosine branch; consumes exactly two draws.
    double normal();

    /// Uniform integer in [0, bound) by multiply-shift on the top 32 bits.
    std::uint32_t below(std::uint32_t bound) {
        return static_cast<std::uint32_t>(((next() >> 32) * bound) >> 32);
    }

private:
    std::uint64_t m_state;
};

struct Peak {
    std::size_t row = 0;
    std::size_t col = 0;
    double amplitude = 8.0;
    double radius = 1.0;
};

struct SynthSpec {
    std::uint64_t seed = 42;
    std::size_t grid_side = 12;
    std::size_t layers = 12;
    std::size_t heads = 4;
    std::vector<Peak> peaks;
    double noise_scale = 0.1;
    std::size_t token_dim = 16;

    /// Throws InvalidSpec.
    void validate() const;
};

struct SynthSample {
    AttentionStack stack;
    TokenMatrix tokens;
};

/// Row-stochastic f32 attention stack and f32 standard-normal tokens.
///
/// Every row (layer-major, then head, then query row) is the softmax of
/// per-entry logits: noise_scale * N(0,1) for each of the N+1 keys, plus for
/// visual key (r, c) the sum over peaks of amplitude * exp(-d^2 / (2 radius^2)),
/// d the grid distance to the peak. One normal is drawn per key, CLS first.
/// Token values are drawn after all attention values, row-major.
SynthSample generate(const SynthSpec& spec);

/// One peak at a seeded position inside each r x r region, so each region
/// has exactly one planted hot-spot.
std::vector<Peak> peaks_per_region(std::uint64_t seed,
                                   std::size_t grid_side,
                                   std::size_t region_divisor,
                                   double amplitude,
                                   double radius);

/// Seeded scores drawn from `levels` distinct values; small level counts
/// force many ties.
ImportanceScores random_scores(std::uint64_t seed, std::size_t count, std::uint32_t levels = 0);

/// Parses key=value lines (seed, grid, layers, heads, noise, dim, and
/// repeated peak=row,col,amplitude,radius) on top of `base`. '#' starts a comment.
SynthSpec parse_spec_text(const std::string& text, SynthSpec base = {});

}  // namespace hivtp::synth
