// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#include "hivtp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hivtp/error.hpp"

namespace hivtp::synth {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const auto parsed = std::stoull(value, &used, 0);
        if (used == value.size() && value.find('-') == std::string::npos) {
            return parsed;
        }
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::InvalidSpec, "bad value for " + key + ": \"" + value + "\"");
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double parsed = std::stod(value, &used);
        if (used == value.size()) {
            return parsed;
        }
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::InvalidSpec, "bad value for " + key + ": \"" + value + "\"");
}

Peak parse_peak(const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream stream(value);
    for (std::string part; std::getline(stream, part, ',');) {
        parts.push_back(trim(part));
    }
    if (parts.size() != 4) {
        throw Error(ErrorCode::InvalidSpec, "peak needs row,col,amplitude,radius: \"" + value + "\"");
    }
    return Peak{static_cast<std::size_t>(to_u64("peak", parts[0])), static_cast<std::size_t>(to_u64("peak", parts[1])),
                to_double("peak", parts[2]), to_double("peak", parts[3])};
}

}  // namespace

double SplitMix64::normal() {
    const double u1 = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void SynthSpec::validate() const {
    if (grid_side < 2) {
        throw Error(ErrorCode::InvalidSpec, "grid side must be at least 2");
    }
    if (layers == 0 || heads == 0 || token_dim == 0) {
        throw Error(ErrorCode::InvalidSpec, "layers, heads and token dim must be positive");
    }
    if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
        throw Error(ErrorCode::InvalidSpec, "noise scale must be finite and non-negative");
    }
    for (const auto& peak : peaks) {
        if (peak.row >= grid_side || peak.col >= grid_side) {
            throw Error(ErrorCode::InvalidSpec, "peak (" + std::to_string(peak.row) + ", " + std::to_string(peak.col) +
                                                    ") lies outside the grid");
        }
        if (!(peak.amplitude > 0.0) || !std::isfinite(peak.amplitude)) {
            throw Error(ErrorCode::InvalidSpec, "peak amplitude must be positive");
        }
        if (!(peak.radius > 0.0) || !std::isfinite(peak.radius)) {
            throw Error(ErrorCode::InvalidSpec, "peak radius must be positive");
        }
    }
    const std::uint64_t tokens = grid_side * grid_side + 1;
    if (static_cast<double>(layers) * static_cast<double>(heads) * static_cast<double>(tokens) *
            static_cast<double>(tokens) >
        static_cast<double>(io::kMaxElements)) {
        throw Error(ErrorCode::InvalidSpec, "attention stack would exceed 2^31 elements");
    }
}

SynthSample generate(const SynthSpec& spec) {
    spec.validate();
    const std::size_t n = spec.grid_side;
    const std::size_t visual = n * n;
    const std::size_t tokens = visual + 1;

    std::vector<double> bump(visual, 0.0);
    for (std::size_t t = 0; t < visual; ++t) {
        const double row = static_cast<double>(t / n);
        const double col = static_cast<double>(t % n);
        for (const auto& peak : spec.peaks) {
            const double dr = row - static_cast<double>(peak.row);
            const double dc = col - static_cast<double>(peak.col);
            bump[t] += peak.amplitude * std::exp(-(dr * dr + dc * dc) / (2.0 * peak.radius * peak.radius));
        }
    }

    SplitMix64 rng(spec.seed);
    std::vector<float> weights(spec.layers * spec.heads * tokens * tokens);
    std::vector<double> logits(tokens);
    std::size_t offset = 0;
    for (std::size_t row = 0; row < spec.layers * spec.heads * tokens; ++row) {
        logits[0] = spec.noise_scale * rng.normal();
        for (std::size_t t = 0; t < visual; ++t) {
            logits[t + 1] = bump[t] + spec.noise_scale * rng.normal();
        }
        const double peak = *std::max_element(logits.begin(), logits.end());
        double total = 0.0;
        for (auto& v : logits) {
            v = std::exp(v - peak);
            total += v;
        }
        for (std::size_t t = 0; t < tokens; ++t) {
            weights[offset + t] = static_cast<float>(logits[t] / total);
        }
        offset += tokens;
    }

    std::vector<float> embeddings(visual * spec.token_dim);
    for (auto& v : embeddings) {
        v = static_cast<float>(rng.normal());
    }

    const auto t32 = static_cast<std::uint32_t>(tokens);
    return SynthSample{
        AttentionStack(io::TensorBuffer(
            {static_cast<std::uint32_t>(spec.layers), static_cast<std::uint32_t>(spec.heads), t32, t32},
            std::move(weights))),
        TokenMatrix(io::TensorBuffer({static_cast<std::uint32_t>(visual), static_cast<std::uint32_t>(spec.token_dim)},
                                     std::move(embeddings))),
    };
}

std::vector<Peak> peaks_per_region(std::uint64_t seed,
                                   std::size_t grid_side,
                                   std::size_t region_divisor,
                                   double amplitude,
                                   double radius) {
    if (region_divisor == 0 || grid_side % region_divisor != 0) {
        throw Error(ErrorCode::NotDivisible, "grid side " + std::to_string(grid_side) +
                                                 " is not divisible by region divisor " +
                                                 std::to_string(region_divisor));
    }
    const std::size_t side = grid_side / region_divisor;
    // Keep peaks one cell off the region border so neighbouring bumps cannot
    // outscore a peak inside its own region.
    const std::size_t margin = side >= 3 ? 1 : 0;
    const auto span = static_cast<std::uint32_t>(side - 2 * margin);
    SplitMix64 rng(seed);
    std::vector<Peak> peaks;
    for (std::size_t br = 0; br < region_divisor; ++br) {
        for (std::size_t bc = 0; bc < region_divisor; ++bc) {
            const auto dr = margin + rng.below(span);
            const auto dc = margin + rng.below(span);
            peaks.push_back(Peak{br * side + dr, bc * side + dc, amplitude, radius});
        }
    }
    return peaks;
}

ImportanceScores random_scores(std::uint64_t seed, std::size_t count, std::uint32_t levels) {
    SplitMix64 rng(seed);
    ImportanceScores scores;
    scores.values.resize(count);
    for (auto& v : scores.values) {
        v = levels == 0 ? rng.uniform() : static_cast<double>(rng.below(levels)) / levels;
    }
    return scores;
}

SynthSpec parse_spec_text(const std::string& text, SynthSpec base) {
    std::stringstream stream(text);
    bool peaks_replaced = false;
    std::size_t line_number = 0;
    for (std::string line; std::getline(stream, line);) {
        ++line_number;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::InvalidSpec, "line " + std::to_string(line_number) + ": expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "seed") {
            base.seed = to_u64(key, value);
        } else if (key == "grid") {
            base.grid_side = to_u64(key, value);
        } else if (key == "layers") {
            base.layers = to_u64(key, value);
        } else if (key == "heads") {
            base.heads = to_u64(key, value);
        } else if (key == "noise") {
            base.noise_scale = to_double(key, value);
        } else if (key == "dim") {
            base.token_dim = to_u64(key, value);
        } else if (key == "peak") {
            if (!peaks_replaced) {
                base.peaks.clear();
                peaks_replaced = true;
            }
            base.peaks.push_back(parse_peak(value));
        } else {
            throw Error(ErrorCode::InvalidSpec, "line " + std::to_string(line_number) + ": unknown key \"" + key + "\"");
        }
    }
    return base;
}

}  // namespace hivtp::synth
