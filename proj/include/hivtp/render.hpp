// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hivtp/importance.hpp"
#include "hivtp/pruner.hpp"

namespace hivtp::render {

struct Rgb {
    std::uint8_t r, g, b;
    bool operator==(const Rgb&) const = default;
};

inline constexpr Rgb kGlobalColor{0, 255, 0};
inline constexpr Rgb kLocalColor{255, 0, 0};
inline constexpr Rgb kPrunedColor{40, 40, 40};

/// Binary PGM (P5, maxval 255) heatmap, one cell_px square per token.
///
/// Scores are min-max normalised per image and rounded half-up
/// (floor(255 * t + 0.5)); a constant score vector renders as 128.
/// `comment` becomes the single "# ..." header line.
std::vector<std::uint8_t> render_heatmap(const ImportanceScores& scores,
                                         std::size_t grid_side,
                                         std::size_t cell_px,
                                         const std::string& comment = "hivtp heatmap");

/// Binary PPM (P6) selection mask: global tokens green, local red, pruned dark gray.
std::vector<std::uint8_t> render_mask(const SelectionResult& result,
                                      std::size_t grid_side,
                                      std::size_t cell_px,
                                      const std::string& comment = "hivtp mask");

/// Decoded P5/P6 image, used by tests and tooling.
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t channels = 0;
    std::string comment;
    std::vector<std::uint8_t> pixels;
};

/// Parses exactly what render_heatmap / render_mask emit.
Image parse_netpbm(const std::vector<std::uint8_t>& bytes);

}  // namespace hivtp::render
