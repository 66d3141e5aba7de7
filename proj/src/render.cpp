// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#include "hivtp/render.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hivtp/error.hpp"

namespace hivtp::render {

namespace {

std::vector<std::uint8_t> header(const char* magic, std::size_t side, const std::string& comment) {
    if (comment.find_first_of("\r\n") != std::string::npos) {
        throw Error(ErrorCode::InvalidArgument, "image comment must be a single line");
    }
    const std::string text = std::string(magic) + "\n# " + comment + "\n" + std::to_string(side) + " " +
                             std::to_string(side) + "\n255\n";
    return {text.begin(), text.end()};
}

void require_cell(std::size_t grid_side, std::size_t cell_px) {
    if (grid_side == 0 || cell_px == 0) {
        throw Error(ErrorCode::InvalidArgument, "grid side and cell size must be positive");
    }
}

}  // namespace

std::vector<std::uint8_t> render_heatmap(const ImportanceScores& scores,
                                         std::size_t grid_side,
                                         std::size_t cell_px,
                                         const std::string& comment) {
    require_cell(grid_side, cell_px);
    if (scores.size() != grid_side * grid_side) {
        throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(grid_side * grid_side) + " scores, got " +
                                                  std::to_string(scores.size()));
    }
    const auto [lo, hi] = std::minmax_element(scores.values.begin(), scores.values.end());
    const double min = *lo;
    const double range = *hi - *lo;

    std::vector<std::uint8_t> levels(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (range > 0.0) {
            const double t = (scores[i] - min) / range;
            levels[i] = static_cast<std::uint8_t>(std::clamp(std::floor(255.0 * t + 0.5), 0.0, 255.0));
        } else {
            levels[i] = 128;
        }
    }

    const std::size_t side = grid_side * cell_px;
    auto out = header("P5", side, comment);
    out.reserve(out.size() + side * side);
    for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
            out.push_back(levels[(y / cell_px) * grid_side + x / cell_px]);
        }
    }
    return out;
}

std::vector<std::uint8_t> render_mask(const SelectionResult& result,
                                      std::size_t grid_side,
                                      std::size_t cell_px,
                                      const std::string& comment) {
    require_cell(grid_side, cell_px);
    const std::size_t token_count = grid_side * grid_side;
    std::vector<Rgb> colors(token_count, kPrunedColor);
    const auto paint = [&](const IndexList& indices, Rgb color) {
        for (auto index : indices) {
            if (index >= token_count) {
                throw Error(ErrorCode::ShapeMismatch, "index " + std::to_string(index) + " outside a " +
                                                          std::to_string(grid_side) + "x" +
                                                          std::to_string(grid_side) + " grid");
            }
            colors[index] = color;
        }
    };
    paint(result.global_indices, kGlobalColor);
    paint(result.local_indices, kLocalColor);

    const std::size_t side = grid_side * cell_px;
    auto out = header("P6", side, comment);
    out.reserve(out.size() + 3 * side * side);
    for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
            const Rgb c = colors[(y / cell_px) * grid_side + x / cell_px];
            out.push_back(c.r);
            out.push_back(c.g);
            out.push_back(c.b);
        }
    }
    return out;
}

Image parse_netpbm(const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 0;
    const auto next_line = [&]() {
        const auto begin = pos;
        while (pos < bytes.size() && bytes[pos] != '\n') {
            ++pos;
        }
        if (pos == bytes.size()) {
            throw Error(ErrorCode::TruncatedPayload, "netpbm header truncated");
        }
        std::string line(bytes.begin() + static_cast<std::ptrdiff_t>(begin), bytes.begin() + static_cast<std::ptrdiff_t>(pos));
        ++pos;
        return line;
    };

    Image image;
    const std::string magic = next_line();
    if (magic == "P5") {
        image.channels = 1;
    } else if (magic == "P6") {
        image.channels = 3;
    } else {
        throw Error(ErrorCode::BadMagic, "expected P5 or P6");
    }
    std::string line = next_line();
    if (!line.empty() && line[0] == '#') {
        image.comment = line.size() > 2 ? line.substr(2) : "";
        line = next_line();
    }
    std::istringstream dims(line);
    dims >> image.width >> image.height;
    if (next_line() != "255") {
        throw Error(ErrorCode::UnsupportedDtype, "only maxval 255 is supported");
    }
    const std::size_t expected = image.width * image.height * image.channels;
    if (bytes.size() - pos != expected) {
        throw Error(ErrorCode::TruncatedPayload, "pixel payload size mismatch");
    }
    image.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
    return image;
}

}  // namespace hivtp::render
