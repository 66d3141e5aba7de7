// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#include "hivtp/importance.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <span>

#include "hivtp/error.hpp"

namespace hivtp {

namespace {

int parse_int(std::string_view text, std::string_view spec) {
    int value = 0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc{} || ptr != last) {
        throw Error(ErrorCode::InvalidLayerSet, "cannot parse layer spec \"" + std::string(spec) + "\"");
    }
    return value;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && s.front() == ' ') {
        s.remove_prefix(1);
    }
    while (!s.empty() && s.back() == ' ') {
        s.remove_suffix(1);
    }
    return s;
}

// Column sums of every selected (layer, head) map, accumulated in double.
template <typename T>
std::vector<double> selected_column_sums(std::span<const T> data,
                                         std::size_t heads,
                                         std::size_t tokens,
                                         const std::vector<std::size_t>& layers) {
    std::vector<double> sums(tokens, 0.0);
    const std::size_t map_size = tokens * tokens;
    for (auto layer : layers) {
        for (std::size_t h = 0; h < heads; ++h) {
            const T* map = data.data() + (layer * heads + h) * map_size;
            for (std::size_t row = 0; row < tokens; ++row) {
                const T* values = map + row * tokens;
                for (std::size_t col = 0; col < tokens; ++col) {
                    sums[col] += static_cast<double>(values[col]);
                }
            }
        }
    }
    return sums;
}

std::vector<double> column_sums(const AttentionStack& stack, const LayerSet& layers) {
    if (static_cast<std::size_t>(layers.max()) > stack.layer_count()) {
        throw Error(ErrorCode::LayerOutOfRange,
                    "layer " + std::to_string(layers.max()) + " requested but the stack has " +
                        std::to_string(stack.layer_count()) + " layers");
    }
    const auto zero_based = layers.zero_based();
    const auto& tensor = stack.tensor();
    if (tensor.holds<float>()) {
        return selected_column_sums(tensor.values<float>(), stack.head_count(), stack.token_count_with_cls(),
                                    zero_based);
    }
    return selected_column_sums(tensor.values<double>(), stack.head_count(), stack.token_count_with_cls(),
                                zero_based);
}

template <typename T>
bool check_stack_values(std::span<const T> data, std::size_t tokens, const AttentionValidation& validation) {
    bool row_stochastic = true;
    const std::size_t rows = data.size() / tokens;
    for (std::size_t r = 0; r < rows; ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < tokens; ++c) {
            const double v = data[r * tokens + c];
            if (!(v >= -validation.range_tolerance && v <= 1.0 + validation.range_tolerance)) {
                throw Error(ErrorCode::InvalidAttention,
                            "attention weight " + std::to_string(v) + " outside [0, 1] at flat element " +
                                std::to_string(r * tokens + c));
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > validation.row_sum_tolerance) {
            row_stochastic = false;
        }
    }
    return row_stochastic;
}

}  // namespace

LayerSet::LayerSet(std::vector<int> one_based) : m_indices(std::move(one_based)) {
    if (m_indices.empty()) {
        throw Error(ErrorCode::InvalidLayerSet, "layer set is empty");
    }
    for (std::size_t i = 0; i < m_indices.size(); ++i) {
        if (m_indices[i] < 1) {
            throw Error(ErrorCode::InvalidLayerSet, "layer indices are 1-based");
        }
        if (i > 0 && m_indices[i] <= m_indices[i - 1]) {
            throw Error(ErrorCode::InvalidLayerSet, "layer indices must be strictly increasing");
        }
    }
}

LayerSet LayerSet::middle_default() {
    return LayerSet({7, 8, 9, 10});
}

LayerSet LayerSet::parse(std::string_view spec) {
    spec = trim(spec);
    std::vector<int> indices;
    if (const auto dash = spec.find('-'); dash != std::string_view::npos && spec.find(',') == std::string_view::npos) {
        const int first = parse_int(trim(spec.substr(0, dash)), spec);
        const int last = parse_int(trim(spec.substr(dash + 1)), spec);
        if (first < 1) {
            throw Error(ErrorCode::InvalidLayerSet, "layer indices are 1-based");
        }
        if (last < first) {
            throw Error(ErrorCode::InvalidLayerSet, "empty layer range \"" + std::string(spec) + "\"");
        }
        for (int l = first; l <= last; ++l) {
            indices.push_back(l);
        }
    } else {
        std::size_t start = 0;
        while (start <= spec.size()) {
            const auto comma = spec.find(',', start);
            const auto piece = spec.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
            indices.push_back(parse_int(trim(piece), spec));
            if (comma == std::string_view::npos) {
                break;
            }
            start = comma + 1;
        }
    }
    return LayerSet(std::move(indices));
}

std::vector<std::size_t> LayerSet::zero_based() const {
    std::vector<std::size_t> out;
    out.reserve(m_indices.size());
    for (int l : m_indices) {
        out.push_back(static_cast<std::size_t>(l - 1));
    }
    return out;
}

std::string LayerSet::to_string() const {
    const bool contiguous = m_indices.back() - m_indices.front() + 1 == static_cast<int>(m_indices.size());
    if (contiguous && m_indices.size() > 1) {
        return std::to_string(m_indices.front()) + "-" + std::to_string(m_indices.back());
    }
    std::string out;
    for (std::size_t i = 0; i < m_indices.size(); ++i) {
        if (i > 0) {
            out += ',';
        }
        out += std::to_string(m_indices[i]);
    }
    return out;
}

std::size_t recover_grid_side(std::size_t token_count_with_cls) {
    if (token_count_with_cls < 5) {
        throw Error(ErrorCode::NotPerfectSquare,
                    "token count " + std::to_string(token_count_with_cls) + " is below the 2x2 grid minimum of 5");
    }
    const std::size_t visual = token_count_with_cls - 1;
    auto side = static_cast<std::size_t>(std::sqrt(static_cast<double>(visual)));
    while (side * side > visual) {
        --side;
    }
    while ((side + 1) * (side + 1) <= visual) {
        ++side;
    }
    if (side * side != visual) {
        throw Error(ErrorCode::NotPerfectSquare,
                    "token count " + std::to_string(token_count_with_cls) + " is not n*n + 1");
    }
    return side;
}

AttentionStack::AttentionStack(io::TensorBuffer tensor, const AttentionValidation& validation)
    : m_tensor(std::move(tensor)) {
    if (m_tensor.ndim() != 4) {
        throw Error(ErrorCode::ShapeMismatch,
                    "attention stack must be 4-D [L, H, N+1, N+1], got " + std::to_string(m_tensor.ndim()) + "-D");
    }
    if (m_tensor.dtype() == io::DType::U32) {
        throw Error(ErrorCode::UnsupportedDtype, "attention stack must be f32 or f64");
    }
    const auto& dims = m_tensor.dims();
    if (dims[2] != dims[3]) {
        throw Error(ErrorCode::ShapeMismatch, "attention maps must be square");
    }
    if (dims[0] == 0 || dims[1] == 0) {
        throw Error(ErrorCode::ShapeMismatch, "attention stack needs at least one layer and one head");
    }
    m_layers = dims[0];
    m_heads = dims[1];
    m_tokens = dims[2];
    m_grid_side = recover_grid_side(m_tokens);

    if (m_tensor.holds<float>()) {
        m_row_stochastic = check_stack_values(m_tensor.values<float>(), m_tokens, validation);
    } else {
        m_row_stochastic = check_stack_values(m_tensor.values<double>(), m_tokens, validation);
    }
}

double AttentionStack::at(std::size_t layer, std::size_t head, std::size_t row, std::size_t col) const {
    const std::size_t flat = ((layer * m_heads + head) * m_tokens + row) * m_tokens + col;
    if (m_tensor.holds<float>()) {
        return m_tensor.values<float>()[flat];
    }
    return m_tensor.values<double>()[flat];
}

ImportanceScores compute_importance(const AttentionStack& stack, const LayerSet& layers) {
    const auto sums = column_sums(stack, layers);
    const std::size_t tokens = stack.token_count_with_cls();
    const double denominator =
        static_cast<double>(layers.size()) * static_cast<double>(stack.head_count()) * static_cast<double>(tokens);

    ImportanceScores scores;
    scores.values.resize(tokens - 1);
    for (std::size_t i = 0; i + 1 < tokens; ++i) {
        scores.values[i] = sums[i + 1] / denominator;
    }
    return scores;
}

double mean_cls_attention(const AttentionStack& stack, const LayerSet& layers) {
    const auto sums = column_sums(stack, layers);
    return sums[0] / (static_cast<double>(layers.size()) * static_cast<double>(stack.head_count()) *
                      static_cast<double>(stack.token_count_with_cls()));
}

io::TensorBuffer to_tensor(const ImportanceScores& scores) {
    return io::TensorBuffer({static_cast<std::uint32_t>(scores.size())}, scores.values);
}

ImportanceScores scores_from_tensor(const io::TensorBuffer& tensor) {
    if (tensor.ndim() != 1) {
        throw Error(ErrorCode::ShapeMismatch, "scores must be a 1-D tensor");
    }
    if (tensor.dtype() == io::DType::U32) {
        throw Error(ErrorCode::UnsupportedDtype, "scores must be f32 or f64");
    }
    return ImportanceScores{tensor.to_f64()};
}

}  // namespace hivtp
