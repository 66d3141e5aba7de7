// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "hivtp/tensor_io.hpp"

namespace hivtp {

/// Middle layers used for scoring unless the caller says otherwise (1-based).
inline constexpr int kDefaultFirstLayer = 7;
inline constexpr int kDefaultLastLayer = 10;

/// Ordered set of 1-based encoder layer indices.
///
/// Configuration and the CLI speak 1-based layer numbers; `zero_based()` is
/// the single conversion point used when indexing an AttentionStack.
class LayerSet {
public:
    /// Throws InvalidLayerSet unless non-empty, strictly increasing and >= 1.
    explicit LayerSet(std::vector<int> one_based);

    /// Layers 7..10.
    static LayerSet middle_default();

    /// "7-10" (inclusive range) or "7,8,9,10".
    static LayerSet parse(std::string_view spec);

    const std::vector<int>& indices() const { return m_indices; }
    std::size_t size() const { return m_indices.size(); }
    int max() const { return m_indices.back(); }
    std::vector<std::size_t> zero_based() const;

    /// Compact rendering, "7-10" for contiguous runs, otherwise a comma list.
    std::string to_string() const;

    bool operator==(const LayerSet&) const = default;

private:
    std::vector<int> m_indices;
};

struct AttentionValidation {
    /// Entries below -tolerance or above 1 + tolerance are rejected.
    double range_tolerance = 1e-5;
    /// Row sums within this of 1 mark the stack row-stochastic.
    double row_sum_tolerance = 1e-4;
};

/// Attention maps of every encoder layer, shape [L, H, N+1, N+1], CLS at 0.
class AttentionStack {
public:
    /// Validates shape and value range, and records whether every row sums to 1.
    /// Accepts f32 or f64 tensors; the data is kept in its stored precision.
    explicit AttentionStack(io::TensorBuffer tensor, const AttentionValidation& validation = {});

    std::size_t layer_count() const { return m_layers; }
    std::size_t head_count() const { return m_heads; }
    std::size_t token_count_with_cls() const { return m_tokens; }
    std::size_t visual_token_count() const { return m_tokens - 1; }
    std::size_t grid_side() const { return m_grid_side; }
    bool row_stochastic() const { return m_row_stochastic; }

    const io::TensorBuffer& tensor() const { return m_tensor; }

    /// Entry [layer, head, query row, key column], all 0-based.
    double at(std::size_t layer, std::size_t head, std::size_t row, std::size_t col) const;

private:
    io::TensorBuffer m_tensor;
    std::size_t m_layers = 0;
    std::size_t m_heads = 0;
    std::size_t m_tokens = 0;
    std::size_t m_grid_side = 0;
    bool m_row_stochastic = false;
};

/// Mean attention received by each visual token, length N = n^2 (CLS excluded).
struct ImportanceScores {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    bool operator==(const ImportanceScores&) const = default;
};

/// n such that n^2 = token_count_with_cls - 1 and n >= 2; NotPerfectSquare otherwise.
std::size_t recover_grid_side(std::size_t token_count_with_cls);

/// Importance score of every visual token.
///
/// The selected layers' maps are averaged, then the heads, giving one
/// (N+1)x(N+1) map. Token i's score is the mean over all N+1 query rows
/// (CLS row included) of that map's column i+1; the CLS column is dropped.
/// Sums are accumulated in double whatever the stored precision, in a fixed
/// order, so the result is a deterministic function of the inputs.
ImportanceScores compute_importance(const AttentionStack& stack, const LayerSet& layers);

/// Mean over query rows of the averaged map's CLS column; with
/// row-stochastic input this plus the score sum is 1.
double mean_cls_attention(const AttentionStack& stack, const LayerSet& layers);

io::TensorBuffer to_tensor(const ImportanceScores& scores);

/// Accepts a 1-D f32/f64 tensor.
ImportanceScores scores_from_tensor(const io::TensorBuffer& tensor);

}  // namespace hivtp
