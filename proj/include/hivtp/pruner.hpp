// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Hierarchical visual token pruning.
//
// Visual tokens are laid out row-major on an n x n grid and addressed by
// 0-based linear index; CLS never enters this index space.
//
//   1. Global stage: the grid is cut into r x r equal regions. The global
//      budget floor(N * k / 100) is split across regions (equal base quota,
//      remainder one-each to the first regions in row-major order) and each
//      region keeps its highest-scoring tokens.
//   2. Local stage: the grid is cut into c x c windows. Each window keeps the
//      highest-scoring token not already kept globally, if any remains.
//   3. The union is sorted ascending and used to gather token rows.
//
// Ties always go to the lower linear index.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "hivtp/error.hpp"
#include "hivtp/importance.hpp"
#include "hivtp/tensor_io.hpp"

namespace hivtp {

using IndexList = std::vector<std::uint32_t>;

struct PruneConfig {
    std::size_t grid_side = 24;
    std::size_t region_divisor = 2;
    double top_percent = 25.0;
    std::size_t window_side = 2;
    LayerSet layers = LayerSet::middle_default();

    /// Throws InvalidConfig / NotDivisible.
    void validate() const;
};

/// Integer budgets implied by a PruneConfig.
struct Budget {
    std::size_t token_count = 0;        // N = n^2
    std::size_t region_count = 0;       // r^2
    std::size_t region_size = 0;        // N_r = (n / r)^2
    std::size_t window_count = 0;       // N_w = (n / c)^2
    std::size_t global_budget = 0;      // floor(N * k / 100)
    std::size_t max_retained = 0;       // p_max = global_budget + N_w
    double max_ratio = 0.0;             // r_max = p_max / N
};

/// Validates the config first.
Budget compute_budget(const PruneConfig& config);

/// floor(token_count * percent / 100); products within 1e-9 of an integer snap to it.
std::size_t global_budget(std::size_t token_count, double percent);

/// Equal square blocks tiling an n x n grid, enumerated row-major; each
/// block lists its linear indices in ascending order.
struct GridPartition {
    std::size_t grid_side = 0;
    std::size_t block_side = 0;
    std::vector<IndexList> blocks;
};

/// r x r regions of side n / r. NotDivisible unless r divides n.
GridPartition partition_regions(std::size_t grid_side, std::size_t region_divisor);

/// Windows of side c. NotDivisible unless c divides n.
GridPartition partition_windows(std::size_t grid_side, std::size_t window_side);

std::vector<std::size_t> region_quotas(const PruneConfig& config);

/// Per-region top-quota selection; ascending union.
IndexList global_retain(const ImportanceScores& scores,
                        const GridPartition& regions,
                        const std::vector<std::size_t>& quotas);

/// Per-window argmax over tokens outside `global_set`; ascending union.
IndexList local_retain(const ImportanceScores& scores, const GridPartition& windows, const IndexList& global_set);

/// Row-major [rows, d] matrix of visual-token embeddings (f32 or f64).
class TokenMatrix {
public:
    TokenMatrix() = default;
    /// Requires a 2-D f32/f64 tensor.
    explicit TokenMatrix(io::TensorBuffer tensor);

    std::size_t rows() const { return m_tensor.dims()[0]; }
    std::size_t cols() const { return m_tensor.dims()[1]; }
    const io::TensorBuffer& tensor() const { return m_tensor; }

    /// Rows at `indices`, in that order.
    TokenMatrix gather(const IndexList& indices) const;

    bool operator==(const TokenMatrix&) const = default;

private:
    io::TensorBuffer m_tensor;
};

struct SelectionResult {
    IndexList global_indices;
    IndexList local_indices;
    IndexList final_indices;
    std::size_t global_count = 0;  // p_g
    std::size_t local_count = 0;   // p_l
    std::size_t retained = 0;      // p
    double retain_ratio = 0.0;     // p / N

    bool operator==(const SelectionResult&) const = default;
};

/// Merges disjoint sorted sets into a SelectionResult for N tokens.
/// OverlapDetected if the sets intersect.
SelectionResult merge_selection(const IndexList& global_set, const IndexList& local_set, std::size_t token_count);

/// Merge plus row gather. ShapeMismatch if `tokens` does not have N rows.
std::pair<SelectionResult, TokenMatrix> finalize(const IndexList& global_set,
                                                 const IndexList& local_set,
                                                 const TokenMatrix& tokens,
                                                 std::size_t token_count);

/// Global then local stage on precomputed scores.
SelectionResult select_tokens(const ImportanceScores& scores, const PruneConfig& config);

struct PruneOutput {
    SelectionResult selection;
    TokenMatrix retained;
    ImportanceScores scores;
};

/// Selection and gather from precomputed scores.
PruneOutput prune_with_scores(ImportanceScores scores, const TokenMatrix& tokens, const PruneConfig& config);

/// Scores the stack, then selects and gathers the retained token rows.
PruneOutput hivtp_prune(const AttentionStack& stack, const TokenMatrix& tokens, const PruneConfig& config);

struct PruneInput {
    AttentionStack stack;
    TokenMatrix tokens;
};

struct BatchItem {
    std::size_t index = 0;
    std::optional<PruneOutput> output;
    std::optional<Error> error;

    bool ok() const { return output.has_value(); }
};

/// Element-wise hivtp_prune. Failures are reported per element and do not stop
/// the batch. Results are ordered by input position whatever the thread count
/// (0 = hardware concurrency).
std::vector<BatchItem> prune_batch(const std::vector<PruneInput>& images,
                                   const PruneConfig& config,
                                   unsigned threads = 1);

}  // namespace hivtp
