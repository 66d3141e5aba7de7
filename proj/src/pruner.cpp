// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#include "hivtp/pruner.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hivtp/parallel.hpp"

namespace hivtp {

namespace {

void require_divisible(std::size_t grid_side, std::size_t divisor, const char* what) {
    if (divisor == 0) {
        throw Error(ErrorCode::InvalidConfig, std::string(what) + " must be positive");
    }
    if (grid_side % divisor != 0) {
        throw Error(ErrorCode::NotDivisible, "grid side " + std::to_string(grid_side) + " is not divisible by " +
                                                 what + " " + std::to_string(divisor));
    }
}

GridPartition partition_blocks(std::size_t grid_side, std::size_t block_side) {
    GridPartition partition;
    partition.grid_side = grid_side;
    partition.block_side = block_side;
    const std::size_t per_side = grid_side / block_side;
    partition.blocks.reserve(per_side * per_side);
    for (std::size_t block_row = 0; block_row < per_side; ++block_row) {
        for (std::size_t block_col = 0; block_col < per_side; ++block_col) {
            IndexList block;
            block.reserve(block_side * block_side);
            for (std::size_t dr = 0; dr < block_side; ++dr) {
                const std::size_t row = block_row * block_side + dr;
                for (std::size_t dc = 0; dc < block_side; ++dc) {
                    block.push_back(static_cast<std::uint32_t>(row * grid_side + block_col * block_side + dc));
                }
            }
            partition.blocks.push_back(std::move(block));
        }
    }
    return partition;
}

void require_score_count(const ImportanceScores& scores, std::size_t grid_side) {
    if (scores.size() != grid_side * grid_side) {
        throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(grid_side * grid_side) + " scores, got " +
                                                  std::to_string(scores.size()));
    }
}

void require_finite(const ImportanceScores& scores) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i])) {
            throw Error(ErrorCode::NaNPayload, "score " + std::to_string(i) + " is not finite");
        }
    }
}

IndexList sorted_unique(IndexList indices, std::size_t token_count, const char* what) {
    std::sort(indices.begin(), indices.end());
    if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " set contains duplicates");
    }
    if (!indices.empty() && indices.back() >= token_count) {
        throw Error(ErrorCode::ShapeMismatch, std::string(what) + " index " + std::to_string(indices.back()) +
                                                  " out of range for " + std::to_string(token_count) + " tokens");
    }
    return indices;
}

}  // namespace

void PruneConfig::validate() const {
    if (grid_side == 0) {
        throw Error(ErrorCode::InvalidConfig, "grid side must be positive");
    }
    if (!(top_percent > 0.0 && top_percent <= 100.0)) {
        throw Error(ErrorCode::InvalidConfig, "top-k percentage must be in (0, 100], got " + std::to_string(top_percent));
    }
    require_divisible(grid_side, region_divisor, "region divisor");
    require_divisible(grid_side, window_side, "window side");
}

std::size_t global_budget(std::size_t token_count, double percent) {
    const double raw = static_cast<double>(token_count) * percent / 100.0;
    double whole = std::floor(raw);
    if (raw - whole > 1.0 - 1e-9) {
        whole += 1.0;
    }
    return std::min(token_count, static_cast<std::size_t>(whole));
}

Budget compute_budget(const PruneConfig& config) {
    config.validate();
    Budget b;
    b.token_count = config.grid_side * config.grid_side;
    b.region_count = config.region_divisor * config.region_divisor;
    const std::size_t region_side = config.grid_side / config.region_divisor;
    b.region_size = region_side * region_side;
    const std::size_t windows_per_side = config.grid_side / config.window_side;
    b.window_count = windows_per_side * windows_per_side;
    b.global_budget = global_budget(b.token_count, config.top_percent);
    b.max_retained = b.global_budget + b.window_count;
    b.max_ratio = static_cast<double>(b.max_retained) / static_cast<double>(b.token_count);
    return b;
}

GridPartition partition_regions(std::size_t grid_side, std::size_t region_divisor) {
    require_divisible(grid_side, region_divisor, "region divisor");
    return partition_blocks(grid_side, grid_side / region_divisor);
}

GridPartition partition_windows(std::size_t grid_side, std::size_t window_side) {
    require_divisible(grid_side, window_side, "window side");
    return partition_blocks(grid_side, window_side);
}

std::vector<std::size_t> region_quotas(const PruneConfig& config) {
    const Budget budget = compute_budget(config);
    const std::size_t base = budget.global_budget / budget.region_count;
    const std::size_t remainder = budget.global_budget % budget.region_count;
    std::vector<std::size_t> quotas(budget.region_count, base);
    for (std::size_t i = 0; i < remainder; ++i) {
        ++quotas[i];
    }
    for (auto q : quotas) {
        if (q > budget.region_size) {
            throw Error(ErrorCode::QuotaExceedsRegion,
                        "quota " + std::to_string(q) + " exceeds region size " + std::to_string(budget.region_size));
        }
    }
    return quotas;
}

IndexList global_retain(const ImportanceScores& scores,
                        const GridPartition& regions,
                        const std::vector<std::size_t>& quotas) {
    require_score_count(scores, regions.grid_side);
    if (quotas.size() != regions.blocks.size()) {
        throw Error(ErrorCode::ShapeMismatch, std::to_string(quotas.size()) + " quotas for " +
                                                  std::to_string(regions.blocks.size()) + " regions");
    }
    const auto higher = [&scores](std::uint32_t a, std::uint32_t b) {
        return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    };

    IndexList selected;
    for (std::size_t i = 0; i < regions.blocks.size(); ++i) {
        const std::size_t quota = quotas[i];
        IndexList candidates = regions.blocks[i];
        if (quota > candidates.size()) {
            throw Error(ErrorCode::QuotaExceedsRegion, "quota " + std::to_string(quota) + " exceeds region size " +
                                                           std::to_string(candidates.size()));
        }
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(quota),
                          candidates.end(), higher);
        selected.insert(selected.end(), candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(quota));
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

IndexList local_retain(const ImportanceScores& scores, const GridPartition& windows, const IndexList& global_set) {
    require_score_count(scores, windows.grid_side);
    std::vector<bool> taken(scores.size(), false);
    for (auto index : global_set) {
        if (index >= scores.size()) {
            throw Error(ErrorCode::ShapeMismatch, "global index " + std::to_string(index) + " out of range");
        }
        taken[index] = true;
    }

    IndexList selected;
    for (const auto& window : windows.blocks) {
        // Window indices are ascending, so strict '>' keeps the lower index on ties.
        std::optional<std::uint32_t> best;
        for (auto index : window) {
            if (taken[index]) {
                continue;
            }
            if (!best || scores[index] > scores[*best]) {
                best = index;
            }
        }
        if (best) {
            selected.push_back(*best);
        }
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

TokenMatrix::TokenMatrix(io::TensorBuffer tensor) : m_tensor(std::move(tensor)) {
    if (m_tensor.ndim() != 2) {
        throw Error(ErrorCode::ShapeMismatch,
                    "token matrix must be 2-D [N, d], got " + std::to_string(m_tensor.ndim()) + "-D");
    }
    if (m_tensor.dtype() == io::DType::U32) {
        throw Error(ErrorCode::UnsupportedDtype, "token matrix must be f32 or f64");
    }
}

TokenMatrix TokenMatrix::gather(const IndexList& indices) const {
    const std::size_t width = cols();
    for (auto index : indices) {
        if (index >= rows()) {
            throw Error(ErrorCode::ShapeMismatch, "row " + std::to_string(index) + " out of range");
        }
    }
    auto storage = std::visit(
        [&](const auto& values) -> io::TensorBuffer::Storage {
            using Vec = std::decay_t<decltype(values)>;
            Vec out;
            out.reserve(indices.size() * width);
            for (auto index : indices) {
                const auto first = values.begin() + static_cast<std::ptrdiff_t>(index * width);
                out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(width));
            }
            return out;
        },
        m_tensor.storage());
    return TokenMatrix(io::TensorBuffer({static_cast<std::uint32_t>(indices.size()), static_cast<std::uint32_t>(width)},
                                        std::move(storage)));
}

SelectionResult merge_selection(const IndexList& global_set, const IndexList& local_set, std::size_t token_count) {
    SelectionResult result;
    result.global_indices = sorted_unique(global_set, token_count, "global");
    result.local_indices = sorted_unique(local_set, token_count, "local");

    result.final_indices.reserve(result.global_indices.size() + result.local_indices.size());
    std::merge(result.global_indices.begin(), result.global_indices.end(), result.local_indices.begin(),
               result.local_indices.end(), std::back_inserter(result.final_indices));
    if (const auto dup = std::adjacent_find(result.final_indices.begin(), result.final_indices.end());
        dup != result.final_indices.end()) {
        throw Error(ErrorCode::OverlapDetected,
                    "index " + std::to_string(*dup) + " is in both the global and the local set");
    }

    result.global_count = result.global_indices.size();
    result.local_count = result.local_indices.size();
    result.retained = result.final_indices.size();
    result.retain_ratio = static_cast<double>(result.retained) / static_cast<double>(token_count);
    return result;
}

std::pair<SelectionResult, TokenMatrix> finalize(const IndexList& global_set,
                                                 const IndexList& local_set,
                                                 const TokenMatrix& tokens,
                                                 std::size_t token_count) {
    if (tokens.rows() != token_count) {
        throw Error(ErrorCode::ShapeMismatch, "token matrix has " + std::to_string(tokens.rows()) +
                                                  " rows, expected " + std::to_string(token_count));
    }
    SelectionResult selection = merge_selection(global_set, local_set, token_count);
    TokenMatrix retained = tokens.gather(selection.final_indices);
    return {std::move(selection), std::move(retained)};
}

SelectionResult select_tokens(const ImportanceScores& scores, const PruneConfig& config) {
    config.validate();
    require_score_count(scores, config.grid_side);
    require_finite(scores);

    const auto regions = partition_regions(config.grid_side, config.region_divisor);
    const auto windows = partition_windows(config.grid_side, config.window_side);
    const IndexList global_set = global_retain(scores, regions, region_quotas(config));
    const IndexList local_set = local_retain(scores, windows, global_set);
    return merge_selection(global_set, local_set, scores.size());
}

PruneOutput prune_with_scores(ImportanceScores scores, const TokenMatrix& tokens, const PruneConfig& config) {
    const std::size_t token_count = config.grid_side * config.grid_side;
    if (tokens.rows() != token_count) {
        throw Error(ErrorCode::ShapeMismatch, "token matrix has " + std::to_string(tokens.rows()) +
                                                  " rows, expected " + std::to_string(token_count));
    }
    SelectionResult selection = select_tokens(scores, config);
    TokenMatrix retained = tokens.gather(selection.final_indices);
    return {std::move(selection), std::move(retained), std::move(scores)};
}

PruneOutput hivtp_prune(const AttentionStack& stack, const TokenMatrix& tokens, const PruneConfig& config) {
    if (stack.grid_side() != config.grid_side) {
        throw Error(ErrorCode::ShapeMismatch, "attention stack grid side " + std::to_string(stack.grid_side()) +
                                                  " does not match configured " + std::to_string(config.grid_side));
    }
    return prune_with_scores(compute_importance(stack, config.layers), tokens, config);
}

std::vector<BatchItem> prune_batch(const std::vector<PruneInput>& images, const PruneConfig& config, unsigned threads) {
    std::vector<BatchItem> results(images.size());
    parallel_for(images.size(), threads, [&](std::size_t i) {
        results[i].index = i;
        try {
            results[i].output = hivtp_prune(images[i].stack, images[i].tokens, config);
        } catch (const Error& e) {
            results[i].error = e;
        }
    });
    return results;
}

}  // namespace hivtp
