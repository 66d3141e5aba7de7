// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#include "hivtp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "hivtp/error.hpp"

namespace hivtp::synth {

namespace {

// Deliberately independent of the pruner: coordinates are walked directly
// and budgets recomputed here.
struct OracleBudget {
    std::size_t n;
    std::size_t tokens;
    std::size_t region_side;
    std::size_t regions_per_side;
    std::size_t windows_per_side;
    std::size_t global_total;
};

OracleBudget oracle_budget(const PruneConfig& config) {
    const std::size_t n = config.grid_side;
    if (n == 0 || config.region_divisor == 0 || config.window_side == 0) {
        throw Error(ErrorCode::InvalidConfig, "grid side, region divisor and window side must be positive");
    }
    if (n % config.region_divisor != 0 || n % config.window_side != 0) {
        throw Error(ErrorCode::NotDivisible, "grid side " + std::to_string(n) + " is not divisible by the region divisor or window side");
    }
    if (!(config.top_percent > 0.0 && config.top_percent <= 100.0)) {
        throw Error(ErrorCode::InvalidConfig, "top-k percentage must be in (0, 100]");
    }
    const std::size_t tokens = n * n;
    const auto total = static_cast<std::size_t>(std::floor(static_cast<double>(tokens) * config.top_percent / 100.0 + 1e-9));
    return {n, tokens, n / config.region_divisor, config.region_divisor, n / config.window_side,
            std::min(total, tokens)};
}

}  // namespace

SelectionResult oracle_prune(const ImportanceScores& scores, const PruneConfig& config, const OracleOptions& options) {
    const OracleBudget b = oracle_budget(config);
    if (scores.size() != b.tokens) {
        throw Error(ErrorCode::ShapeMismatch, "score count does not match grid");
    }

    const std::size_t region_count = b.regions_per_side * b.regions_per_side;
    std::set<std::uint32_t> global;
    for (std::size_t region = 0; region < region_count; ++region) {
        const std::size_t quota = b.global_total / region_count + (region < b.global_total % region_count ? 1 : 0);
        const std::size_t top = (region / b.regions_per_side) * b.region_side;
        const std::size_t left = (region % b.regions_per_side) * b.region_side;

        std::vector<std::pair<double, std::uint32_t>> ranked;
        for (std::size_t row = top; row < top + b.region_side; ++row) {
            for (std::size_t col = left; col < left + b.region_side; ++col) {
                const auto index = static_cast<std::uint32_t>(row * b.n + col);
                ranked.emplace_back(scores[index], index);
            }
        }
        std::sort(ranked.begin(), ranked.end(), [&](const auto& x, const auto& y) {
            if (x.first != y.first) {
                return x.first > y.first;
            }
            return options.reverse_tie_break ? x.second > y.second : x.second < y.second;
        });
        for (std::size_t i = 0; i < quota; ++i) {
            global.insert(ranked[i].second);
        }
    }

    std::set<std::uint32_t> local;
    const std::size_t c = config.window_side;
    for (std::size_t wr = 0; wr < b.windows_per_side; ++wr) {
        for (std::size_t wc = 0; wc < b.windows_per_side; ++wc) {
            bool found = false;
            std::uint32_t best = 0;
            for (std::size_t row = wr * c; row < (wr + 1) * c; ++row) {
                for (std::size_t col = wc * c; col < (wc + 1) * c; ++col) {
                    const auto index = static_cast<std::uint32_t>(row * b.n + col);
                    if (global.count(index) != 0) {
                        continue;
                    }
                    const bool better = !found || scores[index] > scores[best] ||
                                        (scores[index] == scores[best] &&
                                         (options.reverse_tie_break ? index > best : index < best));
                    if (better) {
                        best = index;
                        found = true;
                    }
                }
            }
            if (found) {
                local.insert(best);
            }
        }
    }

    SelectionResult result;
    result.global_indices.assign(global.begin(), global.end());
    result.local_indices.assign(local.begin(), local.end());
    std::set<std::uint32_t> all = global;
    all.insert(local.begin(), local.end());
    result.final_indices.assign(all.begin(), all.end());
    result.global_count = global.size();
    result.local_count = local.size();
    result.retained = all.size();
    result.retain_ratio = static_cast<double>(result.retained) / static_cast<double>(b.tokens);
    return result;
}

std::vector<std::string> check_selection_invariants(const SelectionResult& result,
                                                    const ImportanceScores& scores,
                                                    const PruneConfig& config) {
    std::vector<std::string> violations;
    const OracleBudget b = oracle_budget(config);
    const std::size_t window_count = b.windows_per_side * b.windows_per_side;
    const std::size_t max_retained = b.global_total + window_count;
    const auto fail = [&violations](std::string what) { violations.push_back(std::move(what)); };

    if (scores.size() != b.tokens) {
        fail("score count does not match grid");
        return violations;
    }

    const auto strictly_increasing_in_range = [&](const IndexList& list, const char* name) {
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (list[i] >= b.tokens) {
                fail(std::string(name) + " index out of range");
                return;
            }
            if (i > 0 && list[i] <= list[i - 1]) {
                fail(std::string(name) + " indices not strictly increasing");
                return;
            }
        }
    };
    strictly_increasing_in_range(result.global_indices, "global");
    strictly_increasing_in_range(result.local_indices, "local");
    strictly_increasing_in_range(result.final_indices, "final");
    if (!violations.empty()) {
        return violations;
    }

    IndexList overlap;
    std::set_intersection(result.global_indices.begin(), result.global_indices.end(), result.local_indices.begin(),
                          result.local_indices.end(), std::back_inserter(overlap));
    if (!overlap.empty()) {
        fail("global and local sets intersect");
    }
    IndexList merged;
    std::set_union(result.global_indices.begin(), result.global_indices.end(), result.local_indices.begin(),
                   result.local_indices.end(), std::back_inserter(merged));
    if (merged != result.final_indices) {
        fail("final list is not the sorted union");
    }
    if (result.global_count != result.global_indices.size() || result.local_count != result.local_indices.size() ||
        result.retained != result.final_indices.size() || result.retained != result.global_count + result.local_count) {
        fail("counts disagree with index sets");
    }
    if (result.global_count != b.global_total) {
        fail("p_g " + std::to_string(result.global_count) + " != floor(N*k/100) " + std::to_string(b.global_total));
    }
    if (result.local_count > window_count) {
        fail("p_l exceeds window count");
    }
    if (result.retained > max_retained) {
        fail("p exceeds p_max");
    }
    const double max_ratio = static_cast<double>(max_retained) / static_cast<double>(b.tokens);
    if (result.retain_ratio > max_ratio) {
        fail("r_retain exceeds r_max");
    }
    if (result.retain_ratio != static_cast<double>(result.retained) / static_cast<double>(b.tokens)) {
        fail("r_retain != p / N");
    }

    const std::size_t region_count = b.regions_per_side * b.regions_per_side;
    std::vector<std::size_t> per_region(region_count, 0);
    for (auto index : result.global_indices) {
        const std::size_t row = index / b.n;
        const std::size_t col = index % b.n;
        ++per_region[(row / b.region_side) * b.regions_per_side + col / b.region_side];
    }
    for (std::size_t region = 0; region < region_count; ++region) {
        const std::size_t quota = b.global_total / region_count + (region < b.global_total % region_count ? 1 : 0);
        if (per_region[region] != quota) {
            fail("region " + std::to_string(region) + " kept " + std::to_string(per_region[region]) +
                 " tokens, quota " + std::to_string(quota));
        }
    }

    const auto window_of = [&](std::uint32_t index) {
        const std::size_t row = index / b.n;
        const std::size_t col = index % b.n;
        return (row / config.window_side) * b.windows_per_side + col / config.window_side;
    };
    std::vector<std::size_t> per_window(window_count, 0);
    std::vector<std::size_t> global_per_window(window_count, 0);
    for (auto index : result.local_indices) {
        ++per_window[window_of(index)];
    }
    for (auto index : result.global_indices) {
        ++global_per_window[window_of(index)];
    }
    const std::size_t window_size = config.window_side * config.window_side;
    for (std::size_t w = 0; w < window_count; ++w) {
        const std::size_t expected = global_per_window[w] < window_size ? 1 : 0;
        if (per_window[w] != expected) {
            fail("window " + std::to_string(w) + " contributed " + std::to_string(per_window[w]) +
                 " local tokens, expected " + std::to_string(expected));
        }
    }
    return violations;
}

}  // namespace hivtp::synth
