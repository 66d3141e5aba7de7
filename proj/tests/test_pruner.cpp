// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "hivtp/oracle.hpp"
#include "hivtp/pruner.hpp"
#include "hivtp/synth.hpp"
#include "reference.hpp"

using namespace hivtp;
using hivtp::test::error_code_of;

namespace {

PruneConfig make_config(std::size_t n, std::size_t r, double k, std::size_t c) {
    PruneConfig config;
    config.grid_side = n;
    config.region_divisor = r;
    config.top_percent = k;
    config.window_side = c;
    return config;
}

TokenMatrix ramp_tokens(std::size_t rows, std::size_t width) {
    std::vector<float> values(rows * width);
    std::iota(values.begin(), values.end(), 0.0f);
    return TokenMatrix(io::TensorBuffer({static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(width)}, values));
}

// Quota prefix of each region's (score desc, index asc) full sort.
IndexList sorted_prefix_oracle(const ImportanceScores& scores, const GridPartition& regions,
                               const std::vector<std::size_t>& quotas) {
    IndexList out;
    for (std::size_t i = 0; i < regions.blocks.size(); ++i) {
        std::vector<std::pair<double, long>> keyed;
        for (auto index : regions.blocks[i]) {
            keyed.emplace_back(scores[index], -static_cast<long>(index));
        }
        std::sort(keyed.rbegin(), keyed.rend());
        for (std::size_t q = 0; q < quotas[i]; ++q) {
            out.push_back(static_cast<std::uint32_t>(-keyed[q].second));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

IndexList window_scan_oracle(const ImportanceScores& scores, std::size_t n, std::size_t c, const IndexList& global) {
    const std::set<std::uint32_t> taken(global.begin(), global.end());
    IndexList out;
    for (std::size_t wr = 0; wr < n / c; ++wr) {
        for (std::size_t wc = 0; wc < n / c; ++wc) {
            long best = -1;
            for (std::size_t row = wr * c; row < wr * c + c; ++row) {
                for (std::size_t col = wc * c; col < wc * c + c; ++col) {
                    const auto index = static_cast<long>(row * n + col);
                    if (taken.count(static_cast<std::uint32_t>(index)) != 0) {
                        continue;
                    }
                    if (best < 0 || scores[static_cast<std::size_t>(index)] > scores[static_cast<std::size_t>(best)] ||
                        (scores[static_cast<std::size_t>(index)] == scores[static_cast<std::size_t>(best)] &&
                         index < best)) {
                        best = index;
                    }
                }
            }
            if (best >= 0) {
                out.push_back(static_cast<std::uint32_t>(best));
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST_CASE("config validation") {
    CHECK_NOTHROW(make_config(24, 2, 25, 2).validate());
    CHECK_NOTHROW(make_config(24, 2, 100, 2).validate());
    CHECK(error_code_of([] { make_config(24, 5, 25, 2).validate(); }) == ErrorCode::NotDivisible);
    CHECK(error_code_of([] { make_config(24, 2, 25, 5).validate(); }) == ErrorCode::NotDivisible);
    CHECK(error_code_of([] { make_config(24, 0, 25, 2).validate(); }) == ErrorCode::InvalidConfig);
    CHECK(error_code_of([] { make_config(24, 2, 0, 2).validate(); }) == ErrorCode::InvalidConfig);
    CHECK(error_code_of([] { make_config(24, 2, 100.5, 2).validate(); }) == ErrorCode::InvalidConfig);
    CHECK(error_code_of([] { make_config(24, 2, std::nan(""), 2).validate(); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("budgets for the standard 24x24 configurations") {
    struct Row {
        double k;
        std::size_t c;
        std::size_t global;
        std::size_t windows;
        std::size_t p_max;
    };
    for (const Row& row : {Row{50, 2, 288, 144, 432}, Row{25, 2, 144, 144, 288}, Row{15, 2, 86, 144, 230},
                           Row{14, 3, 80, 64, 144}}) {
        const Budget b = compute_budget(make_config(24, 2, row.k, row.c));
        CHECK(b.token_count == 576);
        CHECK(b.region_size == 144);
        CHECK(b.global_budget == row.global);
        CHECK(b.window_count == row.windows);
        CHECK(b.max_retained == row.p_max);
        CHECK(b.max_ratio == static_cast<double>(row.p_max) / 576.0);
    }
}

TEST_CASE("global budget is the exact floor for integer percentages") {
    for (std::size_t tokens : {4, 16, 36, 100, 144, 576, 2304}) {
        for (int k = 1; k <= 100; ++k) {
            CHECK(global_budget(tokens, k) == tokens * static_cast<std::size_t>(k) / 100);
        }
    }
    // 0.1 + 0.2 style noise must not cost a token.
    CHECK(global_budget(100, (0.1 + 0.2) * 100.0) == 30);
    CHECK(global_budget(100, 0.7 * 100.0) == 70);
    CHECK(global_budget(576, 14.3) == 82);
}

TEST_CASE("partition_regions") {
    const auto big = partition_regions(24, 2);
    REQUIRE(big.blocks.size() == 4);
    for (const auto& block : big.blocks) {
        CHECK(block.size() == 144);
    }
    std::set<std::uint32_t> expected;
    for (std::uint32_t row = 0; row < 12; ++row) {
        for (std::uint32_t col = 0; col < 12; ++col) {
            expected.insert(row * 24 + col);
        }
    }
    CHECK(std::set<std::uint32_t>(big.blocks[0].begin(), big.blocks[0].end()) == expected);

    CHECK(partition_regions(2, 1).blocks == std::vector<IndexList>{{0, 1, 2, 3}});

    // Top-right 2x2 block of a 4x4 grid.
    CHECK(partition_regions(4, 2).blocks[1] == IndexList{2, 3, 6, 7});
    CHECK(partition_regions(4, 2).blocks[2] == IndexList{8, 9, 12, 13});

    CHECK(error_code_of([] { partition_regions(24, 5); }) == ErrorCode::NotDivisible);
}

TEST_CASE("partition_windows") {
    CHECK(partition_windows(24, 2).blocks.size() == 144);
    CHECK(partition_windows(24, 3).blocks.size() == 64);
    CHECK(partition_windows(2, 2).blocks == std::vector<IndexList>{{0, 1, 2, 3}});
    CHECK(partition_windows(6, 3).blocks[1] == IndexList{3, 4, 5, 9, 10, 11, 15, 16, 17});
    CHECK(error_code_of([] { partition_windows(24, 5); }) == ErrorCode::NotDivisible);
}

TEST_CASE("property: partitions are disjoint axis-aligned blocks covering the grid") {
    for (std::size_t n : {2, 4, 6, 12, 24}) {
        for (std::size_t side = 1; side <= n; ++side) {
            if (n % side != 0) {
                continue;
            }
            const auto p = partition_windows(n, side);
            std::vector<int> hits(n * n, 0);
            for (std::size_t b = 0; b < p.blocks.size(); ++b) {
                const auto& block = p.blocks[b];
                CHECK(block.size() == side * side);
                CHECK(std::is_sorted(block.begin(), block.end()));
                const std::size_t top = block.front() / n;
                const std::size_t left = block.front() % n;
                CHECK(top == (b / (n / side)) * side);
                CHECK(left == (b % (n / side)) * side);
                for (auto index : block) {
                    ++hits[index];
                    CHECK(index / n - top < side);
                    CHECK(index % n - left < side);
                }
            }
            CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
            CHECK(partition_regions(n, n / side).blocks == p.blocks);
        }
    }
}

TEST_CASE("region_quotas") {
    CHECK(region_quotas(make_config(24, 2, 50, 2)) == std::vector<std::size_t>{72, 72, 72, 72});
    CHECK(region_quotas(make_config(24, 2, 15, 2)) == std::vector<std::size_t>{22, 22, 21, 21});
    CHECK(region_quotas(make_config(24, 2, 14, 3)) == std::vector<std::size_t>{20, 20, 20, 20});
    CHECK(region_quotas(make_config(24, 2, 100, 2)) == std::vector<std::size_t>{144, 144, 144, 144});
    CHECK(region_quotas(make_config(12, 3, 25, 2)) == std::vector<std::size_t>(9, 4));
    for (int k = 1; k <= 100; ++k) {
        const auto q = region_quotas(make_config(12, 3, k, 2));
        CHECK(std::accumulate(q.begin(), q.end(), std::size_t{0}) == 144 * static_cast<std::size_t>(k) / 100);
        CHECK(*std::max_element(q.begin(), q.end()) - *std::min_element(q.begin(), q.end()) <= 1);
        CHECK(std::is_sorted(q.rbegin(), q.rend()));
    }
}

TEST_CASE("global_retain") {
    SUBCASE("uniform scores break ties toward the lowest index") {
        const ImportanceScores uniform{std::vector<double>(16, 0.5)};
        CHECK(global_retain(uniform, partition_regions(4, 2), {1, 1, 1, 1}) == IndexList{0, 2, 8, 10});
    }
    SUBCASE("direct top-2") {
        const ImportanceScores scores{{0.1, 0.4, 0.3, 0.2}};
        CHECK(global_retain(scores, partition_regions(2, 1), {2}) == IndexList{1, 2});
    }
    SUBCASE("quota checks") {
        const ImportanceScores scores{{0.1, 0.4, 0.3, 0.2}};
        CHECK(error_code_of([&] { global_retain(scores, partition_regions(2, 1), {5}); }) ==
              ErrorCode::QuotaExceedsRegion);
        CHECK(error_code_of([&] { global_retain(scores, partition_regions(2, 1), {1, 1}); }) ==
              ErrorCode::ShapeMismatch);
        CHECK(error_code_of([&] { global_retain(scores, partition_regions(4, 2), {1, 1, 1, 1}); }) ==
              ErrorCode::ShapeMismatch);
    }
    SUBCASE("matches a sorted-prefix oracle over 1000 seeds") {
        const auto config = make_config(12, 3, 25, 2);
        const auto regions = partition_regions(12, 3);
        const auto quotas = region_quotas(config);
        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            // Every other seed uses 5 score levels to force ties.
            const auto scores = synth::random_scores(seed, 144, seed % 2 == 0 ? 0 : 5);
            REQUIRE(global_retain(scores, regions, quotas) == sorted_prefix_oracle(scores, regions, quotas));
        }
    }
}

TEST_CASE("local_retain") {
    SUBCASE("nothing left when every token is global") {
        const auto scores = synth::random_scores(1, 16);
        IndexList all(16);
        std::iota(all.begin(), all.end(), 0);
        CHECK(local_retain(scores, partition_windows(4, 2), all).empty());
    }
    SUBCASE("argmax over the remaining candidates") {
        const ImportanceScores scores{{0.9, 0.2, 0.2, 0.5}};
        CHECK(local_retain(scores, partition_windows(2, 2), {0}) == IndexList{3});
        CHECK(local_retain(scores, partition_windows(2, 2), {0, 3}) == IndexList{1});
    }
    SUBCASE("matches a per-window scan over 1000 seeds") {
        const auto config = make_config(12, 2, 25, 2);
        const auto regions = partition_regions(12, 2);
        const auto windows = partition_windows(12, 2);
        const auto quotas = region_quotas(config);
        for (std::uint64_t seed = 0; seed < 1000; ++seed) {
            const auto scores = synth::random_scores(seed, 144, seed % 2 == 0 ? 0 : 3);
            const auto global = global_retain(scores, regions, quotas);
            REQUIRE(local_retain(scores, windows, global) == window_scan_oracle(scores, 12, 2, global));
        }
    }
    SUBCASE("out-of-range global index") {
        const auto scores = synth::random_scores(1, 4);
        CHECK(error_code_of([&] { local_retain(scores, partition_windows(2, 2), {4}); }) == ErrorCode::ShapeMismatch);
    }
}

TEST_CASE("finalize") {
    const auto tokens = ramp_tokens(16, 3);
    const auto [selection, retained] = finalize({5, 1}, {3}, tokens, 16);
    CHECK(selection.final_indices == IndexList{1, 3, 5});
    CHECK(selection.global_indices == IndexList{1, 5});
    CHECK(selection.local_indices == IndexList{3});
    CHECK(selection.global_count == 2);
    CHECK(selection.local_count == 1);
    CHECK(selection.retained == 3);
    CHECK(selection.retain_ratio == 3.0 / 16.0);
    CHECK(retained.rows() == 3);
    CHECK(retained.cols() == 3);
    const auto values = retained.tensor().values<float>();
    CHECK(std::vector<float>(values.begin(), values.end()) == std::vector<float>{3, 4, 5, 9, 10, 11, 15, 16, 17});

    CHECK(error_code_of([&] { finalize({1, 2}, {2}, tokens, 16); }) == ErrorCode::OverlapDetected);
    CHECK(error_code_of([&] { finalize({1}, {2}, tokens, 9); }) == ErrorCode::ShapeMismatch);
    CHECK(error_code_of([&] { finalize({1, 1}, {2}, tokens, 16); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("k = 100 keeps everything globally") {
    const auto config = make_config(12, 2, 100, 2);
    const auto scores = synth::random_scores(3, 144);
    const auto selection = select_tokens(scores, config);
    CHECK(selection.global_count == 144);
    CHECK(selection.local_indices.empty());
    CHECK(selection.retained == 144);
    CHECK(selection.retain_ratio == 1.0);
}

TEST_CASE("non-finite scores are rejected") {
    auto scores = synth::random_scores(3, 16);
    scores.values[4] = std::nan("");
    CHECK(error_code_of([&] { select_tokens(scores, make_config(4, 2, 25, 2)); }) == ErrorCode::NaNPayload);
}

TEST_CASE("end-to-end on a 24x24 synthetic stack") {
    synth::SynthSpec spec;
    spec.grid_side = 24;
    spec.layers = 10;
    spec.heads = 2;
    spec.peaks = synth::peaks_per_region(5, 24, 2, 8.0, 1.5);
    const auto sample = synth::generate(spec);

    const auto config = make_config(24, 2, 25, 2);
    const auto out = hivtp_prune(sample.stack, sample.tokens, config);
    CHECK(out.selection.global_count == 144);
    CHECK(out.selection.retained <= 288);
    CHECK(out.selection.retain_ratio <= 0.5);
    CHECK(out.retained.rows() == out.selection.retained);
    CHECK(out.retained == sample.tokens.gather(out.selection.final_indices));
    CHECK(out.scores == compute_importance(sample.stack, config.layers));
    CHECK(synth::check_selection_invariants(out.selection, out.scores, config).empty());

    // Same selection through the precomputed-scores path.
    CHECK(prune_with_scores(out.scores, sample.tokens, config).selection == out.selection);

    CHECK(error_code_of([&] { hivtp_prune(sample.stack, sample.tokens, make_config(12, 2, 25, 2)); }) ==
          ErrorCode::ShapeMismatch);
    CHECK(error_code_of([&] { hivtp_prune(sample.stack, ramp_tokens(10, 2), config); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("property: invariants over random instances") {
    const std::vector<PruneConfig> configs{make_config(12, 2, 50, 2), make_config(12, 2, 25, 2),
                                           make_config(12, 2, 15, 2), make_config(12, 2, 14, 3),
                                           make_config(12, 3, 33.3, 4), make_config(12, 4, 7.5, 6)};
    for (std::uint64_t seed = 0; seed < 250; ++seed) {
        const auto scores = synth::random_scores(seed, 144, static_cast<std::uint32_t>(seed % 4 == 0 ? 2 : 0));
        for (const auto& config : configs) {
            const auto selection = select_tokens(scores, config);
            const auto violations = synth::check_selection_invariants(selection, scores, config);
            CHECK_MESSAGE(violations.empty(), (violations.empty() ? "" : violations.front()));
        }
    }
}

TEST_CASE("property: global selection grows monotonically with k") {
    const std::vector<double> ks{10, 15, 25, 50, 100};
    for (std::uint64_t seed = 0; seed < 250; ++seed) {
        const auto scores = synth::random_scores(seed, 144, static_cast<std::uint32_t>(seed % 3 == 0 ? 4 : 0));
        IndexList previous;
        for (double k : ks) {
            const auto global = select_tokens(scores, make_config(12, 2, k, 2)).global_indices;
            CHECK(std::includes(global.begin(), global.end(), previous.begin(), previous.end()));
            previous = global;
        }
    }
}

TEST_CASE("property: positive rescaling of scores changes nothing") {
    for (std::uint64_t seed = 0; seed < 250; ++seed) {
        const auto scores = synth::random_scores(seed, 144, static_cast<std::uint32_t>(seed % 2 == 0 ? 6 : 0));
        synth::SplitMix64 rng(seed + 17);
        const double factor = std::ldexp(1.0, static_cast<int>(rng.below(20)) - 10);
        ImportanceScores scaled = scores;
        for (auto& v : scaled.values) {
            v *= factor;
        }
        const auto config = make_config(12, 2, 25, 3);
        CHECK(select_tokens(scaled, config) == select_tokens(scores, config));
    }
}

TEST_CASE("prune_batch") {
    const auto config = [] {
        auto c = make_config(12, 2, 25, 2);
        c.layers = LayerSet({1, 2});
        return c;
    }();
    const auto sample_for = [](std::uint64_t seed) {
        synth::SynthSpec spec;
        spec.seed = seed;
        spec.grid_side = 12;
        spec.layers = 2;
        spec.heads = 2;
        spec.peaks = synth::peaks_per_region(seed, 12, 2, 6.0, 1.5);
        auto sample = synth::generate(spec);
        return PruneInput{std::move(sample.stack), std::move(sample.tokens)};
    };

    SUBCASE("single element equals the direct call") {
        const std::vector<PruneInput> batch{sample_for(1)};
        const auto results = prune_batch(batch, config);
        REQUIRE(results.size() == 1);
        REQUIRE(results[0].ok());
        const auto direct = hivtp_prune(batch[0].stack, batch[0].tokens, config);
        CHECK(results[0].output->selection == direct.selection);
        CHECK(results[0].output->retained == direct.retained);
        CHECK(results[0].output->scores == direct.scores);
    }
    SUBCASE("identical images give identical results") {
        std::vector<PruneInput> batch;
        for (int i = 0; i < 5; ++i) {
            batch.push_back(sample_for(9));
        }
        const auto results = prune_batch(batch, config, 3);
        for (const auto& item : results) {
            REQUIRE(item.ok());
            CHECK(item.output->selection == results[0].output->selection);
        }
    }
    SUBCASE("permuting the batch permutes the results") {
        std::vector<PruneInput> batch;
        for (std::uint64_t s = 0; s < 6; ++s) {
            batch.push_back(sample_for(100 + s));
        }
        const auto base = prune_batch(batch, config, 1);
        for (std::uint64_t trial = 0; trial < 5; ++trial) {
            std::vector<std::size_t> order(batch.size());
            std::iota(order.begin(), order.end(), 0);
            synth::SplitMix64 rng(trial);
            for (std::size_t i = order.size(); i > 1; --i) {
                std::swap(order[i - 1], order[rng.below(static_cast<std::uint32_t>(i))]);
            }
            std::vector<PruneInput> shuffled;
            for (auto o : order) {
                shuffled.push_back(batch[o]);
            }
            const auto results = prune_batch(shuffled, config, 4);
            for (std::size_t i = 0; i < order.size(); ++i) {
                CHECK(results[i].index == i);
                CHECK(results[i].output->selection == base[order[i]].output->selection);
            }
        }
    }
    SUBCASE("a failing element is reported and the rest still run") {
        std::vector<PruneInput> batch{sample_for(1), sample_for(2), sample_for(3)};
        synth::SynthSpec other;
        other.grid_side = 6;
        other.layers = 2;
        other.heads = 1;
        auto wrong = synth::generate(other);
        batch[1] = PruneInput{std::move(wrong.stack), std::move(wrong.tokens)};
        const auto results = prune_batch(batch, config, 2);
        CHECK(results[0].ok());
        CHECK_FALSE(results[1].ok());
        REQUIRE(results[1].error.has_value());
        CHECK(results[1].error->code() == ErrorCode::ShapeMismatch);
        CHECK(results[1].index == 1);
        CHECK(results[2].ok());
    }
}
