// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "hivtp/costmodel.hpp"
#include "hivtp/synth.hpp"
#include "reference.hpp"

using namespace hivtp;
using namespace hivtp::cost;
using hivtp::test::error_code_of;

namespace {

const std::vector<Measurement> kTtft{{576, 140}, {404, 114}, {282, 92}, {226, 75}, {142, 70}};
const std::vector<Measurement> kThroughput{{576, 18.66}, {404, 22.95}, {282, 23.7}, {226, 27.99}, {142, 30.02}};

bool close_rel(double got, double want, double tol) {
    return std::abs(got - want) <= tol * std::max(1.0, std::abs(want));
}

// Optimality conditions for min ||X c - y||^2 subject to c_k >= 0 for the
// slope terms: the gradient vanishes on free terms and points outward on
// clamped ones.
void check_kkt(const std::vector<Measurement>& points, const std::vector<double>& coeffs) {
    double scale = 0.0;
    for (const auto& p : points) {
        scale = std::max(scale, std::abs(p.tokens));
    }
    std::vector<double> gradient(coeffs.size(), 0.0);
    double y_norm = 0.0;
    for (const auto& p : points) {
        double predicted = 0.0;
        for (std::size_t k = 0; k < coeffs.size(); ++k) {
            predicted += coeffs[k] * std::pow(p.tokens, static_cast<double>(k));
        }
        const double residual = predicted - p.latency_ms;
        for (std::size_t k = 0; k < coeffs.size(); ++k) {
            gradient[k] += 2.0 * residual * std::pow(p.tokens / scale, static_cast<double>(k));
        }
        y_norm += p.latency_ms * p.latency_ms;
    }
    const double tol = 1e-7 * std::max(1.0, std::sqrt(y_norm)) * static_cast<double>(points.size());
    CHECK(std::abs(gradient[0]) <= tol);
    for (std::size_t k = 1; k < coeffs.size(); ++k) {
        CHECK(coeffs[k] >= 0.0);
        if (coeffs[k] > 0.0) {
            CHECK(std::abs(gradient[k]) <= tol);
        } else {
            CHECK(gradient[k] >= -tol);
        }
    }
}

}  // namespace

TEST_CASE("exact quadratic interpolation") {
    const auto model = fit_prefill({{1, 1}, {2, 4}, {3, 9}});
    CHECK(std::abs(model.a2 - 1.0) < 1e-9);
    CHECK(std::abs(model.a1) < 1e-9);
    CHECK(std::abs(model.a0) < 1e-9);
}

TEST_CASE("constant latencies give a flat model at the mean") {
    const auto prefill = fit_prefill({{100, 50}, {200, 50}, {300, 50}, {400, 50}});
    CHECK(prefill.a2 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(prefill.a1) < 1e-12);
    CHECK(prefill.a0 == doctest::Approx(50.0).epsilon(1e-12));
    const auto decode = fit_decode({{100, 8}, {200, 8}, {300, 8}});
    CHECK(std::abs(decode.b1) < 1e-12);
    CHECK(decode.b0 == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("recovers known coefficients from noiseless data") {
    synth::SplitMix64 rng(2026);
    for (int trial = 0; trial < 100; ++trial) {
        const PrefillModel truth{rng.uniform() * 1e-3, rng.uniform(), 10.0 + 100.0 * rng.uniform()};
        const DecodeModel decode_truth{rng.uniform() * 0.1, 5.0 + rng.uniform() * 20.0};
        std::vector<Measurement> prefill_points;
        std::vector<Measurement> decode_points;
        for (double s : {120.0, 250.0, 380.0, 500.0, 640.0, 900.0}) {
            prefill_points.push_back({s, truth(s)});
            decode_points.push_back({s, decode_truth(s)});
        }
        const auto fitted = fit_prefill(prefill_points);
        CHECK(close_rel(fitted.a2, truth.a2, 1e-6));
        CHECK(close_rel(fitted.a1, truth.a1, 1e-6));
        CHECK(close_rel(fitted.a0, truth.a0, 1e-6));
        const auto fitted_decode = fit_decode(decode_points);
        CHECK(close_rel(fitted_decode.b1, decode_truth.b1, 1e-6));
        CHECK(close_rel(fitted_decode.b0, decode_truth.b0, 1e-6));
    }
}

TEST_CASE("negative slopes are clamped and the rest refit") {
    SUBCASE("concave data drops the quadratic term") {
        const std::vector<Measurement> points{{1, 1}, {4, 2}, {9, 3}, {16, 4}};
        const auto model = fit_prefill(points);
        CHECK(model.a2 == 0.0);
        // Simple linear regression of latency on tokens.
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& p : points) {
            sx += p.tokens;
            sy += p.latency_ms;
            sxx += p.tokens * p.tokens;
            sxy += p.tokens * p.latency_ms;
        }
        const double slope = (4 * sxy - sx * sy) / (4 * sxx - sx * sx);
        CHECK(model.a1 == doctest::Approx(slope).epsilon(1e-10));
        CHECK(model.a0 == doctest::Approx((sy - slope * sx) / 4).epsilon(1e-10));
    }
    SUBCASE("decreasing decode times fall back to the mean") {
        const auto model = fit_decode({{100, 9}, {200, 6}, {300, 3}});
        CHECK(model.b1 == 0.0);
        CHECK(model.b0 == doctest::Approx(6.0));
    }
    SUBCASE("optimality over random data") {
        synth::SplitMix64 rng(77);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<Measurement> points;
            for (int i = 0; i < 6; ++i) {
                points.push_back({50.0 + 600.0 * rng.uniform(), 200.0 * rng.uniform()});
            }
            const auto prefill = fit_prefill(points);
            check_kkt(points, {prefill.a0, prefill.a1, prefill.a2});
            const auto decode = fit_decode(points);
            check_kkt(points, {decode.b0, decode.b1});
        }
    }
}

TEST_CASE("fit preconditions") {
    CHECK(error_code_of([] { fit_prefill({{1, 1}, {2, 2}, {2, 3}}); }) == ErrorCode::InsufficientData);
    CHECK(error_code_of([] { fit_prefill({}); }) == ErrorCode::InsufficientData);
    CHECK(error_code_of([] { fit_decode({{1, 1}, {1, 2}}); }) == ErrorCode::InsufficientData);
    CHECK(error_code_of([] { fit_decode({{1, 1}, {2, std::nan("")}}); }) == ErrorCode::InvalidArgument);
    CHECK(error_code_of([] { throughput_to_decode_ms({{1, 0.0}}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("three measured TTFT points give a monotone model") {
    const auto model = fit_prefill({{576, 140}, {282, 92}, {142, 70}});
    for (double s = 100.0; s < 600.0; s += 1.0) {
        CHECK(model(s + 1.0) >= model(s));
    }
}

TEST_CASE("measured latencies: direction of the speedup") {
    const CostCoefficients coeffs{fit_prefill(kTtft), fit_decode(throughput_to_decode_ms(kThroughput))};
    CHECK(coeffs.prefill.a2 >= 0.0);
    CHECK(coeffs.decode.b1 > 0.0);
    for (double s = 140.0; s < 620.0; s += 1.0) {
        CHECK(coeffs.prefill(s + 1.0) >= coeffs.prefill(s));
        CHECK(1.0 / coeffs.decode(s + 1.0) <= 1.0 / coeffs.decode(s));
    }
    const auto speedup = predict_speedup(coeffs, 576, 142);
    CHECK(speedup.ttft_ratio < 1.0);
    CHECK(speedup.throughput_ratio > 1.0);
}

TEST_CASE("predict_speedup") {
    const CostCoefficients quadratic{{1.0, 0.0, 0.0}, {1.0, 0.0}};
    const auto halved = predict_speedup(quadratic, 4, 2);
    CHECK(halved.ttft_ratio == 0.25);
    CHECK(halved.throughput_ratio == 2.0);

    const CostCoefficients fitted{fit_prefill(kTtft), fit_decode(throughput_to_decode_ms(kThroughput))};
    for (double s : {1.0, 142.0, 576.0}) {
        const auto same = predict_speedup(fitted, s, s);
        CHECK(same.ttft_ratio == 1.0);
        CHECK(same.throughput_ratio == 1.0);
    }
    CHECK(error_code_of([&] { predict_speedup(fitted, 0, 10); }) == ErrorCode::InvalidArgument);
    CHECK(error_code_of([&] { predict_speedup(fitted, 10, -1); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("csv parsing") {
    const auto points = parse_csv("tokens,latency_ms\n576, 140\n# comment\n\n404,114 # trailing note\r\n");
    REQUIRE(points.size() == 2);
    CHECK(points[0].tokens == 576);
    CHECK(points[1].latency_ms == 114);
    CHECK(parse_csv("1,2\n3,4\n").size() == 2);
    CHECK(parse_csv("# note\n\ntokens,ms\n1,2\n").size() == 1);
    CHECK(error_code_of([] { parse_csv("tokens,ms\nagain,header\n"); }) == ErrorCode::InvalidArgument);
    CHECK(error_code_of([] { parse_csv("1,2\nx,y\n"); }) == ErrorCode::InvalidArgument);
    CHECK(error_code_of([] { parse_csv("1 2\n"); }) == ErrorCode::InvalidArgument);
    CHECK(error_code_of([] { parse_csv("1,2\n3,4abc\n"); }) == ErrorCode::InvalidArgument);

    const auto ttft = read_csv(test::data_dir() / "llava15_ttft.csv");
    REQUIRE(ttft.size() == kTtft.size());
    for (std::size_t i = 0; i < ttft.size(); ++i) {
        CHECK(ttft[i].tokens == kTtft[i].tokens);
        CHECK(ttft[i].latency_ms == kTtft[i].latency_ms);
    }
    const auto decode = read_csv(test::data_dir() / "llava15_decode.csv");
    const auto converted = throughput_to_decode_ms(kThroughput);
    REQUIRE(decode.size() == converted.size());
    for (std::size_t i = 0; i < decode.size(); ++i) {
        CHECK(decode[i].latency_ms == doctest::Approx(converted[i].latency_ms).epsilon(1e-7));
    }
    CHECK(error_code_of([] { read_csv("/nonexistent/costs.csv"); }) == ErrorCode::IoFailure);
}

TEST_CASE("key=value dump") {
    const CostCoefficients coeffs{{1.5, 2.0, 3.0}, {0.25, 4.0}};
    CHECK(to_key_value(coeffs) == "a2=1.5\na1=2\na0=3\nb1=0.25\nb0=4\n");
}
