// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Trend-level inference cost model in total sequence length s (visual + text
// tokens), LLM side only:
//
//   prefill latency     T(s) = a2 s^2 + a1 s + a0
//   per-token decode    D(s) = b1 s + b0,   throughput ~ 1 / D(s)
//
// Quadratic prefill and linear decode are modelling assumptions (attention
// over the prompt vs. a growing KV cache), not measured facts. Absolute
// numbers are hardware-bound; only ratios are meaningful.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace hivtp::cost {

struct Measurement {
    double tokens = 0.0;
    double latency_ms = 0.0;
};

struct PrefillModel {
    double a2 = 0.0;
    double a1 = 0.0;
    double a0 = 0.0;
    double operator()(double tokens) const { return (a2 * tokens + a1) * tokens + a0; }
};

struct DecodeModel {
    double b1 = 0.0;
    double b0 = 0.0;
    double operator()(double tokens) const { return b1 * tokens + b0; }
};

struct CostCoefficients {
    PrefillModel prefill;
    DecodeModel decode;
};

/// Least-squares quadratic with a2, a1 >= 0 (exact active-set solution).
/// InsufficientData below 3 distinct token counts; DegenerateDesign if the
/// system is singular.
PrefillModel fit_prefill(const std::vector<Measurement>& points);

/// Least-squares line with b1 >= 0. Needs 2 distinct token counts.
DecodeModel fit_decode(const std::vector<Measurement>& points);

/// Decode points given as (tokens, tokens per second) are converted to
/// milliseconds per generated token before fitting.
std::vector<Measurement> throughput_to_decode_ms(const std::vector<Measurement>& tokens_per_second);

struct Speedup {
    double ttft_ratio = 1.0;        // T(after) / T(before)
    double throughput_ratio = 1.0;  // D(before) / D(after)
};

/// InvalidArgument unless both counts are positive.
Speedup predict_speedup(const CostCoefficients& coeffs, double tokens_before, double tokens_after);

/// `tokens,latency_ms` lines; blank lines, '#' comments and a non-numeric
/// header line are skipped.
std::vector<Measurement> parse_csv(const std::string& text);
std::vector<Measurement> read_csv(const std::filesystem::path& path);

/// key=value lines a2, a1, a0, b1, b0.
std::string to_key_value(const CostCoefficients& coeffs);

}  // namespace hivtp::cost
