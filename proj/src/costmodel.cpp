// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#include "hivtp/costmodel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include "hivtp/error.hpp"
#include "hivtp/tensor_io.hpp"

namespace hivtp::cost {

namespace {

std::size_t distinct_token_counts(const std::vector<Measurement>& points) {
    std::set<double> distinct;
    for (const auto& p : points) {
        if (!std::isfinite(p.tokens) || !std::isfinite(p.latency_ms)) {
            throw Error(ErrorCode::InvalidArgument, "measurements must be finite");
        }
        distinct.insert(p.tokens);
    }
    return distinct.size();
}

// Non-negative least squares over `degree` slope terms (powers 1..degree) and
// a free intercept. With at most two constrained terms every active set is
// enumerated; the feasible solution with the smallest residual is the NNLS
// optimum.
std::vector<double> fit_polynomial(const std::vector<Measurement>& points, int degree) {
    // Columns are scaled by the largest |tokens| to keep the design well conditioned.
    double scale = 0.0;
    for (const auto& p : points) {
        scale = std::max(scale, std::abs(p.tokens));
    }
    if (scale == 0.0) {
        scale = 1.0;
    }

    const auto rows = static_cast<Eigen::Index>(points.size());
    Eigen::VectorXd y(rows);
    Eigen::MatrixXd powers(rows, degree + 1);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double x = points[static_cast<std::size_t>(i)].tokens / scale;
        y(i) = points[static_cast<std::size_t>(i)].latency_ms;
        for (int k = 0; k <= degree; ++k) {
            powers(i, k) = std::pow(x, k);
        }
    }

    std::vector<double> best;
    double best_residual = std::numeric_limits<double>::infinity();
    const unsigned subsets = 1u << degree;
    for (unsigned free_mask = subsets; free_mask-- > 0;) {
        std::vector<int> columns{0};
        for (int k = 1; k <= degree; ++k) {
            if (free_mask & (1u << (k - 1))) {
                columns.push_back(k);
            }
        }
        Eigen::MatrixXd design(rows, static_cast<Eigen::Index>(columns.size()));
        for (std::size_t c = 0; c < columns.size(); ++c) {
            design.col(static_cast<Eigen::Index>(c)) = powers.col(columns[c]);
        }
        const auto qr = design.colPivHouseholderQr();
        if (qr.rank() < design.cols()) {
            if (free_mask == subsets - 1) {
                throw Error(ErrorCode::DegenerateDesign, "least-squares design matrix is rank deficient");
            }
            continue;
        }
        const Eigen::VectorXd solution = qr.solve(y);
        bool feasible = true;
        for (std::size_t c = 1; c < columns.size(); ++c) {
            feasible = feasible && solution(static_cast<Eigen::Index>(c)) >= 0.0;
        }
        if (!feasible) {
            continue;
        }
        const double residual = (design * solution - y).squaredNorm();
        // Prefer the larger free set on exact ties so unconstrained fits stay unconstrained.
        if (residual < best_residual * (1.0 - 1e-12) || best.empty()) {
            best.assign(static_cast<std::size_t>(degree) + 1, 0.0);
            for (std::size_t c = 0; c < columns.size(); ++c) {
                best[static_cast<std::size_t>(columns[c])] =
                    solution(static_cast<Eigen::Index>(c)) / std::pow(scale, columns[c]);
            }
            best_residual = residual;
        }
    }
    if (best.empty()) {
        throw Error(ErrorCode::DegenerateDesign, "no feasible non-negative fit");
    }
    for (std::size_t k = 1; k < best.size(); ++k) {
        best[k] = std::max(best[k], 0.0);
    }
    return best;
}

}  // namespace

PrefillModel fit_prefill(const std::vector<Measurement>& points) {
    if (distinct_token_counts(points) < 3) {
        throw Error(ErrorCode::InsufficientData, "prefill fit needs at least 3 distinct token counts");
    }
    const auto c = fit_polynomial(points, 2);
    return PrefillModel{c[2], c[1], c[0]};
}

DecodeModel fit_decode(const std::vector<Measurement>& points) {
    if (distinct_token_counts(points) < 2) {
        throw Error(ErrorCode::InsufficientData, "decode fit needs at least 2 distinct token counts");
    }
    const auto c = fit_polynomial(points, 1);
    return DecodeModel{c[1], c[0]};
}

std::vector<Measurement> throughput_to_decode_ms(const std::vector<Measurement>& tokens_per_second) {
    std::vector<Measurement> out;
    out.reserve(tokens_per_second.size());
    for (const auto& p : tokens_per_second) {
        if (!(p.latency_ms > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "throughput must be positive");
        }
        out.push_back({p.tokens, 1000.0 / p.latency_ms});
    }
    return out;
}

Speedup predict_speedup(const CostCoefficients& coeffs, double tokens_before, double tokens_after) {
    if (!(tokens_before > 0.0) || !(tokens_after > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "token counts must be positive");
    }
    Speedup s;
    s.ttft_ratio = coeffs.prefill(tokens_after) / coeffs.prefill(tokens_before);
    s.throughput_ratio = coeffs.decode(tokens_before) / coeffs.decode(tokens_after);
    return s;
}

std::vector<Measurement> parse_csv(const std::string& text) {
    std::vector<Measurement> points;
    std::istringstream stream(text);
    std::size_t line_number = 0;
    bool first_content_line = true;
    for (std::string line; std::getline(stream, line);) {
        ++line_number;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const bool may_be_header = std::exchange(first_content_line, false);
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line_number) + ": expected tokens,latency_ms");
        }
        try {
            std::size_t used_tokens = 0;
            std::size_t used_latency = 0;
            const std::string tokens_text = line.substr(0, comma);
            const std::string latency_text = line.substr(comma + 1);
            const double tokens = std::stod(tokens_text, &used_tokens);
            const double latency = std::stod(latency_text, &used_latency);
            if (tokens_text.find_first_not_of(" \t\r", used_tokens) != std::string::npos ||
                latency_text.find_first_not_of(" \t\r", used_latency) != std::string::npos) {
                throw std::invalid_argument("trailing characters");
            }
            points.push_back({tokens, latency});
        } catch (const std::invalid_argument&) {
            if (may_be_header) {
                continue;
            }
            throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line_number) + ": not numeric");
        } catch (const std::out_of_range&) {
            throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line_number) + ": value out of range");
        }
    }
    return points;
}

std::vector<Measurement> read_csv(const std::filesystem::path& path) {
    const auto bytes = io::read_file_bytes(path);
    return parse_csv(std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string to_key_value(const CostCoefficients& coeffs) {
    char buffer[256];
    std::snprintf(buffer, sizeof(buffer), "a2=%.9g\na1=%.9g\na0=%.9g\nb1=%.9g\nb0=%.9g\n", coeffs.prefill.a2,
                  coeffs.prefill.a1, coeffs.prefill.a0, coeffs.decode.b1, coeffs.decode.b0);
    return buffer;
}

}  // namespace hivtp::cost
