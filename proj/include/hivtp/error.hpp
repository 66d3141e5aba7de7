// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hivtp {

enum class ErrorCode {
    BadMagic,
    UnsupportedVersion,
    UnsupportedDtype,
    TruncatedPayload,
    TrailingBytes,
    NaNPayload,
    InvalidShape,
    IoFailure,
    LayerOutOfRange,
    InvalidLayerSet,
    ShapeMismatch,
    NotPerfectSquare,
    NotDivisible,
    InvalidConfig,
    QuotaExceedsRegion,
    OverlapDetected,
    InvalidAttention,
    InvalidSpec,
    InsufficientData,
    DegenerateDesign,
    InvalidArgument,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the engine. `what()` is "<CodeName>: <message>".
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return m_code; }
    const std::string& message() const noexcept { return m_message; }

    /// 1 for I/O failures, 2 for everything else (validation).
    int exit_code() const noexcept;

private:
    ErrorCode m_code;
    std::string m_message;
};

}  // namespace hivtp
