// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#include "hivtp/error.hpp"

namespace hivtp {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::TrailingBytes: return "TrailingBytes";
    case ErrorCode::NaNPayload: return "NaNPayload";
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::LayerOutOfRange: return "LayerOutOfRange";
    case ErrorCode::InvalidLayerSet: return "InvalidLayerSet";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotPerfectSquare: return "NotPerfectSquare";
    case ErrorCode::NotDivisible: return "NotDivisible";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::QuotaExceedsRegion: return "QuotaExceedsRegion";
    case ErrorCode::OverlapDetected: return "OverlapDetected";
    case ErrorCode::InvalidAttention: return "InvalidAttention";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DegenerateDesign: return "DegenerateDesign";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      m_code(code),
      m_message(message) {}

int Error::exit_code() const noexcept {
    return m_code == ErrorCode::IoFailure ? 1 : 2;
}

}  // namespace hivtp
