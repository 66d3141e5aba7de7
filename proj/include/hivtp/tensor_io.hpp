// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// HVTD: one tensor per file.
//
//   offset  size        field
//   0       4           magic "HVTD"
//   4       1           version (1)
//   5       1           dtype code (1 = f32, 2 = f64, 3 = u32)
//   6       1           ndim (1..4)
//   7       4 * ndim    dims, u32 little-endian
//   ...     payload     row-major (last axis fastest), little-endian
//
// The payload must end exactly at end of file.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace hivtp::io {

inline constexpr std::uint8_t kHvtdVersion = 1;
inline constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 31;

enum class DType : std::uint8_t {
    F32 = 1,
    F64 = 2,
    U32 = 3,
};

std::size_t dtype_size(DType dtype);

struct HvtdHeader {
    std::uint8_t version = kHvtdVersion;
    DType dtype = DType::F32;
    std::vector<std::uint32_t> dims;

    std::uint64_t element_count() const;
    std::size_t encoded_size() const { return 7 + 4 * dims.size(); }
};

class TensorBuffer {
public:
    using Storage = std::variant<std::vector<float>, std::vector<double>, std::vector<std::uint32_t>>;

    TensorBuffer() = default;

    /// Throws InvalidShape when dims are unusable or do not match the data length.
    TensorBuffer(std::vector<std::uint32_t> dims, Storage data);

    DType dtype() const;
    const std::vector<std::uint32_t>& dims() const { return m_dims; }
    std::size_t ndim() const { return m_dims.size(); }
    std::size_t size() const;
    HvtdHeader header() const { return {kHvtdVersion, dtype(), m_dims}; }

    const Storage& storage() const { return m_data; }
    Storage& storage() { return m_data; }

    template <typename T>
    std::span<const T> values() const {
        return std::get<std::vector<T>>(m_data);
    }

    template <typename T>
    bool holds() const {
        return std::holds_alternative<std::vector<T>>(m_data);
    }

    /// Any floating dtype widened to double; u32 converted exactly.
    std::vector<double> to_f64() const;

    bool operator==(const TensorBuffer& other) const = default;

private:
    std::vector<std::uint32_t> m_dims;
    Storage m_data;
};

struct ReadOptions {
    /// Reject NaN in floating payloads.
    bool strict_nan = true;
};

std::vector<std::byte> encode_hvtd(const TensorBuffer& buffer);
TensorBuffer decode_hvtd(std::span<const std::byte> bytes, const ReadOptions& options = {});

TensorBuffer read_hvtd(const std::filesystem::path& path, const ReadOptions& options = {});
void write_hvtd(const TensorBuffer& buffer, const std::filesystem::path& path);

/// Whole-file helpers shared by the other file formats.
std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(std::span<const std::byte> bytes, const std::filesystem::path& path);

}  // namespace hivtp::io
