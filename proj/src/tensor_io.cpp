// Copyright (C) 2026 The hivtp Authors
// SPDX-License-Identifier: Apache-2.0

#include "hivtp/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "hivtp/error.hpp"

namespace hivtp::io {

namespace {

constexpr std::byte kMagic[4] = {std::byte{'H'}, std::byte{'V'}, std::byte{'T'}, std::byte{'D'}};

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T byteswap_if_big(T value) {
    if constexpr (std::endian::native == std::endian::big) {
        auto raw = std::bit_cast<std::array<std::byte, sizeof(T)>>(value);
        std::reverse(raw.begin(), raw.end());
        return std::bit_cast<T>(raw);
    }
    return value;
}

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
    v = byteswap_if_big(v);
    const auto* p = reinterpret_cast<const std::byte*>(&v);
    out.insert(out.end(), p, p + 4);
}

std::uint32_t get_u32(const std::byte* p) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return byteswap_if_big(v);
}

template <typename T>
void append_payload(std::vector<std::byte>& out, const std::vector<T>& values) {
    const std::size_t offset = out.size();
    out.resize(offset + values.size() * sizeof(T));
    if constexpr (std::endian::native == std::endian::little) {
        if (!values.empty()) {
            std::memcpy(out.data() + offset, values.data(), values.size() * sizeof(T));
        }
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) {
            T v = byteswap_if_big(values[i]);
            std::memcpy(out.data() + offset + i * sizeof(T), &v, sizeof(T));
        }
    }
}

template <typename T>
std::vector<T> extract_payload(const std::byte* p, std::size_t count) {
    std::vector<T> values(count);
    if (count != 0) {
        std::memcpy(values.data(), p, count * sizeof(T));
    }
    if constexpr (std::endian::native == std::endian::big) {
        for (auto& v : values) {
            v = byteswap_if_big(v);
        }
    }
    return values;
}

template <typename T>
void reject_nan(const std::vector<T>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::isnan(values[i])) {
            throw Error(ErrorCode::NaNPayload, "NaN at flat element " + std::to_string(i));
        }
    }
}

void validate_dims(const std::vector<std::uint32_t>& dims) {
    if (dims.empty() || dims.size() > 4) {
        throw Error(ErrorCode::InvalidShape, "ndim must be in 1..4, got " + std::to_string(dims.size()));
    }
    std::uint64_t product = 1;
    for (auto d : dims) {
        product *= d;
        if (product > kMaxElements) {
            throw Error(ErrorCode::InvalidShape, "element count exceeds 2^31");
        }
    }
}

}  // namespace

std::size_t dtype_size(DType dtype) {
    switch (dtype) {
    case DType::F32: return 4;
    case DType::F64: return 8;
    case DType::U32: return 4;
    }
    throw Error(ErrorCode::UnsupportedDtype, "unknown dtype");
}

std::uint64_t HvtdHeader::element_count() const {
    std::uint64_t product = 1;
    for (auto d : dims) {
        product *= d;
    }
    return product;
}

TensorBuffer::TensorBuffer(std::vector<std::uint32_t> dims, Storage data)
    : m_dims(std::move(dims)),
      m_data(std::move(data)) {
    validate_dims(m_dims);
    const std::uint64_t expected = header().element_count();
    if (expected != size()) {
        throw Error(ErrorCode::InvalidShape,
                    "data length " + std::to_string(size()) + " does not match dims product " +
                        std::to_string(expected));
    }
}

DType TensorBuffer::dtype() const {
    switch (m_data.index()) {
    case 0: return DType::F32;
    case 1: return DType::F64;
    default: return DType::U32;
    }
}

std::size_t TensorBuffer::size() const {
    return std::visit([](const auto& v) { return v.size(); }, m_data);
}

std::vector<double> TensorBuffer::to_f64() const {
    return std::visit([](const auto& v) { return std::vector<double>(v.begin(), v.end()); }, m_data);
}

std::vector<std::byte> encode_hvtd(const TensorBuffer& buffer) {
    validate_dims(buffer.dims());
    const HvtdHeader header = buffer.header();
    if (header.element_count() != buffer.size()) {
        throw Error(ErrorCode::InvalidShape, "buffer data length disagrees with dims");
    }

    std::vector<std::byte> out;
    out.reserve(header.encoded_size() + buffer.size() * dtype_size(header.dtype));
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    out.push_back(std::byte{header.version});
    out.push_back(std::byte{static_cast<std::uint8_t>(header.dtype)});
    out.push_back(std::byte{static_cast<std::uint8_t>(header.dims.size())});
    for (auto d : header.dims) {
        put_u32(out, d);
    }
    std::visit([&out](const auto& v) { append_payload(out, v); }, buffer.storage());
    return out;
}

TensorBuffer decode_hvtd(std::span<const std::byte> bytes, const ReadOptions& options) {
    if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
        throw Error(ErrorCode::BadMagic, "file does not start with \"HVTD\"");
    }
    if (bytes.size() < 7) {
        throw Error(ErrorCode::TruncatedPayload, "header truncated");
    }
    const auto version = std::to_integer<std::uint8_t>(bytes[4]);
    if (version != kHvtdVersion) {
        throw Error(ErrorCode::UnsupportedVersion, "version " + std::to_string(version) + " is not supported");
    }
    const auto dtype_code = std::to_integer<std::uint8_t>(bytes[5]);
    if (dtype_code < 1 || dtype_code > 3) {
        throw Error(ErrorCode::UnsupportedDtype, "dtype code " + std::to_string(dtype_code) + " is not supported");
    }
    const auto dtype = static_cast<DType>(dtype_code);
    const auto ndim = std::to_integer<std::uint8_t>(bytes[6]);
    if (ndim < 1 || ndim > 4) {
        throw Error(ErrorCode::InvalidShape, "ndim must be in 1..4, got " + std::to_string(ndim));
    }
    const std::size_t header_size = 7 + 4 * std::size_t{ndim};
    if (bytes.size() < header_size) {
        throw Error(ErrorCode::TruncatedPayload, "header truncated");
    }

    std::vector<std::uint32_t> dims(ndim);
    for (std::size_t i = 0; i < ndim; ++i) {
        dims[i] = get_u32(bytes.data() + 7 + 4 * i);
    }
    validate_dims(dims);

    std::uint64_t count = 1;
    for (auto d : dims) {
        count *= d;
    }
    const std::uint64_t payload_size = count * dtype_size(dtype);
    const std::uint64_t available = bytes.size() - header_size;
    if (available < payload_size) {
        throw Error(ErrorCode::TruncatedPayload,
                    "payload needs " + std::to_string(payload_size) + " bytes, file has " + std::to_string(available));
    }
    if (available > payload_size) {
        throw Error(ErrorCode::TrailingBytes,
                    std::to_string(available - payload_size) + " bytes follow the declared payload");
    }

    const std::byte* payload = bytes.data() + header_size;
    TensorBuffer::Storage data;
    switch (dtype) {
    case DType::F32: {
        auto values = extract_payload<float>(payload, count);
        if (options.strict_nan) {
            reject_nan(values);
        }
        data = std::move(values);
        break;
    }
    case DType::F64: {
        auto values = extract_payload<double>(payload, count);
        if (options.strict_nan) {
            reject_nan(values);
        }
        data = std::move(values);
        break;
    }
    case DType::U32:
        data = extract_payload<std::uint32_t>(payload, count);
        break;
    }
    return TensorBuffer(std::move(dims), std::move(data));
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for reading");
    }
    const auto size = static_cast<std::size_t>(in.tellg());
    std::vector<std::byte> bytes(size);
    in.seekg(0);
    if (size != 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
        throw Error(ErrorCode::IoFailure, "short read on " + path.string());
    }
    return bytes;
}

void write_file_bytes(std::span<const std::byte> bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
        throw Error(ErrorCode::IoFailure, "write failed on " + path.string());
    }
}

TensorBuffer read_hvtd(const std::filesystem::path& path, const ReadOptions& options) {
    const auto bytes = read_file_bytes(path);
    return decode_hvtd(bytes, options);
}

void write_hvtd(const TensorBuffer& buffer, const std::filesystem::path& path) {
    const auto bytes = encode_hvtd(buffer);
    write_file_bytes(bytes, path);
}

}  // namespace hivtp::io
