// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

// Little-endian field packing shared by the binary formats.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>

namespace hiprune::detail {

template <typename UInt>
void put_le(std::string& out, UInt value) {
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
        out.push_back(static_cast<char>((value >> (8 * i)) & 0xFFu));
    }
}

template <typename UInt>
UInt get_le(std::string_view bytes, std::size_t offset) {
    UInt value = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
        value |= static_cast<UInt>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
    }
    return value;
}

inline void put_f32_array(std::string& out, std::span<const float> values) {
    const auto offset = out.size();
    out.resize(offset + values.size() * 4);
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out.data() + offset, values.data(), values.size() * 4);
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) {
            const auto bits = std::bit_cast<std::uint32_t>(values[i]);
            for (std::size_t b = 0; b < 4; ++b) {
                out[offset + 4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
            }
        }
    }
}

inline void get_f32_array(std::string_view bytes, std::size_t offset, std::span<float> values) {
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(values.data(), bytes.data() + offset, values.size() * 4);
    } else {
        for (std::size_t i = 0; i < values.size(); ++i) {
            values[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, offset + 4 * i));
        }
    }
}

}  // namespace hiprune::detail
