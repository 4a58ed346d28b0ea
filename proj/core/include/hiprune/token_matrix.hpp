// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hiprune {

/// Row-major [n, dim] float32 matrix of patch tokens.
class TokenMatrix {
public:
    TokenMatrix(std::uint32_t n, std::uint32_t dim, std::vector<float> values);

    std::uint32_t n() const noexcept {
        return m_n;
    }
    std::uint32_t dim() const noexcept {
        return m_dim;
    }
    std::span<const float> row(std::uint32_t index) const;
    std::span<const float> values() const noexcept {
        return m_values;
    }

    friend bool operator==(const TokenMatrix&, const TokenMatrix&) = default;

private:
    std::uint32_t m_n;
    std::uint32_t m_dim;
    std::vector<float> m_values;
};

/// Rows of `tokens` in the order given by `indices`.
TokenMatrix gather_rows(const TokenMatrix& tokens, std::span<const std::uint32_t> indices);

// TOKM: "TOKM" | u32 n | u32 dim | u32 reserved=0 | n*dim f32, little-endian.
inline constexpr std::size_t kTokmHeaderSize = 16;

std::string encode_token_matrix(const TokenMatrix& tokens);
TokenMatrix decode_token_matrix(std::string_view bytes);

TokenMatrix read_token_matrix(const std::filesystem::path& path);
void write_token_matrix(const TokenMatrix& tokens, const std::filesystem::path& path);

}  // namespace hiprune
