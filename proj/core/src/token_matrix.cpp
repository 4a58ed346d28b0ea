// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hiprune/token_matrix.hpp"

#include "byte_order.hpp"
#include "hiprune/error.hpp"
#include "hiprune/io.hpp"

namespace hiprune {

TokenMatrix::TokenMatrix(std::uint32_t n, std::uint32_t dim, std::vector<float> values)
    : m_n(n),
      m_dim(dim),
      m_values(std::move(values)) {
    if (m_values.size() != std::size_t{m_n} * m_dim) {
        throw GeometryError("token matrix " + std::to_string(n) + "x" + std::to_string(dim) + " given " +
                            std::to_string(m_values.size()) + " values");
    }
}

std::span<const float> TokenMatrix::row(std::uint32_t index) const {
    if (index >= m_n) {
        throw BoundsError("token row " + std::to_string(index) + " out of range for " + std::to_string(m_n) +
                          " tokens");
    }
    return std::span<const float>(m_values).subspan(std::size_t{index} * m_dim, m_dim);
}

TokenMatrix gather_rows(const TokenMatrix& tokens, std::span<const std::uint32_t> indices) {
    std::vector<float> values;
    values.reserve(indices.size() * tokens.dim());
    for (const auto index : indices) {
        const auto r = tokens.row(index);
        values.insert(values.end(), r.begin(), r.end());
    }
    return TokenMatrix(static_cast<std::uint32_t>(indices.size()), tokens.dim(), std::move(values));
}

std::string encode_token_matrix(const TokenMatrix& tokens) {
    std::string out = "TOKM";
    detail::put_le<std::uint32_t>(out, tokens.n());
    detail::put_le<std::uint32_t>(out, tokens.dim());
    detail::put_le<std::uint32_t>(out, 0);
    detail::put_f32_array(out, tokens.values());
    return out;
}

TokenMatrix decode_token_matrix(std::string_view bytes) {
    if (bytes.size() < kTokmHeaderSize || bytes.substr(0, 4) != "TOKM") {
        throw FormatError("missing TOKM header");
    }
    const auto n = detail::get_le<std::uint32_t>(bytes, 4);
    const auto dim = detail::get_le<std::uint32_t>(bytes, 8);
    if (detail::get_le<std::uint32_t>(bytes, 12) != 0) {
        throw FormatError("TOKM reserved field must be 0");
    }
    const std::size_t count = std::size_t{n} * dim;
    if (bytes.size() != kTokmHeaderSize + 4 * count) {
        throw FormatError("TOKM payload is " + std::to_string(bytes.size() - kTokmHeaderSize) + " bytes, expected " +
                          std::to_string(4 * count));
    }
    std::vector<float> values(count);
    detail::get_f32_array(bytes, kTokmHeaderSize, values);
    return TokenMatrix(n, dim, std::move(values));
}

TokenMatrix read_token_matrix(const std::filesystem::path& path) {
    return decode_token_matrix(read_file(path));
}

void write_token_matrix(const TokenMatrix& tokens, const std::filesystem::path& path) {
    write_file_atomic(path, encode_token_matrix(tokens));
}

}  // namespace hiprune
