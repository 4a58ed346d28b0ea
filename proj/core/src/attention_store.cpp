// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hiprune/attention_store.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "byte_order.hpp"
#include "hiprune/error.hpp"
#include "hiprune/io.hpp"

namespace hiprune {

namespace {

constexpr char kMagic[4] = {'A', 'T', 'N', 'S'};

std::string describe(const RowLocation& where) {
    std::ostringstream os;
    os << "(layer " << where.layer << ", head " << where.head << ", query " << where.query << ")";
    return os.str();
}

StackShape parse_header(std::string_view header) {
    if (header.size() < kAtnsHeaderSize) {
        throw FormatError("truncated ATNS header (" + std::to_string(header.size()) + " bytes)");
    }
    if (header.substr(0, 4) != std::string_view(kMagic, 4)) {
        throw FormatError("missing ATNS magic");
    }
    const auto version = detail::get_le<std::uint32_t>(header, 4);
    if (version != kAtnsVersion) {
        throw FormatError("unsupported ATNS version " + std::to_string(version));
    }
    StackShape shape;
    shape.layers = detail::get_le<std::uint32_t>(header, 8);
    shape.heads = detail::get_le<std::uint32_t>(header, 12);
    shape.n_total = detail::get_le<std::uint32_t>(header, 16);
    shape.grid.rows = detail::get_le<std::uint16_t>(header, 20);
    shape.grid.cols = detail::get_le<std::uint16_t>(header, 22);
    shape.cls_count = static_cast<std::uint8_t>(header[24]);
    const auto reserved = static_cast<std::uint8_t>(header[25]);
    if (reserved != 0) {
        throw FormatError("reserved header byte is " + std::to_string(reserved) + ", expected 0");
    }
    check_shape(shape);
    return shape;
}

std::string encode_header(const StackShape& shape) {
    if (shape.grid.rows > std::numeric_limits<std::uint16_t>::max() ||
        shape.grid.cols > std::numeric_limits<std::uint16_t>::max()) {
        throw GeometryError("grid dimensions exceed the 16-bit ATNS header fields");
    }
    std::string out(kMagic, 4);
    detail::put_le<std::uint32_t>(out, kAtnsVersion);
    detail::put_le<std::uint32_t>(out, shape.layers);
    detail::put_le<std::uint32_t>(out, shape.heads);
    detail::put_le<std::uint32_t>(out, shape.n_total);
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(shape.grid.rows));
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(shape.grid.cols));
    out.push_back(static_cast<char>(shape.cls_count));
    out.push_back('\0');
    return out;
}

}  // namespace

std::size_t patch_index_of(const TokenGrid& grid, std::int64_t row, std::int64_t col) {
    if (row < 0 || col < 0 || row >= grid.rows || col >= grid.cols) {
        throw BoundsError("coordinate (" + std::to_string(row) + ", " + std::to_string(col) + ") outside " +
                          std::to_string(grid.rows) + "x" + std::to_string(grid.cols) + " grid");
    }
    return static_cast<std::size_t>(row) * grid.cols + static_cast<std::size_t>(col);
}

GridCoord coord_of(const TokenGrid& grid, std::size_t index) {
    if (index >= grid.size()) {
        throw BoundsError("patch index " + std::to_string(index) + " outside grid of " +
                          std::to_string(grid.size()) + " patches");
    }
    return {static_cast<std::uint32_t>(index / grid.cols), static_cast<std::uint32_t>(index % grid.cols)};
}

void check_shape(const StackShape& shape) {
    if (shape.layers == 0 || shape.heads == 0 || shape.n_total == 0) {
        throw FormatError("layers, heads and n_total must all be positive");
    }
    if (shape.cls_count > 1) {
        throw FormatError("cls_count must be 0 or 1, got " + std::to_string(shape.cls_count));
    }
    if (shape.grid.rows == 0 || shape.grid.cols == 0) {
        throw GeometryError("grid rows and cols must be positive");
    }
    if (shape.grid.size() + shape.cls_count != shape.n_total) {
        throw GeometryError("grid " + std::to_string(shape.grid.rows) + "x" + std::to_string(shape.grid.cols) +
                            " plus " + std::to_string(shape.cls_count) + " class token(s) != n_total " +
                            std::to_string(shape.n_total));
    }
}

AttentionStack::AttentionStack(StackShape shape, std::vector<float> values)
    : m_shape(shape),
      m_values(std::move(values)) {
    check_shape(m_shape);
    if (m_values.size() != m_shape.value_count()) {
        throw GeometryError("stack holds " + std::to_string(m_values.size()) + " values, shape needs " +
                            std::to_string(m_shape.value_count()));
    }
}

float AttentionStack::at(std::uint32_t layer, std::uint32_t head, std::uint32_t query, std::uint32_t key) const {
    if (key >= m_shape.n_total) {
        throw BoundsError("key " + std::to_string(key) + " out of range");
    }
    return row(layer, head, query)[key];
}

std::span<const float> AttentionStack::row(std::uint32_t layer, std::uint32_t head, std::uint32_t query) const {
    if (layer >= m_shape.layers || head >= m_shape.heads || query >= m_shape.n_total) {
        throw BoundsError("attention row " + describe({layer, head, query}) + " out of range");
    }
    const std::size_t n = m_shape.n_total;
    const std::size_t offset = layer * m_shape.layer_stride() + (std::size_t{head} * n + query) * n;
    return std::span<const float>(m_values).subspan(offset, n);
}

std::span<const float> AttentionStack::layer_values(std::uint32_t layer) const {
    if (layer >= m_shape.layers) {
        throw BoundsError("layer " + std::to_string(layer) + " out of range for " + std::to_string(m_shape.layers) +
                          " layers");
    }
    return std::span<const float>(m_values).subspan(layer * m_shape.layer_stride(), m_shape.layer_stride());
}

void validate_stack(const AttentionStack& stack, double tolerance) {
    const auto& shape = stack.shape();
    const std::size_t n = shape.n_total;
    const auto values = stack.values();
    std::size_t offset = 0;
    for (std::uint32_t layer = 0; layer < shape.layers; ++layer) {
        for (std::uint32_t head = 0; head < shape.heads; ++head) {
            for (std::uint32_t query = 0; query < shape.n_total; ++query, offset += n) {
                double sum = 0.0;
                for (std::size_t key = 0; key < n; ++key) {
                    const float v = values[offset + key];
                    if (!std::isfinite(v) || v < 0.0f || v > 1.0 + tolerance) {
                        const RowLocation where{layer, head, query};
                        throw ValidationError("attention value " + std::to_string(v) + " at key " +
                                                  std::to_string(key) + " outside [0, 1] in row " + describe(where),
                                              where);
                    }
                    sum += v;
                }
                if (std::abs(sum - 1.0) > tolerance) {
                    const RowLocation where{layer, head, query};
                    throw ValidationError("row " + describe(where) + " sums to " + std::to_string(sum), where);
                }
            }
        }
    }
}

std::uintmax_t encoded_stack_size(const StackShape& shape) {
    return kAtnsHeaderSize + std::uintmax_t{4} * shape.value_count();
}

StackShape read_stack_shape(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::string header(kAtnsHeaderSize, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header.size()));
    header.resize(static_cast<std::size_t>(in.gcount()));
    return parse_header(header);
}

AttentionStack read_stack(const std::filesystem::path& path, const ReadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::string header(kAtnsHeaderSize, '\0');
    in.read(header.data(), static_cast<std::streamsize>(header.size()));
    header.resize(static_cast<std::size_t>(in.gcount()));
    const auto shape = parse_header(header);

    std::error_code ec;
    const auto file_size = std::filesystem::file_size(path, ec);
    if (!ec && file_size != encoded_stack_size(shape)) {
        throw FormatError("'" + path.string() + "' is " + std::to_string(file_size) + " bytes, header implies " +
                          std::to_string(encoded_stack_size(shape)));
    }

    std::vector<float> values(shape.value_count());
    const auto payload_bytes = static_cast<std::streamsize>(values.size() * 4);
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(values.data()), payload_bytes);
        if (in.gcount() != payload_bytes) {
            throw FormatError("truncated ATNS payload in '" + path.string() + "'");
        }
    } else {
        std::string payload(static_cast<std::size_t>(payload_bytes), '\0');
        in.read(payload.data(), payload_bytes);
        if (in.gcount() != payload_bytes) {
            throw FormatError("truncated ATNS payload in '" + path.string() + "'");
        }
        detail::get_f32_array(payload, 0, values);
    }

    AttentionStack stack(shape, std::move(values));
    if (options.validate) {
        validate_stack(stack, options.tolerance);
    }
    return stack;
}

std::string encode_stack(const AttentionStack& stack) {
    std::string out = encode_header(stack.shape());
    out.reserve(static_cast<std::size_t>(encoded_stack_size(stack.shape())));
    detail::put_f32_array(out, stack.values());
    return out;
}

AttentionStack decode_stack(std::string_view bytes, const ReadOptions& options) {
    const auto shape = parse_header(bytes);
    if (bytes.size() != encoded_stack_size(shape)) {
        throw FormatError("buffer is " + std::to_string(bytes.size()) + " bytes, header implies " +
                          std::to_string(encoded_stack_size(shape)));
    }
    std::vector<float> values(shape.value_count());
    detail::get_f32_array(bytes, kAtnsHeaderSize, values);
    AttentionStack stack(shape, std::move(values));
    if (options.validate) {
        validate_stack(stack, options.tolerance);
    }
    return stack;
}

void write_stack(const AttentionStack& stack, const std::filesystem::path& path) {
    write_file_atomic(path, encode_stack(stack));
}

std::filesystem::path manifest_path_for(const std::filesystem::path& stack_path) {
    auto p = stack_path;
    p += ".json";
    return p;
}

void write_manifest(const std::filesystem::path& stack_path, const Provenance& provenance) {
    const nlohmann::ordered_json doc(provenance);
    write_file_atomic(manifest_path_for(stack_path), doc.dump(2) + "\n");
}

std::optional<Provenance> read_manifest(const std::filesystem::path& stack_path) {
    const auto path = manifest_path_for(stack_path);
    if (!std::filesystem::exists(path)) {
        return std::nullopt;
    }
    const auto doc = nlohmann::json::parse(read_file(path), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw FormatError("manifest '" + path.string() + "' is not a JSON object");
    }
    Provenance provenance;
    for (const auto& [key, value] : doc.items()) {
        provenance[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    return provenance;
}

}  // namespace hiprune
