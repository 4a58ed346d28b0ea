// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace hiprune {

enum class ErrorKind {
    format,       // malformed file contents
    geometry,     // grid / shape disagreement
    validation,   // value-level invariant violated
    bounds,       // index or count out of range
    config,       // invalid parameter combination
    unsupported,  // operation not available for this input
    io,           // filesystem failure
};

const char* to_string(ErrorKind kind) noexcept;

/// Base class for every error raised by the library. `kind()` lets callers
/// (the CLI in particular) map failures onto exit codes without RTTI chains.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept {
        return m_kind;
    }

private:
    ErrorKind m_kind;
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& message) : Error(ErrorKind::format, message) {}
};

class GeometryError : public Error {
public:
    explicit GeometryError(const std::string& message) : Error(ErrorKind::geometry, message) {}
};

class BoundsError : public Error {
public:
    explicit BoundsError(const std::string& message) : Error(ErrorKind::bounds, message) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error(ErrorKind::config, message) {}
};

class UnsupportedError : public Error {
public:
    explicit UnsupportedError(const std::string& message) : Error(ErrorKind::unsupported, message) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error(ErrorKind::io, message) {}
};

/// Position of one attention row inside a stack.
struct RowLocation {
    std::uint32_t layer = 0;
    std::uint32_t head = 0;
    std::uint32_t query = 0;

    friend bool operator==(const RowLocation&, const RowLocation&) = default;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message) : Error(ErrorKind::validation, message) {}
    ValidationError(const std::string& message, RowLocation where)
        : Error(ErrorKind::validation, message),
          m_where(where) {}

    /// First offending attention row, when the failure is row-local.
    const std::optional<RowLocation>& where() const noexcept {
        return m_where;
    }

private:
    std::optional<RowLocation> m_where;
};

}  // namespace hiprune
