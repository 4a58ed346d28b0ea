// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hiprune/error.hpp"

namespace hiprune {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::format:
        return "format error";
    case ErrorKind::geometry:
        return "geometry error";
    case ErrorKind::validation:
        return "validation error";
    case ErrorKind::bounds:
        return "bounds error";
    case ErrorKind::config:
        return "configuration error";
    case ErrorKind::unsupported:
        return "unsupported";
    case ErrorKind::io:
        return "I/O error";
    }
    return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message),
      m_kind(kind) {}

}  // namespace hiprune
