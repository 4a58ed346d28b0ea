// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <nlohmann/json.hpp>

#include "hiprune/error.hpp"
#include "hiprune/pruner.hpp"

namespace hiprune {

std::string selection_to_json(const Selection& selection) {
    nlohmann::ordered_json doc;
    doc["anchors"] = selection.anchors;
    doc["buffers"] = selection.buffers;
    doc["registers"] = selection.registers;
    doc["retained"] = selection.retained;
    return doc.dump() + "\n";
}

Selection selection_from_json(std::string_view text) {
    const auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw FormatError("selection is not a JSON object");
    }
    Selection selection;
    try {
        doc.at("anchors").get_to(selection.anchors);
        doc.at("buffers").get_to(selection.buffers);
        doc.at("registers").get_to(selection.registers);
        doc.at("retained").get_to(selection.retained);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("selection JSON: ") + e.what());
    }
    return selection;
}

}  // namespace hiprune
