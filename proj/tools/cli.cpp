// Copyright (C) 2026 The hiprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numeric>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#ifdef HIPRUNE_CLI11_PACKAGE
#include <CLI/CLI.hpp>
#else
#include "CLI11.hpp"
#endif
#include "hiprune/analysis.hpp"
#include "hiprune/attention_store.hpp"
#include "hiprune/costmodel.hpp"
#include "hiprune/error.hpp"
#include "hiprune/io.hpp"
#include "hiprune/pruner.hpp"
#include "hiprune/scoring.hpp"
#include "hiprune/synth.hpp"
#include "hiprune/token_matrix.hpp"

namespace hiprune::cli {

namespace fs = std::filesystem;

namespace {

std::string format_number(double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

std::string csv_quote(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) {
        return text;
    }
    std::string quoted = "\"";
    for (const char c : text) {
        if (c == '"') {
            quoted.push_back('"');
        }
        quoted.push_back(c);
    }
    quoted.push_back('"');
    return quoted;
}

bool no_validate_from_env() {
    const char* value = std::getenv("HIPRUNE_NO_VALIDATE");
    return value != nullptr && std::string_view(value) == "1";
}

// Shared by prune and batch.
struct PruneFlags {
    std::uint32_t budget = 192;
    std::optional<std::uint32_t> object_layer;
    double alpha = 0.1;
    std::string scheme = "cross4";
    std::string boundary = "paper_intersect";
    std::string pattern = "global";
    bool exclude_cls_queries = false;
    bool no_anchors = false;
    bool no_buffers = false;
    bool no_registers = false;

    void attach(CLI::App& app) {
        app.add_option("--budget", budget, "Visual tokens to retain")->capture_default_str();
        app.add_option("--object-layer", object_layer,
                       "Layer supplying anchors (default: 9 for 24-layer, 16 for 32-layer, else round(3L/8))");
        app.add_option("--alpha", alpha, "Share of the budget for anchor+buffer clusters")->capture_default_str();
        app.add_option("--scheme", scheme, "Buffer scheme")
            ->check(CLI::IsMember({"cross4", "square8", "row2"}))
            ->capture_default_str();
        app.add_option("--boundary", boundary, "Grid-edge handling for buffers")
            ->check(CLI::IsMember({"paper_intersect", "grid_aware", "clamp"}))
            ->capture_default_str();
        app.add_option("--pattern", pattern, "Attention signal: global column sums or class-token row")
            ->check(CLI::IsMember({"global", "cls"}))
            ->capture_default_str();
        app.add_flag("--exclude-cls-queries", exclude_cls_queries,
                     "Drop the class-token query row from global scores");
        app.add_flag("--no-anchors", no_anchors, "Ablation: disable anchors (and therefore buffers)");
        app.add_flag("--no-buffers", no_buffers, "Ablation: disable buffers");
        app.add_flag("--no-registers", no_registers, "Ablation: fill the rest of the budget from the object layer");
    }

    HiPruneConfig config() const {
        HiPruneConfig c;
        c.budget = budget;
        c.alpha = alpha;
        c.scheme = *parse_buffer_scheme(scheme);
        c.boundary_mode = *parse_boundary_mode(boundary);
        c.pattern = *parse_attention_pattern(pattern);
        c.include_cls_queries = !exclude_cls_queries;
        c.token_types = {!no_anchors, !no_buffers, !no_registers};
        return c;
    }

    HiPruneConfig config_for(const AttentionStack& stack) const {
        auto c = config();
        c.object_layer = object_layer.value_or(default_object_layer(stack.layers()));
        return c;
    }
};

class Output {
public:
    Output(std::string path, std::ostream& out) : m_path(std::move(path)), m_out(out) {}

    void write(std::string_view bytes) const {
        if (m_path == "-") {
            m_out << bytes;
            m_out.flush();
        } else {
            write_file_atomic(m_path, bytes);
        }
    }

private:
    std::string m_path;
    std::ostream& m_out;
};

ReadOptions read_options(bool no_validate) {
    return ReadOptions{!(no_validate || no_validate_from_env()), kRowSumTolerance};
}

int cmd_prune(const PruneFlags& flags, const std::string& stack_path, const std::string& tokens_path,
              const std::string& out_path, const std::string& tokens_out, bool no_validate, std::ostream& out,
              std::ostream& err) {
    validate_config(flags.config());
    if (!tokens_out.empty() && tokens_path.empty()) {
        throw ConfigError("--tokens-out needs --tokens");
    }
    const auto stack = read_stack(stack_path, read_options(no_validate));
    std::optional<TokenMatrix> tokens;
    if (!tokens_path.empty()) {
        tokens = read_token_matrix(tokens_path);
    }
    const auto config = flags.config_for(stack);
    const auto result = prune(stack, tokens ? &*tokens : nullptr, config);
    for (const auto& warning : result.warnings) {
        err << "warning: " << warning << "\n";
    }
    Output(out_path, out).write(selection_to_json(result.selection));
    if (!tokens_out.empty()) {
        write_token_matrix(*result.tokens, tokens_out);
    }
    return kSuccess;
}

int cmd_analyze(const std::string& stack_path, const std::string& mask_path, double fraction,
                const std::string& format, bool exclude_cls_queries, const std::string& out_path, bool no_validate,
                std::ostream& out) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ConfigError("--fraction must lie in (0, 1]");
    }
    const auto stack = read_stack(stack_path, read_options(no_validate));
    const ScoreOptions options{!exclude_cls_queries};
    const auto curve = dispersion_curve(stack, fraction, options);

    std::vector<std::optional<double>> ious;
    if (!mask_path.empty()) {
        const auto mask = read_mask(mask_path, stack.grid());
        std::vector<std::uint32_t> all(stack.layers());
        std::iota(all.begin(), all.end(), 0u);
        ious = normalized_layer_iou(stack, mask, all, fraction, options);
    }
    std::optional<LayerPartition> partition;
    if (stack.layers() >= 3) {
        partition = default_partition(stack.layers());
    }
    const auto phase_of = [&](std::uint32_t layer) -> std::string {
        if (!partition) {
            return "";
        }
        if (partition->shallow.contains(layer)) {
            return "shallow";
        }
        return partition->middle.contains(layer) ? "middle" : "deep";
    };

    std::string text;
    if (format == "json") {
        nlohmann::ordered_json doc;
        doc["layers"] = stack.layers();
        doc["fraction"] = fraction;
        doc["dispersion"] = curve;
        if (!mask_path.empty()) {
            auto list = nlohmann::ordered_json::array();
            for (const auto& v : ious) {
                list.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr));
            }
            doc["normalized_iou"] = list;
        }
        if (partition) {
            doc["partition"] = {
                {"shallow", {partition->shallow.begin, partition->shallow.end}},
                {"middle", {partition->middle.begin, partition->middle.end}},
                {"deep", {partition->deep.begin, partition->deep.end}},
                {"object_layer", partition->object_layer},
                {"object_layer_source", partition->from_preset ? "preset" : "heuristic round(3L/8)"},
            };
        }
        text = doc.dump(2) + "\n";
    } else {
        text = "layer,phase,dispersion";
        text += mask_path.empty() ? "\n" : ",normalized_iou\n";
        for (std::uint32_t layer = 0; layer < stack.layers(); ++layer) {
            text += std::to_string(layer) + "," + phase_of(layer) + "," + format_number(curve[layer]);
            if (!mask_path.empty()) {
                text += "," + (ious[layer] ? format_number(*ious[layer]) : std::string("NA"));
            }
            text += "\n";
        }
    }
    Output(out_path, out).write(text);
    return kSuccess;
}

int cmd_estimate_flops(const std::string& preset, const std::string& spec_path, std::uint64_t visual_tokens,
                       std::optional<std::uint64_t> text_tokens, std::optional<std::uint64_t> full_tokens,
                       const std::string& out_path, std::ostream& out) {
    if (preset.empty() == spec_path.empty()) {
        throw ConfigError("give exactly one of --preset or --spec");
    }
    if (full_tokens && *full_tokens < visual_tokens) {
        throw ConfigError("--full-tokens must be >= --visual-tokens");
    }
    CostModelSpec spec;
    if (!preset.empty()) {
        const auto found = cost_preset(preset);
        if (!found) {
            throw ConfigError("unknown preset '" + preset + "'");
        }
        spec = *found;
    } else {
        spec = cost_spec_from_json(read_file(spec_path));
    }
    if (text_tokens) {
        spec.text_tokens = *text_tokens;
    }
    const double flops = prefill_flops(spec, visual_tokens);
    nlohmann::ordered_json doc;
    if (!preset.empty()) {
        doc["preset"] = preset;
    }
    doc["visual_tokens"] = visual_tokens;
    doc["text_tokens"] = spec.text_tokens;
    doc["vision_flops"] = vision_flops(spec);
    doc["flops"] = flops;
    doc["tflops"] = flops / 1e12;
    if (full_tokens) {
        doc["full_tokens"] = *full_tokens;
        doc["ratio"] = flops_ratio(spec, *full_tokens, visual_tokens);
    }
    Output(out_path, out).write(doc.dump(2) + "\n");
    return kSuccess;
}

int cmd_synth(const std::string& spec_path, std::optional<std::uint64_t> seed, const std::string& out_path) {
    auto spec = synth_spec_from_json(read_file(spec_path));
    if (seed) {
        spec.seed = *seed;
    }
    const auto stack = generate(spec);
    write_stack(stack, out_path);
    write_manifest(out_path, {{"generator", "hiprune synth"}, {"synth_spec", synth_spec_to_json(spec)}});
    return kSuccess;
}

int cmd_export_ranks(const std::string& stack_path, const std::string& format, bool exclude_cls_queries,
                     const std::string& out_path, bool no_validate, std::ostream& out, std::ostream& err) {
    const auto stack = read_stack(stack_path, read_options(no_validate));
    const auto ranks = rank_trajectory(stack, ScoreOptions{!exclude_cls_queries});
    if (format == "u32") {
        err << "rank matrix: " << ranks.layers() << " x " << ranks.patches() << " u32, row-major\n";
        Output(out_path, out).write(rank_matrix_u32(ranks));
    } else {
        Output(out_path, out).write(rank_matrix_csv(ranks));
    }
    return kSuccess;
}

struct BatchItem {
    std::string name;
    fs::path stack;
    std::optional<std::uint32_t> budget;
};

int cmd_batch(const PruneFlags& flags, const std::string& manifest_path, const std::string& out_dir,
              bool no_validate, std::ostream& err) {
    validate_config(flags.config());
    const auto doc = nlohmann::json::parse(read_file(manifest_path), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ConfigError("batch manifest is not a JSON object");
    }
    const fs::path base = fs::path(manifest_path).parent_path();
    std::optional<std::uint32_t> total_budget;
    std::vector<BatchItem> items;
    try {
        if (doc.contains("total_budget")) {
            total_budget = doc["total_budget"].get<std::uint32_t>();
        }
        for (const auto& entry : doc.value("items", nlohmann::json::array())) {
            BatchItem item;
            item.stack = entry.at("stack").get<std::string>();
            if (item.stack.is_relative()) {
                item.stack = base / item.stack;
            }
            item.name = entry.contains("name") ? entry["name"].get<std::string>()
                                               : fs::path(entry.at("stack").get<std::string>()).stem().string();
            if (entry.contains("budget")) {
                item.budget = entry["budget"].get<std::uint32_t>();
            }
            items.push_back(std::move(item));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("batch manifest: ") + e.what());
    }

    fs::create_directories(out_dir);

    // Headers first: the apportionment needs every readable item's patch count.
    std::vector<std::optional<StackShape>> shapes(items.size());
    std::vector<std::string> failures(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        try {
            shapes[i] = read_stack_shape(items[i].stack);
        } catch (const Error& e) {
            failures[i] = e.what();
        }
    }
    std::vector<std::uint32_t> budgets(items.size(), flags.budget);
    if (total_budget) {
        std::vector<std::size_t> weights(items.size(), 0);
        for (std::size_t i = 0; i < items.size(); ++i) {
            weights[i] = shapes[i] ? shapes[i]->patch_count() : 0;
        }
        budgets = apportion_budget(*total_budget, weights);
    } else {
        for (std::size_t i = 0; i < items.size(); ++i) {
            budgets[i] = items[i].budget.value_or(flags.budget);
        }
    }

    std::string summary = "item,n_patches,budget,anchors,buffers,registers,status,error\n";
    std::size_t ok = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        std::string row = csv_quote(items[i].name) + ",";
        row += shapes[i] ? std::to_string(shapes[i]->patch_count()) : std::string();
        row += "," + std::to_string(budgets[i]) + ",";
        if (failures[i].empty()) {
            try {
                const auto stack = read_stack(items[i].stack, read_options(no_validate));
                auto config = flags.config_for(stack);
                config.budget = budgets[i];
                const auto result = prune(stack, config);
                for (const auto& warning : result.warnings) {
                    err << "warning: " << items[i].name << ": " << warning << "\n";
                }
                write_file_atomic(fs::path(out_dir) / (items[i].name + ".selection.json"),
                                  selection_to_json(result.selection));
                const auto& s = result.selection;
                row += std::to_string(s.anchors.size()) + "," + std::to_string(s.buffers.size()) + "," +
                       std::to_string(s.registers.size()) + ",ok,";
                ++ok;
            } catch (const Error& e) {
                failures[i] = e.what();
            }
        }
        if (!failures[i].empty()) {
            err << "error: " << items[i].name << ": " << failures[i] << "\n";
            row += ",,,failed," + csv_quote(failures[i]);
        }
        summary += row + "\n";
    }
    write_file_atomic(fs::path(out_dir) / "summary.csv", summary);
    if (!items.empty() && ok == 0) {
        return kIoError;
    }
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Training-free visual token pruning over exported attention stacks", "hiprune"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    PruneFlags prune_flags;
    std::string stack_path;
    std::string tokens_path;
    std::string out_path = "-";
    std::string tokens_out;
    bool no_validate = false;

    auto* prune_cmd = app.add_subcommand("prune", "Select anchor, buffer and register tokens for one stack");
    prune_cmd->add_option("--stack", stack_path, "ATNS attention stack")->required();
    prune_cmd->add_option("--tokens", tokens_path, "TOKM token matrix to prune alongside");
    prune_cmd->add_option("--tokens-out", tokens_out, "Where to write the pruned TOKM matrix");
    prune_cmd->add_option("--out", out_path, "Selection JSON destination ('-' for stdout)")->capture_default_str();
    prune_cmd->add_flag("--no-validate", no_validate, "Skip row-sum validation (also HIPRUNE_NO_VALIDATE=1)");
    prune_flags.attach(*prune_cmd);

    std::string mask_path;
    double fraction = kDefaultTopFraction;
    std::string format = "csv";
    bool exclude_cls_queries = false;
    auto* analyze_cmd = app.add_subcommand("analyze", "Per-layer dispersion and normalized object IoU");
    analyze_cmd->add_option("--stack", stack_path, "ATNS attention stack")->required();
    analyze_cmd->add_option("--mask", mask_path, "Object mask: PGM (P5) or raw rows*cols bytes");
    analyze_cmd->add_option("--fraction", fraction, "Top-attention share per layer")->capture_default_str();
    analyze_cmd->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    analyze_cmd->add_flag("--exclude-cls-queries", exclude_cls_queries, "Drop the class-token query row");
    analyze_cmd->add_option("--out", out_path, "Destination ('-' for stdout)")->capture_default_str();
    analyze_cmd->add_flag("--no-validate", no_validate, "Skip row-sum validation");

    std::string preset;
    std::string spec_path;
    std::uint64_t visual_tokens = 0;
    std::optional<std::uint64_t> text_tokens;
    std::optional<std::uint64_t> full_tokens;
    auto* flops_cmd = app.add_subcommand("estimate-flops", "Analytic prefill FLOPs for a VLM configuration");
    flops_cmd->add_option("--preset", preset, "Built-in model: llava-1.5-7b, llava-next-7b")
        ->check(CLI::IsMember(cost_preset_names()));
    flops_cmd->add_option("--spec", spec_path, "Cost model spec JSON");
    flops_cmd->add_option("--visual-tokens", visual_tokens, "Visual tokens fed to the LLM")->required();
    flops_cmd->add_option("--text-tokens", text_tokens, "Override the text prompt length");
    flops_cmd->add_option("--full-tokens", full_tokens, "Also report the ratio against this unpruned count");
    flops_cmd->add_option("--out", out_path, "Destination ('-' for stdout)")->capture_default_str();

    std::optional<std::uint64_t> seed;
    std::string synth_out;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic ATNS stack from a JSON spec");
    synth_cmd->add_option("--spec", spec_path, "Synthetic stack spec JSON")->required();
    synth_cmd->add_option("--seed", seed, "Override the spec's seed");
    synth_cmd->add_option("--out", synth_out, "ATNS destination")->required();

    std::string rank_format = "csv";
    auto* ranks_cmd = app.add_subcommand("export-ranks", "Per-layer attention rank matrix");
    ranks_cmd->add_option("--stack", stack_path, "ATNS attention stack")->required();
    ranks_cmd->add_option("--format", rank_format, "csv or raw little-endian u32")
        ->check(CLI::IsMember({"csv", "u32"}))
        ->capture_default_str();
    ranks_cmd->add_flag("--exclude-cls-queries", exclude_cls_queries, "Drop the class-token query row");
    ranks_cmd->add_option("--out", out_path, "Destination ('-' for stdout)")->capture_default_str();
    ranks_cmd->add_flag("--no-validate", no_validate, "Skip row-sum validation");

    PruneFlags batch_flags;
    std::string manifest_path;
    std::string out_dir;
    auto* batch_cmd = app.add_subcommand("batch", "Prune every stack listed in a manifest");
    batch_cmd->add_option("--manifest", manifest_path, "Batch manifest JSON")->required();
    batch_cmd->add_option("--out-dir", out_dir, "Directory for selections and summary.csv")->required();
    batch_cmd->add_flag("--no-validate", no_validate, "Skip row-sum validation");
    batch_flags.attach(*batch_cmd);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kValidationError;
    }

    try {
        if (*prune_cmd) {
            return cmd_prune(prune_flags, stack_path, tokens_path, out_path, tokens_out, no_validate, out, err);
        }
        if (*analyze_cmd) {
            return cmd_analyze(stack_path, mask_path, fraction, format, exclude_cls_queries, out_path, no_validate,
                               out);
        }
        if (*flops_cmd) {
            return cmd_estimate_flops(preset, spec_path, visual_tokens, text_tokens, full_tokens, out_path, out);
        }
        if (*synth_cmd) {
            return cmd_synth(spec_path, seed, synth_out);
        }
        if (*ranks_cmd) {
            return cmd_export_ranks(stack_path, rank_format, exclude_cls_queries, out_path, no_validate, out, err);
        }
        if (*batch_cmd) {
            return cmd_batch(batch_flags, manifest_path, out_dir, no_validate, err);
        }
    } catch (const Error& e) {
        err << "hiprune: " << e.what() << "\n";
        return e.kind() == ErrorKind::io ? kIoError : kValidationError;
    } catch (const fs::filesystem_error& e) {
        err << "hiprune: " << e.what() << "\n";
        return kIoError;
    }
    return kValidationError;
}

}  // namespace hiprune::cli
