#include "flowgen/dataset.h"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <unordered_map>

#include "flowgen/builtins.h"
#include "flowgen/errors.h"
#include "flowgen/normalizer.h"
#include "flowgen/parser.h"
#include "flowgen/syntax_flow.h"
#include "flowgen/variable_flow.h"
#include "json.hpp"

namespace flowgen {
namespace {

using nlohmann::ordered_json;

std::size_t count_tokens(const std::string& text) {
    std::size_t count = 0;
    bool in_tok = false;
    for (char c : text) {
        bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!ws && !in_tok) ++count;
        in_tok = !ws;
    }
    return count;
}

// Prefix of `text` holding its first `cap` whitespace tokens, with the
// original spacing intact and trailing whitespace removed.
std::string truncate_tokens(const std::string& text, std::size_t cap) {
    std::size_t count = 0;
    bool in_tok = false;
    std::size_t end = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        bool ws = std::isspace(static_cast<unsigned char>(text[i])) != 0;
        if (!ws) {
            if (!in_tok) {
                if (count == cap) break;
                ++count;
            }
            end = i + 1;
        }
        in_tok = !ws;
    }
    return text.substr(0, end);
}

// Apply the token caps to one input/target pair.  Returns false when the
// record must be dropped; otherwise the strings are truncated in place as
// needed and the counters updated.
bool apply_caps(std::string& input, std::string& target, std::size_t input_cap,
                std::size_t target_cap, TruncationPolicy policy, CorpusStats& stats) {
    bool over_input = count_tokens(input) > input_cap;
    bool over_target = count_tokens(target) > target_cap;
    if (!over_input && !over_target) return true;
    if (policy == TruncationPolicy::Drop) {
        ++stats.dropped_overlong;
        return false;
    }
    if (over_input) input = truncate_tokens(input, input_cap);
    if (over_target) target = truncate_tokens(target, target_cap);
    ++stats.truncated;
    return true;
}

void write_task_line(std::ostream& out, const std::string& id,
                     const std::string& input, const std::string& target) {
    ordered_json obj;
    obj["id"] = id;
    obj["input"] = input;
    obj["target"] = target;
    out << obj.dump() << "\n";
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    return out;
}

ordered_json stats_json(const CorpusStats& s) {
    ordered_json obj;
    obj["total"] = s.total;
    obj["kept"] = s.kept;
    obj["dropped_unparseable"] = s.dropped_unparseable;
    obj["dropped_short"] = s.dropped_short;
    obj["dropped_malformed"] = s.dropped_malformed;
    obj["dropped_overlong"] = s.dropped_overlong;
    obj["dropped_separator"] = s.dropped_separator;
    obj["dropped_missing_flow"] = s.dropped_missing_flow;
    obj["truncated"] = s.truncated;
    obj["repairs"] = s.repairs;
    return obj;
}

// The fine-tuning setup the emitted files are meant for, recorded so a
// downstream trainer does not have to guess.
ordered_json training_reference(const EmitConfig& cfg) {
    ordered_json t;
    t["optimizer"] = "AdamW";
    t["learning_rate"] = 1e-4;
    t["batch_size"] = 32;
    t["scheduler"] = "inverse_sqrt";
    t["beam_size"] = 5;
    t["repetition_penalty_flows"] = 2.0;
    t["max_input_tokens"] = cfg.max_input_tokens;
    ordered_json p1;
    p1["steps"] = 75000;
    p1["warmup_steps"] = 5000;
    p1["max_target_tokens"] = cfg.max_target_tokens_phase1;
    ordered_json p2;
    p2["steps"] = 100000;
    p2["warmup_steps"] = 10000;
    p2["max_target_tokens"] = cfg.max_target_tokens_phase2;
    t["phase1"] = p1;
    t["phase2"] = p2;
    return t;
}

}  // namespace

const char* truncation_policy_name(TruncationPolicy p) {
    return p == TruncationPolicy::Drop ? "drop" : "truncate_tail";
}

std::vector<PreparedRecord> prepare_records(const std::vector<CorpusRecord>& records,
                                            const EmitConfig& cfg, CorpusStats& stats) {
    FlowSymbols symbols = cfg.symbols();
    std::vector<PreparedRecord> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        ++stats.total;
        PreparedRecord p;
        p.id = rec.id;
        p.docstring = rec.docstring;
        try {
            std::string plain = decode_sentinels(rec.code, symbols);
            std::string normalized = normalize_code(plain);
            p.encoded_code = encode_sentinels(normalized, symbols);
            AstPtr module = parse_module(normalized);
            p.syntax_flow = serialize_flow(syntax_flow(*module), symbols);
            p.variable_flow = serialize_flow(variable_flow(*module), symbols);
        } catch (const Error& e) {
            ++stats.dropped_unparseable;
            std::cerr << "dataset: " << rec.id << ": " << e.what()
                      << "; record skipped\n";
            continue;
        }
        stats.token_length_histogram[count_tokens(p.syntax_flow)] += 1;
        stats.token_length_histogram[count_tokens(p.variable_flow)] += 1;
        out.push_back(std::move(p));
        ++stats.kept;
    }
    return out;
}

std::vector<PreparedRecord> substitute_predicted_flows(
    std::vector<PreparedRecord> prepared, const std::string& flow_file,
    const EmitConfig& cfg, CorpusStats& stats) {
    std::ifstream in(flow_file, std::ios::binary);
    if (!in) throw IoError("cannot open " + flow_file);
    std::unordered_map<std::string, std::pair<std::string, std::string>> by_id;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ordered_json obj = ordered_json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("id") ||
            !obj["id"].is_string() || !obj.contains("syntax_flow") ||
            !obj["syntax_flow"].is_string() || !obj.contains("variable_flow") ||
            !obj["variable_flow"].is_string()) {
            std::cerr << "dataset: " << flow_file << ":" << line_no
                      << ": malformed flow line skipped\n";
            continue;
        }
        by_id[obj["id"].get<std::string>()] = {obj["syntax_flow"].get<std::string>(),
                                               obj["variable_flow"].get<std::string>()};
    }

    FlowSymbols symbols = cfg.symbols();
    std::vector<PreparedRecord> out;
    out.reserve(prepared.size());
    for (auto& p : prepared) {
        auto it = by_id.find(p.id);
        if (it == by_id.end()) {
            ++stats.dropped_missing_flow;
            --stats.kept;
            std::cerr << "dataset: " << p.id
                      << ": no predicted flow; record skipped\n";
            continue;
        }
        FlowParseResult syn = parse_flow(it->second.first, FlowKind::Syntax,
                                         /*strict=*/false);
        FlowParseResult var = parse_flow(it->second.second, FlowKind::Variable,
                                         /*strict=*/false);
        stats.repairs += syn.repairs + var.repairs;
        p.syntax_flow = serialize_flow(syn.flow, symbols);
        p.variable_flow = serialize_flow(var.flow, symbols);
        out.push_back(std::move(p));
    }
    return out;
}

void emit_phase1(const std::vector<PreparedRecord>& prepared, const EmitConfig& cfg,
                 const std::string& syntax_path, const std::string& variable_path,
                 CorpusStats& syntax_stats, CorpusStats& variable_stats) {
    std::ofstream syn_out = open_out(syntax_path);
    std::ofstream var_out = open_out(variable_path);
    auto emit_one = [&](std::ostream& out, const PreparedRecord& rec,
                        const std::string& flow, CorpusStats& stats) {
        ++stats.total;
        std::string input = rec.docstring;
        std::string target = flow;
        if (!apply_caps(input, target, cfg.max_input_tokens,
                        cfg.max_target_tokens_phase1, cfg.policy, stats))
            return;
        write_task_line(out, rec.id, input, target);
        ++stats.kept;
    };
    for (const auto& rec : prepared) {
        emit_one(syn_out, rec, rec.syntax_flow, syntax_stats);
        emit_one(var_out, rec, rec.variable_flow, variable_stats);
    }
}

void emit_phase2(const std::vector<PreparedRecord>& prepared, const EmitConfig& cfg,
                 const std::string& path, CorpusStats& stats) {
    std::ofstream out = open_out(path);
    for (const auto& rec : prepared) {
        ++stats.total;
        if (rec.docstring.find(cfg.syntax_separator) != std::string::npos ||
            rec.docstring.find(cfg.variable_separator) != std::string::npos) {
            ++stats.dropped_separator;
            std::cerr << "dataset: " << rec.id
                      << ": docstring contains a separator token; record skipped\n";
            continue;
        }
        std::string input = rec.docstring + " " + cfg.syntax_separator + " " +
                            rec.syntax_flow + " " + cfg.variable_separator + " " +
                            rec.variable_flow;
        std::string target = rec.encoded_code;
        if (!apply_caps(input, target, cfg.max_input_tokens,
                        cfg.max_target_tokens_phase2, cfg.policy, stats))
            continue;
        write_task_line(out, rec.id, input, target);
        ++stats.kept;
    }
}

DatasetResult emit_dataset(const std::vector<CorpusRecord>& records,
                           const EmitConfig& cfg, const std::string& out_dir,
                           const std::optional<std::string>& predicted_flow_file) {
    std::filesystem::create_directories(out_dir);
    auto in_dir = [&](const char* name) {
        return (std::filesystem::path(out_dir) / name).string();
    };

    DatasetResult result;
    std::vector<PreparedRecord> prepared = prepare_records(records, cfg, result.prepare);
    if (predicted_flow_file)
        prepared = substitute_predicted_flows(std::move(prepared), *predicted_flow_file,
                                              cfg, result.prepare);

    emit_phase1(prepared, cfg, in_dir("phase1.syntax.jsonl"),
                in_dir("phase1.variable.jsonl"), result.phase1_syntax,
                result.phase1_variable);
    emit_phase2(prepared, cfg, in_dir("phase2.jsonl"), result.phase2);

    FlowSymbols symbols = cfg.symbols();
    ordered_json manifest;
    manifest["tool"] = "flowgen";
    ordered_json config;
    config["max_input_tokens"] = cfg.max_input_tokens;
    config["max_target_tokens_phase1"] = cfg.max_target_tokens_phase1;
    config["max_target_tokens_phase2"] = cfg.max_target_tokens_phase2;
    config["syntax_separator"] = cfg.syntax_separator;
    config["variable_separator"] = cfg.variable_separator;
    config["truncation_policy"] = truncation_policy_name(cfg.policy);
    manifest["config"] = config;
    ordered_json sent;
    sent["indent"] = symbols.indent;
    sent["newline"] = symbols.newline;
    manifest["sentinels"] = sent;
    manifest["builtins_version"] = BuiltinList::active().version();
    manifest["flow_source"] = predicted_flow_file ? *predicted_flow_file
                                                  : std::string("gold");
    ordered_json files;
    files["phase1_syntax"] = "phase1.syntax.jsonl";
    files["phase1_variable"] = "phase1.variable.jsonl";
    files["phase2"] = "phase2.jsonl";
    manifest["files"] = files;
    ordered_json stats;
    stats["prepare"] = stats_json(result.prepare);
    stats["phase1_syntax"] = stats_json(result.phase1_syntax);
    stats["phase1_variable"] = stats_json(result.phase1_variable);
    stats["phase2"] = stats_json(result.phase2);
    manifest["stats"] = stats;
    manifest["training_reference"] = training_reference(cfg);

    std::ofstream mf = open_out(in_dir("manifest.json"));
    mf << manifest.dump(2) << "\n";
    return result;
}

}  // namespace flowgen
