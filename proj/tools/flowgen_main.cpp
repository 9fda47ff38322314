// Command-line front end: normalize corpora, extract flows, emit the
// two-phase fine-tuning datasets, score generations, and report statistics.
//
// Exit codes: 0 on full success, 1 on a hard error (one JSON object on
// stderr), 2 on partial success (some records skipped; counts on stderr).

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flowgen/builtins.h"
#include "flowgen/corpus.h"
#include "flowgen/dataset.h"
#include "flowgen/errors.h"
#include "flowgen/metrics.h"
#include "flowgen/normalizer.h"
#include "flowgen/parser.h"
#include "flowgen/pipeline.h"
#include "flowgen/syntax_flow.h"
#include "flowgen/variable_flow.h"
#include "flowgen/walk.h"
#include "json.hpp"

namespace {

using nlohmann::ordered_json;
using namespace flowgen;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitPartial = 2;

// Options shared by the subcommands that read a corpus file.
struct InputOptions {
    std::string path;
    std::string format = "generic";
    std::string split_hint;
    bool short_filter_on = false;
    bool short_filter_off = false;

    Origin origin() const { return *origin_from_name(format); }
    ReadOptions read_options() const {
        ReadOptions opts;
        if (short_filter_on) opts.short_filter = true;
        if (short_filter_off) opts.short_filter = false;
        if (!split_hint.empty()) opts.split_hint = split_from_name(split_hint);
        return opts;
    }
};

void add_input_options(CLI::App* cmd, InputOptions& in) {
    cmd->add_option("input", in.path, "Corpus file to read")->required();
    cmd->add_option("--format", in.format, "Corpus file shape")
        ->check(CLI::IsMember({"generic", "csn", "cdc", "adv"}))
        ->capture_default_str();
    cmd->add_option("--split", in.split_hint,
                    "Split recorded when the file does not say")
        ->check(CLI::IsMember({"train", "valid", "test"}));
    auto* on = cmd->add_flag("--short-filter", in.short_filter_on,
                             "Force the short-record filter on");
    auto* off = cmd->add_flag("--no-short-filter", in.short_filter_off,
                              "Force the short-record filter off");
    on->excludes(off);
    off->excludes(on);
}

// Writes either to a file or to stdout when path is "-".
class Output {
public:
    explicit Output(const std::string& path) {
        if (path != "-") {
            file_.open(path, std::ios::binary);
            if (!file_) throw IoError("cannot open " + path + " for writing");
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
    void finish() {
        stream().flush();
        if (file_.is_open() && !file_) throw IoError("error writing output");
    }

private:
    std::ofstream file_;
};

ordered_json stats_obj(const CorpusStats& stats, bool with_histogram) {
    ordered_json obj;
    obj["total"] = stats.total;
    obj["kept"] = stats.kept;
    obj["dropped_unparseable"] = stats.dropped_unparseable;
    obj["dropped_short"] = stats.dropped_short;
    obj["dropped_malformed"] = stats.dropped_malformed;
    obj["dropped_overlong"] = stats.dropped_overlong;
    obj["dropped_separator"] = stats.dropped_separator;
    obj["dropped_missing_flow"] = stats.dropped_missing_flow;
    obj["truncated"] = stats.truncated;
    obj["repairs"] = stats.repairs;
    obj["duplicate_ids"] = stats.duplicate_ids;
    if (with_histogram) {
        ordered_json hist = ordered_json::object();
        for (const auto& [len, count] : stats.token_length_histogram)
            hist[std::to_string(len)] = count;
        obj["token_length_histogram"] = hist;
    }
    return obj;
}

void report_counts(const CorpusStats& stats) {
    std::cerr << stats_obj(stats, /*with_histogram=*/false).dump() << "\n";
}

int exit_code_for(const CorpusStats& stats) {
    return stats.kept == stats.total ? kExitOk : kExitPartial;
}

FlowSymbols pick_symbols(bool ascii) {
    return ascii ? FlowSymbols::ascii() : FlowSymbols{};
}

// --- normalize ---------------------------------------------------------------

struct NormalizeOptions {
    InputOptions in;
    std::string output = "-";
    unsigned parallel = 1;
    bool ascii = false;
};

int run_normalize(const NormalizeOptions& opt) {
    CorpusStats stats;
    std::vector<CorpusRecord> records =
        read_corpus(opt.in.path, opt.in.origin(), opt.in.read_options(), stats);

    FlowSymbols symbols = pick_symbols(opt.ascii);
    struct Cleaned {
        bool ok = false;
        std::string text;  // encoded code, or the error message
    };
    std::vector<Cleaned> cleaned =
        parallel_map(records, opt.parallel, [&](const CorpusRecord& rec) -> Cleaned {
            try {
                std::string plain = decode_sentinels(rec.code, symbols);
                return {true, encode_sentinels(normalize_code(plain), symbols)};
            } catch (const Error& e) {
                return {false, e.what()};
            }
        });

    std::vector<CorpusRecord> kept;
    kept.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!cleaned[i].ok) {
            ++stats.dropped_unparseable;
            --stats.kept;
            std::cerr << "normalize: " << records[i].id << ": " << cleaned[i].text
                      << "; record skipped\n";
            continue;
        }
        records[i].code = std::move(cleaned[i].text);
        kept.push_back(std::move(records[i]));
    }

    Output out(opt.output);
    write_corpus(out.stream(), kept, stats);
    out.finish();
    report_counts(stats);
    return exit_code_for(stats);
}

// --- extract-syntax / extract-vars -------------------------------------------

struct ExtractOptions {
    InputOptions in;
    std::string output = "-";
    unsigned parallel = 1;
    bool ascii = false;
};

int run_extract(const ExtractOptions& opt, FlowKind kind) {
    CorpusStats stats;
    std::vector<CorpusRecord> records =
        read_corpus(opt.in.path, opt.in.origin(), opt.in.read_options(), stats);

    FlowSymbols symbols = pick_symbols(opt.ascii);
    struct Extracted {
        bool ok = false;
        std::string text;
    };
    std::vector<Extracted> flows =
        parallel_map(records, opt.parallel, [&](const CorpusRecord& rec) -> Extracted {
            try {
                std::string plain = decode_sentinels(rec.code, symbols);
                AstPtr module = parse_module(plain);
                Flow flow = kind == FlowKind::Syntax ? syntax_flow(*module)
                                                     : variable_flow(*module);
                return {true, serialize_flow(flow, symbols)};
            } catch (const Error& e) {
                return {false, e.what()};
            }
        });

    const char* key = kind == FlowKind::Syntax ? "syntax_flow" : "variable_flow";
    Output out(opt.output);
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!flows[i].ok) {
            ++stats.dropped_unparseable;
            --stats.kept;
            std::cerr << "extract: " << records[i].id << ": " << flows[i].text
                      << "; record skipped\n";
            continue;
        }
        ordered_json obj;
        obj["id"] = records[i].id;
        obj[key] = flows[i].text;
        out.stream() << obj.dump() << "\n";
    }
    out.finish();
    report_counts(stats);
    return exit_code_for(stats);
}

// --- build-dataset -----------------------------------------------------------

struct BuildOptions {
    InputOptions in;
    std::string out_dir;
    EmitConfig cfg;
    std::string truncation = "drop";
    std::string predicted_flows;
};

int run_build(const BuildOptions& opt) {
    CorpusStats read_stats;
    std::vector<CorpusRecord> records =
        read_corpus(opt.in.path, opt.in.origin(), opt.in.read_options(), read_stats);

    EmitConfig cfg = opt.cfg;
    cfg.policy = opt.truncation == "drop" ? TruncationPolicy::Drop
                                          : TruncationPolicy::TruncateTail;
    std::optional<std::string> flow_file;
    if (!opt.predicted_flows.empty()) flow_file = opt.predicted_flows;

    DatasetResult result = emit_dataset(records, cfg, opt.out_dir, flow_file);

    CorpusStats combined = read_stats;
    // Records dropped while reading never reached prepare; fold the emission
    // counters on top so the stderr line shows the whole funnel.
    combined.dropped_unparseable += result.prepare.dropped_unparseable;
    combined.dropped_missing_flow += result.prepare.dropped_missing_flow;
    combined.repairs += result.prepare.repairs;
    combined.kept = result.prepare.kept;
    ordered_json report;
    report["read"] = stats_obj(read_stats, false);
    report["prepare"] = stats_obj(result.prepare, false);
    report["phase1_syntax"] = stats_obj(result.phase1_syntax, false);
    report["phase1_variable"] = stats_obj(result.phase1_variable, false);
    report["phase2"] = stats_obj(result.phase2, false);
    std::cerr << report.dump() << "\n";

    bool full = read_stats.kept == read_stats.total &&
                result.prepare.kept == result.prepare.total &&
                result.phase1_syntax.kept == result.phase1_syntax.total &&
                result.phase1_variable.kept == result.phase1_variable.total &&
                result.phase2.kept == result.phase2.total;
    return full ? kExitOk : kExitPartial;
}

// --- score -------------------------------------------------------------------

struct ScoreOptions {
    std::string candidates;
    std::string references;
    std::string output = "-";
    bool per_record = false;
    bool ascii = false;
};

// Reads a JSONL file whose lines carry at least a string `code` key (model
// output files usually have just id + code).
std::vector<std::string> read_code_column(const std::string& path,
                                          const FlowSymbols& symbols) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::string> codes;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        ordered_json obj = ordered_json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("code") ||
            !obj["code"].is_string())
            throw IoError(path + ":" + std::to_string(line_no) +
                          ": expected a JSON object with a string code key");
        codes.push_back(decode_sentinels(obj["code"].get<std::string>(), symbols));
    }
    return codes;
}

ordered_json parts_obj(const CodeBleuParts& parts) {
    ordered_json obj;
    obj["ngram"] = parts.ngram;
    obj["weighted_ngram"] = parts.weighted_ngram;
    obj["ast"] = parts.ast;
    obj["dataflow"] = parts.dataflow;
    return obj;
}

int run_score(const ScoreOptions& opt) {
    FlowSymbols symbols = pick_symbols(opt.ascii);
    std::vector<std::string> candidates = read_code_column(opt.candidates, symbols);
    std::vector<std::string> references = read_code_column(opt.references, symbols);

    CorpusScores scores = score_corpus(candidates, references, opt.per_record);

    ordered_json report;
    report["pairs"] = scores.pairs;
    report["bleu"] = scores.bleu;
    report["rouge1"] = scores.rouge1;
    report["rouge2"] = scores.rouge2;
    report["rouge_l"] = scores.rouge_l;
    report["codebleu"] = scores.codebleu;
    report["codebleu_parts"] = parts_obj(scores.mean_parts);
    ordered_json flags;
    flags["empty_candidates"] = scores.empty_candidates;
    flags["unparseable_candidates"] = scores.unparseable_candidates;
    report["flags"] = flags;
    if (opt.per_record) {
        ordered_json rows = ordered_json::array();
        for (const auto& pair : scores.per_record) {
            ordered_json row;
            row["bleu"] = pair.bleu;
            row["rouge1"] = pair.rouge1;
            row["rouge2"] = pair.rouge2;
            row["rouge_l"] = pair.rouge_l;
            row["codebleu"] = pair.codebleu.combined();
            row["codebleu_parts"] = parts_obj(pair.codebleu);
            rows.push_back(std::move(row));
        }
        report["per_record"] = rows;
    }

    Output out(opt.output);
    out.stream() << report.dump(2) << "\n";
    out.finish();
    return kExitOk;
}

// --- stats -------------------------------------------------------------------

struct StatsOptions {
    InputOptions in;
    std::string output = "-";
    bool ascii = false;
};

int run_stats(const StatsOptions& opt) {
    CorpusStats stats;
    std::vector<CorpusRecord> records =
        read_corpus(opt.in.path, opt.in.origin(), opt.in.read_options(), stats);

    EmitConfig cfg;
    cfg.ascii_sentinels = opt.ascii;
    CorpusStats prepare;
    std::vector<PreparedRecord> prepared = prepare_records(records, cfg, prepare);
    stats.dropped_unparseable += prepare.dropped_unparseable;
    stats.kept = prepare.kept;
    stats.token_length_histogram = prepare.token_length_histogram;

    std::uint64_t flows_total = 0;
    std::uint64_t flows_under_125 = 0;
    std::uint64_t max_tokens = 0;
    for (const auto& [len, count] : stats.token_length_histogram) {
        flows_total += count;
        if (len < 125) flows_under_125 += count;
        max_tokens = std::max(max_tokens, len);
    }

    ordered_json report = stats_obj(stats, /*with_histogram=*/true);
    std::uint64_t attempted = prepare.total;
    report["retention"] =
        attempted == 0 ? 1.0
                       : static_cast<double>(prepare.kept) /
                             static_cast<double>(attempted);
    ordered_json flows;
    flows["count"] = flows_total;
    flows["under_125_tokens"] =
        flows_total == 0 ? 1.0
                         : static_cast<double>(flows_under_125) /
                               static_cast<double>(flows_total);
    flows["max_tokens"] = max_tokens;
    report["flows"] = flows;

    Output out(opt.output);
    out.stream() << report.dump(2) << "\n";
    out.finish();
    return exit_code_for(stats);
}

// --- dump-rows ---------------------------------------------------------------

struct DumpRowsOptions {
    std::string input;
    std::string output = "-";
    bool ascii = false;
};

int run_dump_rows(const DumpRowsOptions& opt) {
    std::ifstream in(opt.input, std::ios::binary);
    if (!in) throw IoError("cannot open " + opt.input);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    std::string source = decode_sentinels(buffer.str(), pick_symbols(opt.ascii));

    AstPtr module = parse_module(source);
    std::vector<StatementRow> rows = walk_statements(*module);

    Output out(opt.output);
    out.stream() << "depth\tkind\tspan\n";
    for (const auto& row : rows) {
        const AstNode& node = *row.node;
        out.stream() << row.depth << "\t" << kind_name(node.kind) << "\t"
                     << node.line << ":" << node.col << "-" << node.end_line << ":"
                     << node.end_col << "\n";
    }
    out.finish();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowgen: whitespace-faithful Python cleaning, statement-flow "
                 "extraction, two-phase dataset emission, and scoring"};
    app.require_subcommand(1);

    std::string builtins_path;
    app.add_option("--builtins", builtins_path,
                   "Builtin-name list file (overrides FLOWGEN_BUILTINS)");

    NormalizeOptions norm;
    auto* norm_cmd = app.add_subcommand(
        "normalize", "Clean records and encode whitespace sentinels");
    add_input_options(norm_cmd, norm.in);
    norm_cmd->add_option("-o,--output", norm.output, "Output file, - for stdout")
        ->capture_default_str();
    norm_cmd->add_option("--parallel", norm.parallel, "Worker threads")
        ->capture_default_str();
    norm_cmd->add_flag("--ascii-sentinels", norm.ascii,
                       "Use <IND>/<NL> instead of the one-glyph sentinels");

    ExtractOptions syn;
    auto* syn_cmd =
        app.add_subcommand("extract-syntax", "Emit one syntax flow per record");
    add_input_options(syn_cmd, syn.in);
    syn_cmd->add_option("-o,--output", syn.output, "Output file, - for stdout")
        ->capture_default_str();
    syn_cmd->add_option("--parallel", syn.parallel, "Worker threads")
        ->capture_default_str();
    syn_cmd->add_flag("--ascii-sentinels", syn.ascii,
                      "Use <IND>/<NL> instead of the one-glyph sentinels");

    ExtractOptions var;
    auto* var_cmd =
        app.add_subcommand("extract-vars", "Emit one variable flow per record");
    add_input_options(var_cmd, var.in);
    var_cmd->add_option("-o,--output", var.output, "Output file, - for stdout")
        ->capture_default_str();
    var_cmd->add_option("--parallel", var.parallel, "Worker threads")
        ->capture_default_str();
    var_cmd->add_flag("--ascii-sentinels", var.ascii,
                      "Use <IND>/<NL> instead of the one-glyph sentinels");

    BuildOptions build;
    auto* build_cmd = app.add_subcommand(
        "build-dataset", "Emit the two-phase fine-tuning files and manifest");
    add_input_options(build_cmd, build.in);
    build_cmd->add_option("--out-dir", build.out_dir, "Output directory")
        ->required();
    build_cmd
        ->add_option("--max-input-tokens", build.cfg.max_input_tokens,
                     "Whitespace-token cap on inputs")
        ->capture_default_str();
    build_cmd
        ->add_option("--max-target-phase1", build.cfg.max_target_tokens_phase1,
                     "Whitespace-token cap on flow targets")
        ->capture_default_str();
    build_cmd
        ->add_option("--max-target-phase2", build.cfg.max_target_tokens_phase2,
                     "Whitespace-token cap on code targets")
        ->capture_default_str();
    build_cmd
        ->add_option("--syntax-separator", build.cfg.syntax_separator,
                     "Marker before the syntax flow in phase-two inputs")
        ->capture_default_str();
    build_cmd
        ->add_option("--variable-separator", build.cfg.variable_separator,
                     "Marker before the variable flow in phase-two inputs")
        ->capture_default_str();
    build_cmd->add_option("--truncation", build.truncation, "Over-cap handling")
        ->check(CLI::IsMember({"drop", "truncate_tail"}))
        ->capture_default_str();
    build_cmd->add_flag("--ascii-sentinels", build.cfg.ascii_sentinels,
                        "Use <IND>/<NL> instead of the one-glyph sentinels");
    build_cmd->add_option(
        "--predicted-flows", build.predicted_flows,
        "JSONL with id/syntax_flow/variable_flow; replaces gold flows in "
        "phase-two inputs");

    ScoreOptions score;
    auto* score_cmd = app.add_subcommand(
        "score", "Score generated code against references");
    score_cmd->add_option("--candidates", score.candidates, "Candidate JSONL")
        ->required();
    score_cmd->add_option("--references", score.references, "Reference JSONL")
        ->required();
    score_cmd->add_option("-o,--output", score.output, "Output file, - for stdout")
        ->capture_default_str();
    score_cmd->add_flag("--per-record", score.per_record,
                        "Include per-pair scores in the report");
    score_cmd->add_flag("--ascii-sentinels", score.ascii,
                        "Decode <IND>/<NL> instead of the one-glyph sentinels");

    StatsOptions stats;
    auto* stats_cmd = app.add_subcommand(
        "stats", "Report retention and flow-length statistics for a corpus");
    add_input_options(stats_cmd, stats.in);
    stats_cmd->add_option("-o,--output", stats.output, "Output file, - for stdout")
        ->capture_default_str();
    stats_cmd->add_flag("--ascii-sentinels", stats.ascii,
                        "Use <IND>/<NL> instead of the one-glyph sentinels");

    DumpRowsOptions dump;
    auto* dump_cmd = app.add_subcommand(
        "dump-rows", "Debug: print the statement table of one source file as TSV");
    dump_cmd->add_option("input", dump.input, "Python source file")->required();
    dump_cmd->add_option("-o,--output", dump.output, "Output file, - for stdout")
        ->capture_default_str();
    dump_cmd->add_flag("--ascii-sentinels", dump.ascii,
                       "Decode <IND>/<NL> instead of the one-glyph sentinels");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << ordered_json{{"error", e.what()}}.dump() << "\n";
        return kExitError;
    }

    try {
        if (!builtins_path.empty()) BuiltinList::set_active_path(builtins_path);
        if (norm_cmd->parsed()) return run_normalize(norm);
        if (syn_cmd->parsed()) return run_extract(syn, FlowKind::Syntax);
        if (var_cmd->parsed()) return run_extract(var, FlowKind::Variable);
        if (build_cmd->parsed()) return run_build(build);
        if (score_cmd->parsed()) return run_score(score);
        if (stats_cmd->parsed()) return run_stats(stats);
        if (dump_cmd->parsed()) return run_dump_rows(dump);
    } catch (const Error& e) {
        std::cerr << ordered_json{{"error", e.what()}}.dump() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << ordered_json{{"error", e.what()}}.dump() << "\n";
        return kExitError;
    }
    return kExitError;
}
