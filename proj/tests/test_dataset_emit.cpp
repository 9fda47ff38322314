// Two-phase dataset emission: record preparation, token caps under both
// policies, separator collisions, predicted-flow substitution, manifest
// determinism, and the phase-two consistency triangle.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "flowgen/dataset.h"
#include "flowgen/flow.h"
#include "flowgen/normalizer.h"
#include "flowgen/parser.h"
#include "flowgen/syntax_flow.h"
#include "json.hpp"
#include "program_gen.h"
#include "temp_dir.h"

using namespace flowgen;
using flowgen::testing::GenOptions;
using flowgen::testing::TempDir;
using flowgen::testing::slurp;
using ordered_json = nlohmann::ordered_json;

namespace {

CorpusRecord make_record(std::string id, std::string docstring, std::string code) {
    CorpusRecord r;
    r.id = std::move(id);
    r.docstring = std::move(docstring);
    r.code = std::move(code);
    return r;
}

std::vector<ordered_json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<ordered_json> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(ordered_json::parse(line));
    }
    return out;
}

std::string repeat_words(const std::string& word, int n) {
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += word;
    }
    return out;
}

}  // namespace

TEST_CASE("prepare_records normalizes, encodes and extracts both flows") {
    std::vector<CorpusRecord> recs;
    recs.push_back(make_record("r1", "adds two numbers",
                               "def add(a, b):\n    '''doc'''\n    return a + b\n"));
    EmitConfig cfg;
    cfg.ascii_sentinels = true;
    CorpusStats stats;
    auto prepared = prepare_records(recs, cfg, stats);
    REQUIRE_EQ(prepared.size(), 1u);
    CHECK_EQ(prepared[0].encoded_code,
             "def add(a, b):<NL><IND>return a + b<NL>");
    CHECK_EQ(prepared[0].syntax_flow,
             "0 FunctionDef arguments <NL> 1 Return BinOp");
    CHECK_EQ(prepared[0].variable_flow, "0 add a b <NL> 1 a b");
    CHECK_EQ(stats.kept, 1u);
    CHECK(stats.conserved());
    // Both extracted flows land in the histogram, sentinels included:
    // the syntax flow is 7 tokens, the variable flow 8.
    CHECK_EQ(stats.token_length_histogram.at(7), 1u);
    CHECK_EQ(stats.token_length_histogram.at(8), 1u);
}

TEST_CASE("prepare_records accepts already-encoded code") {
    std::vector<CorpusRecord> recs;
    recs.push_back(
        make_record("enc", "it is encoded", "def f():\xCE\xB4\xC2\xA7pass\xCE\xB4"));
    EmitConfig cfg;  // glyph sentinels
    CorpusStats stats;
    auto prepared = prepare_records(recs, cfg, stats);
    REQUIRE_EQ(prepared.size(), 1u);
    CHECK_EQ(prepared[0].encoded_code, "def f():\xCE\xB4\xC2\xA7pass\xCE\xB4");
}

TEST_CASE("unparseable records are dropped and counted") {
    std::vector<CorpusRecord> recs;
    recs.push_back(make_record("ok", "fine docstring here", "x = 1\n"));
    recs.push_back(make_record("bad", "broken beyond repair", "def f(:\n"));
    EmitConfig cfg;
    CorpusStats stats;
    auto prepared = prepare_records(recs, cfg, stats);
    REQUIRE_EQ(prepared.size(), 1u);
    CHECK_EQ(prepared[0].id, "ok");
    CHECK_EQ(stats.total, 2u);
    CHECK_EQ(stats.kept, 1u);
    CHECK_EQ(stats.dropped_unparseable, 1u);
    CHECK(stats.conserved());
}

TEST_CASE("phase one writes docstring-to-flow lines for both kinds") {
    TempDir dir;
    std::vector<CorpusRecord> recs;
    recs.push_back(make_record("r1", "counts the items",
                               "def cnt(xs):\n    return len(xs)\n"));
    EmitConfig cfg;
    cfg.ascii_sentinels = true;
    CorpusStats pstats;
    auto prepared = prepare_records(recs, cfg, pstats);
    std::string syn_path = (dir.path / "p1s.jsonl").string();
    std::string var_path = (dir.path / "p1v.jsonl").string();
    CorpusStats syn_stats, var_stats;
    emit_phase1(prepared, cfg, syn_path, var_path, syn_stats, var_stats);
    auto syn = read_jsonl(syn_path);
    auto var = read_jsonl(var_path);
    REQUIRE_EQ(syn.size(), 1u);
    REQUIRE_EQ(var.size(), 1u);
    CHECK_EQ(syn[0]["id"], "r1");
    CHECK_EQ(syn[0]["input"], "counts the items");
    CHECK_EQ(syn[0]["target"],
             "0 FunctionDef arguments <NL> 1 Return Call len");
    CHECK_EQ(var[0]["target"], "0 cnt xs <NL> 1 xs");
    // Key order is id, input, target.
    auto it = syn[0].begin();
    CHECK_EQ(it.key(), "id");
    CHECK_EQ((++it).key(), "input");
    CHECK_EQ((++it).key(), "target");
}

TEST_CASE("phase two concatenates docstring and flows around separators") {
    TempDir dir;
    std::vector<CorpusRecord> recs;
    recs.push_back(make_record("r1", "does the thing", "x = y\n"));
    EmitConfig cfg;
    cfg.ascii_sentinels = true;
    CorpusStats pstats;
    auto prepared = prepare_records(recs, cfg, pstats);
    std::string path = (dir.path / "p2.jsonl").string();
    CorpusStats stats;
    emit_phase2(prepared, cfg, path, stats);
    auto lines = read_jsonl(path);
    REQUIRE_EQ(lines.size(), 1u);
    CHECK_EQ(lines[0]["input"],
             "does the thing <syn> 0 Assign Name Name <var> 0 x y");
    CHECK_EQ(lines[0]["target"], "x = y<NL>");
}

TEST_CASE("docstrings containing a separator are dropped") {
    TempDir dir;
    std::vector<CorpusRecord> recs;
    recs.push_back(make_record("poison", "contains the <syn> marker", "x = 1\n"));
    recs.push_back(make_record("fine", "clean docstring text", "y = 2\n"));
    EmitConfig cfg;
    CorpusStats pstats;
    auto prepared = prepare_records(recs, cfg, pstats);
    std::string path = (dir.path / "p2.jsonl").string();
    CorpusStats stats;
    emit_phase2(prepared, cfg, path, stats);
    auto lines = read_jsonl(path);
    REQUIRE_EQ(lines.size(), 1u);
    CHECK_EQ(lines[0]["id"], "fine");
    CHECK_EQ(stats.dropped_separator, 1u);
    CHECK(stats.conserved());
}

TEST_CASE("drop policy removes over-cap records, truncate shortens them") {
    TempDir dir;
    std::vector<CorpusRecord> recs;
    recs.push_back(
        make_record("long", repeat_words("word", 600), "x = 1\n"));
    recs.push_back(make_record("ok", "short enough doc", "y = 2\n"));
    EmitConfig cfg;
    CorpusStats pstats;
    auto prepared = prepare_records(recs, cfg, pstats);

    SUBCASE("drop") {
        std::string path = (dir.path / "drop.jsonl").string();
        CorpusStats stats;
        emit_phase2(prepared, cfg, path, stats);
        auto lines = read_jsonl(path);
        REQUIRE_EQ(lines.size(), 1u);
        CHECK_EQ(lines[0]["id"], "ok");
        CHECK_EQ(stats.dropped_overlong, 1u);
        CHECK_EQ(stats.truncated, 0u);
        CHECK(stats.conserved());
    }

    SUBCASE("truncate_tail") {
        EmitConfig trunc = cfg;
        trunc.policy = TruncationPolicy::TruncateTail;
        std::string path = (dir.path / "trunc.jsonl").string();
        CorpusStats stats;
        emit_phase2(prepared, trunc, path, stats);
        auto lines = read_jsonl(path);
        REQUIRE_EQ(lines.size(), 2u);
        CHECK_EQ(stats.truncated, 1u);
        CHECK_EQ(stats.dropped_overlong, 0u);
        std::string input = lines[0]["input"];
        CHECK_EQ(whitespace_token_count(input), trunc.max_input_tokens);
        // Truncation cuts whole tokens off the tail, preserving the prefix.
        CHECK_EQ(input.substr(0, 9), "word word");
    }
}

TEST_CASE("phase one target caps apply per flow kind") {
    TempDir dir;
    // A deep, wide program makes a long syntax flow; variable flow stays short.
    std::string code;
    for (int i = 0; i < 40; ++i)
        code += "x" + std::to_string(i) + " = " + std::to_string(i) + "\n";
    std::vector<CorpusRecord> recs;
    recs.push_back(make_record("wide", "assigns many values", code));
    EmitConfig cfg;
    cfg.max_target_tokens_phase1 = 30;
    CorpusStats pstats;
    auto prepared = prepare_records(recs, cfg, pstats);
    std::string syn_path = (dir.path / "s.jsonl").string();
    std::string var_path = (dir.path / "v.jsonl").string();
    CorpusStats syn_stats, var_stats;
    emit_phase1(prepared, cfg, syn_path, var_path, syn_stats, var_stats);
    // 40 rows x 3 tokens + 39 sentinels > 30 for both kinds here; check the
    // two stats structs are filled independently.
    CHECK_EQ(syn_stats.total, 1u);
    CHECK_EQ(var_stats.total, 1u);
    CHECK_EQ(syn_stats.dropped_overlong, 1u);
    CHECK_EQ(var_stats.dropped_overlong, 1u);
    CHECK(read_jsonl(syn_path).empty());
    CHECK(read_jsonl(var_path).empty());
}

TEST_CASE("predicted flows replace gold flows and count repairs") {
    TempDir dir;
    std::vector<CorpusRecord> recs;
    recs.push_back(make_record("a", "first of the pair", "x = 1\n"));
    recs.push_back(make_record("b", "second of the pair", "y = 2\n"));
    EmitConfig cfg;
    cfg.ascii_sentinels = true;
    CorpusStats pstats;
    auto prepared = prepare_records(recs, cfg, pstats);

    // `a` gets clean flows; `b` is absent so it must be dropped.  The syntax
    // flow for `a` contains an unknown tag that tolerant parsing repairs.
    std::string flows = dir.file(
        "pred.jsonl",
        "{\"id\":\"a\",\"syntax_flow\":\"0 Assign Frobnicate\","
        "\"variable_flow\":\"0 x\"}\n");
    CorpusStats stats;
    stats.total = pstats.total;
    stats.kept = pstats.kept;
    auto substituted = substitute_predicted_flows(prepared, flows, cfg, stats);
    REQUIRE_EQ(substituted.size(), 1u);
    CHECK_EQ(substituted[0].id, "a");
    CHECK_EQ(substituted[0].syntax_flow, "0 Assign UNK");
    CHECK_EQ(substituted[0].variable_flow, "0 x");
    CHECK_EQ(stats.dropped_missing_flow, 1u);
    CHECK_EQ(stats.repairs, 1u);
    CHECK_EQ(stats.kept, 1u);
    CHECK(stats.conserved());
}

TEST_CASE("emit_dataset writes four files and a stable manifest") {
    TempDir dir;
    std::vector<CorpusRecord> recs;
    recs.push_back(make_record("m1", "computes a sum",
                               "def s(a, b):\n    return a + b\n"));
    recs.push_back(make_record("m2", "loops over items",
                               "for i in range(3):\n    print(i)\n"));
    EmitConfig cfg;
    std::string out1 = (dir.path / "run1").string();
    std::string out2 = (dir.path / "run2").string();
    DatasetResult r1 = emit_dataset(recs, cfg, out1, std::nullopt);
    DatasetResult r2 = emit_dataset(recs, cfg, out2, std::nullopt);
    CHECK_EQ(r1.prepare.kept, 2u);
    CHECK(r1.prepare.conserved());
    for (const char* name : {"phase1.syntax.jsonl", "phase1.variable.jsonl",
                             "phase2.jsonl", "manifest.json"}) {
        CAPTURE(name);
        std::string a = slurp(out1 + "/" + name);
        std::string b = slurp(out2 + "/" + name);
        REQUIRE_FALSE(a.empty());
        REQUIRE_EQ(a, b);  // byte-identical across runs
    }
    ordered_json manifest = ordered_json::parse(slurp(out1 + "/manifest.json"));
    CHECK_EQ(manifest["config"]["max_input_tokens"], 512);
    CHECK_EQ(manifest["config"]["truncation_policy"], "drop");
    CHECK_EQ(manifest["sentinels"]["indent"], "\xC2\xA7");
    CHECK_EQ(manifest["sentinels"]["newline"], "\xCE\xB4");
    CHECK_EQ(manifest["flow_source"], "gold");
    CHECK(manifest.contains("builtins_version"));
    CHECK(manifest.contains("training_reference"));
    CHECK_EQ(manifest["training_reference"]["optimizer"], "AdamW");
    CHECK_EQ(manifest["training_reference"]["batch_size"], 32);
    CHECK_EQ(manifest["files"]["phase2"], "phase2.jsonl");
    // Nothing run-dependent may leak in.
    std::string text = slurp(out1 + "/manifest.json");
    CHECK_EQ(text.find("time"), std::string::npos);
    CHECK_EQ(text.find(dir.path.string()), std::string::npos);
}

TEST_CASE("phase-two consistency triangle holds on 1000 generated records") {
    TempDir dir;
    std::vector<CorpusRecord> recs;
    for (std::uint32_t seed = 0; seed < 1000; ++seed) {
        GenOptions opt;
        opt.seed = seed;
        opt.inject_comments = true;
        opt.inject_docstrings = (seed % 2 == 0);
        auto prog = flowgen::testing::generate_program(opt);
        recs.push_back(make_record("g" + std::to_string(seed),
                                   "generated sample number " +
                                       std::to_string(seed),
                                   prog.source));
    }
    EmitConfig cfg;
    cfg.policy = TruncationPolicy::Drop;
    cfg.max_input_tokens = 100000;  // no caps: every record must survive
    cfg.max_target_tokens_phase2 = 100000;
    std::string out = (dir.path / "tri").string();
    DatasetResult result = emit_dataset(recs, cfg, out, std::nullopt);
    CHECK_EQ(result.prepare.kept, 1000u);
    auto lines = read_jsonl(out + "/phase2.jsonl");
    REQUIRE_EQ(lines.size(), 1000u);
    FlowSymbols symbols;  // glyph sentinels
    size_t verified = 0;
    for (const auto& line : lines) {
        std::string input = line["input"];
        std::string target = line["target"];
        // Slice the syntax segment out of the prompt.
        size_t syn_at = input.find(" <syn> ");
        size_t var_at = input.find(" <var> ");
        REQUIRE_NE(syn_at, std::string::npos);
        REQUIRE_NE(var_at, std::string::npos);
        std::string prompt_syntax =
            input.substr(syn_at + 7, var_at - (syn_at + 7));
        // Re-derive the flow from the decoded target code.
        std::string decoded = decode_sentinels(target, symbols);
        REQUIRE_EQ(syntax_flow_text(decoded, symbols), prompt_syntax);
        ++verified;
    }
    CHECK_EQ(verified, 1000u);
}
