#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flowgen/corpus.h"
#include "flowgen/flow.h"

namespace flowgen {

// What to do with a record whose input or target exceeds its token cap.
enum class TruncationPolicy { Drop, TruncateTail };

const char* truncation_policy_name(TruncationPolicy p);

struct EmitConfig {
    std::size_t max_input_tokens = 512;
    std::size_t max_target_tokens_phase1 = 128;
    std::size_t max_target_tokens_phase2 = 256;
    std::string syntax_separator = "<syn>";
    std::string variable_separator = "<var>";
    TruncationPolicy policy = TruncationPolicy::Drop;
    bool ascii_sentinels = false;

    FlowSymbols symbols() const {
        return ascii_sentinels ? FlowSymbols::ascii() : FlowSymbols{};
    }
};

// A record carried through normalization and flow extraction, ready to be
// written into either phase's files.
struct PreparedRecord {
    std::string id;
    std::string docstring;
    std::string encoded_code;   // normalized code with whitespace sentinels
    std::string syntax_flow;    // serialized with the configured sentinels
    std::string variable_flow;  // serialized with the configured sentinels
};

// Normalize each record's code (decoding sentinels first, so both raw and
// already-normalized corpora work) and extract its two flows.  Records whose
// code cannot be normalized are dropped and counted.  The histogram in
// `stats` collects the whitespace-token length of every extracted flow.
std::vector<PreparedRecord> prepare_records(const std::vector<CorpusRecord>& records,
                                            const EmitConfig& cfg, CorpusStats& stats);

// Replace the gold flows with model-generated ones read from a JSONL file
// with keys id / syntax_flow / variable_flow.  Flows are parsed tolerantly
// (repairs counted) and re-serialized with the configured sentinels; records
// whose id is absent from the file are dropped and counted.
std::vector<PreparedRecord> substitute_predicted_flows(
    std::vector<PreparedRecord> prepared, const std::string& flow_file,
    const EmitConfig& cfg, CorpusStats& stats);

// First fine-tuning task: docstring in, one flow out.  Writes one JSONL file
// per flow kind (keys id / input / target) and fills one stats struct per
// file; inputs over max_input_tokens and targets over the phase-one cap are
// dropped or tail-truncated per the policy.
void emit_phase1(const std::vector<PreparedRecord>& prepared, const EmitConfig& cfg,
                 const std::string& syntax_path, const std::string& variable_path,
                 CorpusStats& syntax_stats, CorpusStats& variable_stats);

// Second fine-tuning task: docstring plus both flows in, sentinel-encoded
// code out.  The input line is
//   <docstring> <syn-sep> <syntax flow> <var-sep> <variable flow>
// so a docstring containing either separator is dropped (the decomposition
// would be ambiguous).  Caps apply as in phase one, with the phase-two
// target cap.
void emit_phase2(const std::vector<PreparedRecord>& prepared, const EmitConfig& cfg,
                 const std::string& path, CorpusStats& stats);

struct DatasetResult {
    CorpusStats prepare;
    CorpusStats phase1_syntax;
    CorpusStats phase1_variable;
    CorpusStats phase2;
};

// Full emission into a directory: phase1.syntax.jsonl, phase1.variable.jsonl,
// phase2.jsonl and manifest.json.  `predicted_flow_file` switches phase-two
// inputs from gold flows to model-generated ones.  The manifest records the
// configuration, sentinel choices, builtin-list version, counters, and the
// reference fine-tuning hyperparameters; it contains nothing run-dependent,
// so repeated runs are byte-identical.
DatasetResult emit_dataset(const std::vector<CorpusRecord>& records,
                           const EmitConfig& cfg, const std::string& out_dir,
                           const std::optional<std::string>& predicted_flow_file);

}  // namespace flowgen
