#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace flowgen {

// A flow is a list of rows, one per logical statement.  Each row carries the
// statement's depth and a sequence of space-free tags: for a syntax flow the
// statement kind followed by structural annotations, for a variable flow the
// user-defined names the statement touches (possibly none).
struct FlowRow {
    int depth = 0;
    std::vector<std::string> tags;
};

struct Flow {
    std::vector<FlowRow> rows;
};

enum class FlowKind { Syntax, Variable };

// Sentinel pair used in serialized artifacts.  The defaults are the one-glyph
// forms: U+00A7 (section sign) for one indentation unit and U+03B4 (delta)
// for a row break.  The ASCII alternates keep downstream tokenizers that
// mangle non-ASCII bytes usable.
struct FlowSymbols {
    std::string indent = "\xC2\xA7";
    std::string newline = "\xCE\xB4";

    static FlowSymbols ascii() { return {"<IND>", "<NL>"}; }
};

// "<depth> <tag> <tag> ..." rows joined by " <newline-sentinel> ".
std::string serialize_flow(const Flow& flow, const FlowSymbols& symbols = {});

struct FlowParseResult {
    Flow flow;
    int repairs = 0;  // tolerant-mode corrections applied
};

// Parses serialized flow text.  Strict mode throws FlowFormatError on the
// first malformed element.  Tolerant mode never throws: unknown syntax tags
// become UNK, malformed depths are clamped or zeroed, invalid names are
// dropped, and every correction increments `repairs`.  Both row sentinels
// (glyph and ASCII) are accepted on input.
FlowParseResult parse_flow(std::string_view text, FlowKind kind, bool strict);

// True when `name` is usable as a flow name tag: a Python-style identifier
// (ASCII or high-byte), containing neither sentinel glyph.
bool is_valid_flow_name(std::string_view name);

// Number of whitespace-separated tokens; the unit used for length statistics
// and truncation budgets.
size_t whitespace_token_count(std::string_view text);

}  // namespace flowgen
