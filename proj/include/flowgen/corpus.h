#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flowgen {

// Where a record came from.  The source shape decides how files are parsed
// and whether the short-record filter is on by default.
enum class Origin {
    CSN,      // gzipped JSONL, one object per line
    CDC,      // three parallel text files (declarations / descriptions / bodies)
    Adv,      // gzipped JSONL, same shape as CSN
    Generic,  // plain JSONL
};

enum class Split { Train, Valid, Test };

const char* origin_name(Origin o);
const char* split_name(Split s);
std::optional<Origin> origin_from_name(const std::string& s);
std::optional<Split> split_from_name(const std::string& s);

struct CorpusRecord {
    std::string id;
    Origin origin = Origin::Generic;
    Split split = Split::Train;
    std::string docstring;
    std::string code;
};

// Counters for a read / filter / emit pass.  Every record that enters a pass
// lands in exactly one bucket, so:
//
//   total == kept + dropped_unparseable + dropped_short + dropped_malformed
//            + dropped_overlong + dropped_separator + dropped_missing_flow
//
// holds after any operation that fills the struct (buckets an operation does
// not use stay zero).  `truncated` counts records that were kept in shortened
// form, so it is not part of the conservation sum.
struct CorpusStats {
    std::uint64_t total = 0;
    std::uint64_t kept = 0;
    std::uint64_t dropped_unparseable = 0;
    std::uint64_t dropped_short = 0;
    std::uint64_t dropped_malformed = 0;     // unreadable input line / row
    std::uint64_t dropped_overlong = 0;      // over token cap under drop policy
    std::uint64_t dropped_separator = 0;     // docstring collides with separators
    std::uint64_t dropped_missing_flow = 0;  // id absent from supplied flow file
    std::uint64_t truncated = 0;             // kept but shortened (truncate_tail)
    std::uint64_t repairs = 0;               // tolerant flow-parse repairs seen
    std::uint64_t duplicate_ids = 0;         // ids rewritten as id#k on write
    // Flow length distribution: whitespace-token count -> number of flows.
    std::map<std::uint64_t, std::uint64_t> token_length_histogram;

    bool conserved() const {
        return total == kept + dropped_unparseable + dropped_short +
                            dropped_malformed + dropped_overlong +
                            dropped_separator + dropped_missing_flow;
    }
    void merge(const CorpusStats& other);
};

struct ReadOptions {
    // Drop records whose docstring has fewer than three words or whose code
    // has fewer than three lines.  Unset means "use the origin's default":
    // on for CSN / CDC / Adv, off for Generic.
    std::optional<bool> short_filter;
    // Split recorded on records when the file itself does not say.
    std::optional<Split> split_hint;
};

bool short_filter_default(Origin origin);

// True when the record passes the short filter (>= 3 docstring words and
// >= 3 code lines).
bool passes_short_filter(const CorpusRecord& rec);

// Read one corpus file.  `origin` picks the on-disk shape:
//   Generic     plain JSONL with keys id / docstring / code (split optional)
//   CSN, Adv    gzipped JSONL with keys docstring / code; missing ids become
//               "<filename>:<line>"
//   CDC         `path` names the declarations file; the descriptions and
//               bodies files are found by substituting the filename, and
//               code is declaration + "\n" + body after unescaping
// Malformed lines are skipped with a warning on stderr and counted in
// `stats.dropped_malformed`.
std::vector<CorpusRecord> read_corpus(const std::string& path, Origin origin,
                                      const ReadOptions& opts, CorpusStats& stats);

// Write records as canonical JSONL: one compact object per line with keys in
// the fixed order id, origin, split, docstring, code; UTF-8; LF line ends.
// Records sharing an id get "#2", "#3", ... appended in input order so ids
// stay unique; each rewrite bumps `stats.duplicate_ids`.
void write_corpus(std::ostream& out, const std::vector<CorpusRecord>& recs,
                  CorpusStats& stats);
void write_corpus(const std::string& path, const std::vector<CorpusRecord>& recs,
                  CorpusStats& stats);

// Parse one canonical JSONL line back into a record.  Returns nullopt (and
// warns) when the line is not valid JSON or misses required keys.
std::optional<CorpusRecord> parse_canonical_line(const std::string& line,
                                                 std::size_t line_no,
                                                 const std::string& where);

// Read a canonical JSONL file written by write_corpus (or shaped like one).
std::vector<CorpusRecord> read_canonical(const std::string& path, CorpusStats& stats);

}  // namespace flowgen
