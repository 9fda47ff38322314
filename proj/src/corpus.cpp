#include "flowgen/corpus.h"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include "flowgen/errors.h"
#include "json.hpp"

namespace flowgen {
namespace {

using nlohmann::ordered_json;

std::string basename_of(const std::string& path) {
    return std::filesystem::path(path).filename().string();
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

void warn_line(const std::string& where, std::size_t line_no, const std::string& what) {
    std::cerr << "corpus: " << where << ":" << line_no << ": " << what
              << "; record skipped\n";
}

// Read a whole file through zlib.  gzread passes plain files through
// unchanged and walks concatenated gzip members, so one reader covers both
// compressed and uncompressed inputs.
std::string read_file_maybe_gz(const std::string& path) {
    gzFile f = gzopen(path.c_str(), "rb");
    if (f == nullptr) throw IoError("cannot open " + path);
    std::string out;
    char buf[1 << 16];
    for (;;) {
        int n = gzread(f, buf, sizeof(buf));
        if (n < 0) {
            int errnum = 0;
            std::string msg = gzerror(f, &errnum);
            gzclose(f);
            throw IoError("error reading " + path + ": " + msg);
        }
        if (n == 0) break;
        out.append(buf, static_cast<std::size_t>(n));
    }
    gzclose(f);
    return out;
}

std::string read_plain_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        std::size_t end = nl;
        if (end > start && text[end - 1] == '\r') --end;
        lines.push_back(text.substr(start, end - start));
        start = nl + 1;
    }
    return lines;
}

std::optional<Split> split_from_path(const std::string& path) {
    std::string name = lower(basename_of(path));
    if (name.find("train") != std::string::npos) return Split::Train;
    if (name.find("valid") != std::string::npos) return Split::Valid;
    if (name.find("dev") != std::string::npos) return Split::Valid;
    if (name.find("test") != std::string::npos) return Split::Test;
    return std::nullopt;
}

Split pick_split(const ordered_json& obj, const std::string& path,
                 const ReadOptions& opts) {
    if (obj.contains("split") && obj["split"].is_string()) {
        if (auto s = split_from_name(obj["split"].get<std::string>())) return *s;
    }
    if (auto s = split_from_path(path)) return *s;
    if (opts.split_hint) return *opts.split_hint;
    return Split::Train;
}

// Decode the CDC single-line encoding: "\n" and "\t" stand for newline and
// tab, "\\" for a literal backslash.  Unknown escapes pass through verbatim.
std::string decode_cdc_line(const std::string& line) {
    std::string out;
    out.reserve(line.size());
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\\' && i + 1 < line.size()) {
            char next = line[i + 1];
            if (next == 'n') {
                out.push_back('\n');
                ++i;
                continue;
            }
            if (next == 't') {
                out.push_back('\t');
                ++i;
                continue;
            }
            if (next == '\\') {
                out.push_back('\\');
                ++i;
                continue;
            }
        }
        out.push_back(line[i]);
    }
    return out;
}

void apply_short_filter(std::vector<CorpusRecord>& recs, Origin origin,
                        const ReadOptions& opts, CorpusStats& stats) {
    bool enabled = opts.short_filter.value_or(short_filter_default(origin));
    if (!enabled) return;
    std::vector<CorpusRecord> kept;
    kept.reserve(recs.size());
    for (auto& rec : recs) {
        if (passes_short_filter(rec)) {
            kept.push_back(std::move(rec));
        } else {
            ++stats.dropped_short;
            --stats.kept;
        }
    }
    recs = std::move(kept);
}

std::vector<CorpusRecord> read_jsonl(const std::string& path, Origin origin,
                                     const ReadOptions& opts, CorpusStats& stats,
                                     bool gzipped) {
    std::string text = gzipped ? read_file_maybe_gz(path) : read_plain_file(path);
    std::string base = basename_of(path);
    std::vector<CorpusRecord> recs;
    std::vector<std::string> lines = split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        ++stats.total;
        ordered_json obj = ordered_json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            ++stats.dropped_malformed;
            warn_line(base, i + 1, "not a JSON object");
            continue;
        }
        if (!obj.contains("docstring") || !obj["docstring"].is_string() ||
            !obj.contains("code") || !obj["code"].is_string()) {
            ++stats.dropped_malformed;
            warn_line(base, i + 1, "missing string keys docstring/code");
            continue;
        }
        CorpusRecord rec;
        rec.origin = origin;
        rec.docstring = obj["docstring"].get<std::string>();
        rec.code = obj["code"].get<std::string>();
        if (obj.contains("id") && obj["id"].is_string())
            rec.id = obj["id"].get<std::string>();
        else
            rec.id = base + ":" + std::to_string(i + 1);
        rec.split = pick_split(obj, path, opts);
        recs.push_back(std::move(rec));
        ++stats.kept;
    }
    apply_short_filter(recs, origin, opts, stats);
    return recs;
}

std::vector<CorpusRecord> read_cdc(const std::string& decl_path,
                                   const ReadOptions& opts, CorpusStats& stats) {
    std::string base = basename_of(decl_path);
    std::size_t mark = base.find("declarations");
    if (mark == std::string::npos)
        throw ConfigError("expected a *declarations* filename, got " + base);
    auto sibling = [&](const std::string& part) {
        std::string name = base;
        name.replace(mark, std::string("declarations").size(), part);
        return (std::filesystem::path(decl_path).parent_path() / name).string();
    };
    std::string desc_path = sibling("descriptions");
    std::string body_path = sibling("bodies");

    std::vector<std::string> decls = split_lines(read_file_maybe_gz(decl_path));
    std::vector<std::string> descs = split_lines(read_file_maybe_gz(desc_path));
    std::vector<std::string> bodies = split_lines(read_file_maybe_gz(body_path));

    std::size_t n = std::min({decls.size(), descs.size(), bodies.size()});
    std::size_t widest = std::max({decls.size(), descs.size(), bodies.size()});
    if (widest != n) {
        std::cerr << "corpus: " << base << ": parallel files disagree on length ("
                  << decls.size() << "/" << descs.size() << "/" << bodies.size()
                  << "); trailing rows skipped\n";
    }
    stats.total += widest;
    stats.dropped_malformed += widest - n;

    Split split = split_from_path(decl_path)
                      .value_or(opts.split_hint.value_or(Split::Train));
    std::vector<CorpusRecord> recs;
    recs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        CorpusRecord rec;
        rec.origin = Origin::CDC;
        rec.split = split;
        rec.id = base + ":" + std::to_string(i + 1);
        rec.docstring = decode_cdc_line(descs[i]);
        rec.code = decode_cdc_line(decls[i]) + "\n" + decode_cdc_line(bodies[i]);
        recs.push_back(std::move(rec));
        ++stats.kept;
    }
    apply_short_filter(recs, Origin::CDC, opts, stats);
    return recs;
}

}  // namespace

const char* origin_name(Origin o) {
    switch (o) {
        case Origin::CSN: return "csn";
        case Origin::CDC: return "cdc";
        case Origin::Adv: return "adv";
        case Origin::Generic: return "generic";
    }
    return "generic";
}

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Valid: return "valid";
        case Split::Test: return "test";
    }
    return "train";
}

std::optional<Origin> origin_from_name(const std::string& s) {
    std::string name = lower(s);
    if (name == "csn") return Origin::CSN;
    if (name == "cdc") return Origin::CDC;
    if (name == "adv") return Origin::Adv;
    if (name == "generic") return Origin::Generic;
    return std::nullopt;
}

std::optional<Split> split_from_name(const std::string& s) {
    std::string name = lower(s);
    if (name == "train") return Split::Train;
    if (name == "valid" || name == "validation" || name == "dev") return Split::Valid;
    if (name == "test") return Split::Test;
    return std::nullopt;
}

void CorpusStats::merge(const CorpusStats& other) {
    total += other.total;
    kept += other.kept;
    dropped_unparseable += other.dropped_unparseable;
    dropped_short += other.dropped_short;
    dropped_malformed += other.dropped_malformed;
    dropped_overlong += other.dropped_overlong;
    dropped_separator += other.dropped_separator;
    dropped_missing_flow += other.dropped_missing_flow;
    truncated += other.truncated;
    repairs += other.repairs;
    duplicate_ids += other.duplicate_ids;
    for (const auto& [len, count] : other.token_length_histogram)
        token_length_histogram[len] += count;
}

bool short_filter_default(Origin origin) { return origin != Origin::Generic; }

bool passes_short_filter(const CorpusRecord& rec) {
    int words = 0;
    bool in_word = false;
    for (char c : rec.docstring) {
        bool ws = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!ws && !in_word) ++words;
        in_word = !ws;
    }
    if (words < 3) return false;
    int lines = 0;
    bool line_has_content = false;
    for (char c : rec.code) {
        if (c == '\n') {
            if (line_has_content) ++lines;
            line_has_content = false;
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            line_has_content = true;
        }
    }
    if (line_has_content) ++lines;
    return lines >= 3;
}

std::vector<CorpusRecord> read_corpus(const std::string& path, Origin origin,
                                      const ReadOptions& opts, CorpusStats& stats) {
    switch (origin) {
        case Origin::Generic:
            return read_jsonl(path, origin, opts, stats, /*gzipped=*/false);
        case Origin::CSN:
        case Origin::Adv:
            return read_jsonl(path, origin, opts, stats, /*gzipped=*/true);
        case Origin::CDC:
            return read_cdc(path, opts, stats);
    }
    throw ConfigError("unknown corpus origin");
}

void write_corpus(std::ostream& out, const std::vector<CorpusRecord>& recs,
                  CorpusStats& stats) {
    std::unordered_map<std::string, int> seen;
    for (const auto& rec : recs) {
        std::string id = rec.id;
        int& count = seen[rec.id];
        ++count;
        if (count > 1) {
            id += "#" + std::to_string(count);
            ++stats.duplicate_ids;
        }
        ordered_json obj;
        obj["id"] = id;
        obj["origin"] = origin_name(rec.origin);
        obj["split"] = split_name(rec.split);
        obj["docstring"] = rec.docstring;
        obj["code"] = rec.code;
        out << obj.dump() << "\n";
    }
    if (!out) throw IoError("error writing corpus output");
}

void write_corpus(const std::string& path, const std::vector<CorpusRecord>& recs,
                  CorpusStats& stats) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    write_corpus(out, recs, stats);
}

std::optional<CorpusRecord> parse_canonical_line(const std::string& line,
                                                 std::size_t line_no,
                                                 const std::string& where) {
    ordered_json obj = ordered_json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
        warn_line(where, line_no, "not a JSON object");
        return std::nullopt;
    }
    for (const char* key : {"id", "docstring", "code"}) {
        if (!obj.contains(key) || !obj[key].is_string()) {
            warn_line(where, line_no, std::string("missing string key ") + key);
            return std::nullopt;
        }
    }
    CorpusRecord rec;
    rec.id = obj["id"].get<std::string>();
    rec.docstring = obj["docstring"].get<std::string>();
    rec.code = obj["code"].get<std::string>();
    if (obj.contains("origin") && obj["origin"].is_string())
        rec.origin = origin_from_name(obj["origin"].get<std::string>())
                         .value_or(Origin::Generic);
    if (obj.contains("split") && obj["split"].is_string())
        rec.split = split_from_name(obj["split"].get<std::string>())
                        .value_or(Split::Train);
    return rec;
}

std::vector<CorpusRecord> read_canonical(const std::string& path, CorpusStats& stats) {
    std::string base = basename_of(path);
    std::vector<std::string> lines = split_lines(read_plain_file(path));
    std::vector<CorpusRecord> recs;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
        ++stats.total;
        if (auto rec = parse_canonical_line(lines[i], i + 1, base)) {
            recs.push_back(std::move(*rec));
            ++stats.kept;
        } else {
            ++stats.dropped_malformed;
        }
    }
    return recs;
}

}  // namespace flowgen
