#include "flowgen/flow.h"

#include <cctype>
#include <charconv>

#include "flowgen/ast.h"
#include "flowgen/builtins.h"
#include "flowgen/errors.h"

namespace flowgen {

namespace {

constexpr std::string_view kIndentGlyph = "\xC2\xA7";   // U+00A7
constexpr std::string_view kNewlineGlyph = "\xCE\xB4";  // U+03B4
constexpr std::string_view kIndentAscii = "<IND>";
constexpr std::string_view kNewlineAscii = "<NL>";

bool is_row_head_kind(NodeKind kind) {
    return is_statement_kind(kind) || kind == NodeKind::ExceptHandler ||
           kind == NodeKind::MatchCase;
}

// Splits serialized flow text into per-row chunks at either row sentinel.
std::vector<std::string_view> split_rows(std::string_view text) {
    std::vector<std::string_view> rows;
    size_t begin = 0;
    size_t p = 0;
    while (p < text.size()) {
        size_t sep_len = 0;
        if (text.compare(p, kNewlineGlyph.size(), kNewlineGlyph) == 0) {
            sep_len = kNewlineGlyph.size();
        } else if (text.compare(p, kNewlineAscii.size(), kNewlineAscii) == 0) {
            sep_len = kNewlineAscii.size();
        }
        if (sep_len > 0) {
            rows.push_back(text.substr(begin, p - begin));
            p += sep_len;
            begin = p;
        } else {
            ++p;
        }
    }
    rows.push_back(text.substr(begin));
    return rows;
}

std::vector<std::string_view> split_tokens(std::string_view row) {
    std::vector<std::string_view> tokens;
    size_t p = 0;
    while (p < row.size()) {
        while (p < row.size() &&
               std::isspace(static_cast<unsigned char>(row[p])))
            ++p;
        size_t begin = p;
        while (p < row.size() &&
               !std::isspace(static_cast<unsigned char>(row[p])))
            ++p;
        if (p > begin) tokens.push_back(row.substr(begin, p - begin));
    }
    return tokens;
}

bool parse_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool is_valid_syntax_tag(std::string_view tag, bool head) {
    if (tag == "UNK") return true;
    if (auto kind = kind_from_name(tag)) {
        if (head) return is_row_head_kind(*kind);
        return true;
    }
    if (head) return false;
    // call annotations name the built-in being invoked
    return BuiltinList::active().contains(tag);
}

[[noreturn]] void reject(const std::string& msg, std::string_view token) {
    throw FlowFormatError(msg, std::string(token));
}

}  // namespace

bool is_valid_flow_name(std::string_view name) {
    if (name.empty()) return false;
    if (name.find(kIndentGlyph) != std::string_view::npos) return false;
    if (name.find(kNewlineGlyph) != std::string_view::npos) return false;
    for (size_t i = 0; i < name.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(name[i]);
        bool alpha = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                     c == '_' || c >= 0x80;
        bool digit = c >= '0' && c <= '9';
        if (i == 0 ? !alpha : !(alpha || digit)) return false;
    }
    return true;
}

std::string serialize_flow(const Flow& flow, const FlowSymbols& symbols) {
    std::string out;
    for (size_t r = 0; r < flow.rows.size(); ++r) {
        if (r > 0) {
            out += ' ';
            out += symbols.newline;
            out += ' ';
        }
        out += std::to_string(flow.rows[r].depth);
        for (const auto& tag : flow.rows[r].tags) {
            out += ' ';
            out += tag;
        }
    }
    return out;
}

FlowParseResult parse_flow(std::string_view text, FlowKind kind, bool strict) {
    FlowParseResult result;
    std::vector<std::string_view> chunks = split_rows(text);
    for (std::string_view chunk : chunks) {
        std::vector<std::string_view> tokens = split_tokens(chunk);
        if (tokens.empty()) {
            // an empty chunk only exists when the whole text is empty or a
            // separator is dangling; the former is a valid empty flow
            if (chunks.size() == 1) continue;
            if (strict) reject("empty flow row", chunk);
            ++result.repairs;
            continue;
        }
        FlowRow row;
        size_t t = 0;
        int depth = 0;
        if (parse_int(tokens[0], depth)) {
            ++t;
            if (depth < 0) {
                if (strict) reject("negative row depth", tokens[0]);
                depth = 0;
                ++result.repairs;
            }
        } else {
            if (strict) reject("malformed row depth", tokens[0]);
            depth = 0;
            ++result.repairs;
        }
        row.depth = depth;

        if (kind == FlowKind::Syntax) {
            if (t >= tokens.size()) {
                if (strict) reject("syntax row without a statement tag", chunk);
                row.tags.emplace_back("UNK");
                ++result.repairs;
            }
            for (; t < tokens.size(); ++t) {
                bool head = row.tags.empty();
                if (is_valid_syntax_tag(tokens[t], head)) {
                    row.tags.emplace_back(tokens[t]);
                } else {
                    if (strict)
                        reject(head ? "unknown statement tag"
                                    : "unknown structure tag",
                               tokens[t]);
                    row.tags.emplace_back("UNK");
                    ++result.repairs;
                }
            }
        } else {
            for (; t < tokens.size(); ++t) {
                if (is_valid_flow_name(tokens[t])) {
                    row.tags.emplace_back(tokens[t]);
                } else {
                    if (strict) reject("invalid name tag", tokens[t]);
                    ++result.repairs;  // dropped
                }
            }
        }
        result.flow.rows.push_back(std::move(row));
    }
    return result;
}

size_t whitespace_token_count(std::string_view text) {
    size_t count = 0;
    bool in_token = false;
    for (char ch : text) {
        bool space = std::isspace(static_cast<unsigned char>(ch)) != 0;
        if (!space && !in_token) ++count;
        in_token = !space;
    }
    return count;
}

}  // namespace flowgen
