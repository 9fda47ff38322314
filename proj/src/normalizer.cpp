#include "flowgen/normalizer.h"

#include <algorithm>

#include "flowgen/ast.h"
#include "flowgen/errors.h"
#include "flowgen/parser.h"
#include "flowgen/tokenizer.h"

namespace flowgen {

namespace {

struct Edit {
    size_t begin;
    size_t end;
    std::string replacement;  // empty = plain deletion
};

std::string apply_edits(std::string_view source, std::vector<Edit> edits) {
    std::sort(edits.begin(), edits.end(),
              [](const Edit& a, const Edit& b) { return a.begin < b.begin; });
    for (size_t k = 1; k < edits.size(); ++k) {
        if (edits[k].begin < edits[k - 1].end)
            throw NormalizationError("overlapping rewrite spans");
    }
    std::string out;
    out.reserve(source.size());
    size_t pos = 0;
    for (const Edit& e : edits) {
        out.append(source.substr(pos, e.begin - pos));
        out.append(e.replacement);
        pos = e.end;
    }
    out.append(source.substr(pos));
    return out;
}

bool all_ws(std::string_view s) {
    for (char c : s)
        if (c != ' ' && c != '\t' && c != '\f' && c != '\r' && c != '\n')
            return false;
    return true;
}

// Deletes a comment token: a comment alone on its line takes the whole line
// with it, a trailing comment takes the padding before it.
Edit comment_edit(const TokenStream& ts, const Token& comment) {
    const std::string& src = ts.source;
    size_t line_begin = comment.begin;
    while (line_begin > 0 && src[line_begin - 1] != '\n') --line_begin;
    if (all_ws(std::string_view(src).substr(line_begin,
                                            comment.begin - line_begin))) {
        size_t end = comment.end;
        if (end < src.size() && src[end] == '\r') ++end;
        if (end < src.size() && src[end] == '\n') ++end;
        return {line_begin, end, ""};
    }
    size_t begin = comment.begin;
    while (begin > line_begin &&
           (src[begin - 1] == ' ' || src[begin - 1] == '\t'))
        --begin;
    return {begin, comment.end, ""};
}

std::string strip_comments(std::string_view source) {
    TokenStream ts = tokenize(source);
    std::vector<Edit> edits;
    for (const Token& t : ts.tokens) {
        if (t.type == TokType::Comment) edits.push_back(comment_edit(ts, t));
    }
    return apply_edits(source, std::move(edits));
}

void collect_docstring_edits(const AstNode& node, std::string_view src,
                             std::vector<Edit>& edits) {
    bool owns = node.kind == NodeKind::Module ||
                node.kind == NodeKind::FunctionDef ||
                node.kind == NodeKind::AsyncFunctionDef ||
                node.kind == NodeKind::ClassDef;
    if (owns) {
        size_t run = 0;
        while (run < node.body.size() &&
               is_string_constant_stmt(*node.body[run]))
            ++run;
        for (size_t k = 0; k < run; ++k) {
            const AstNode& stmt = *node.body[k];
            if (run == node.body.size() && k + 1 == run) {
                // removing it would empty the body; substitute a placeholder
                edits.push_back({stmt.begin, stmt.end, "pass"});
                continue;
            }
            size_t begin = stmt.begin;
            size_t end = stmt.end;
            size_t line_begin = begin;
            while (line_begin > 0 && src[line_begin - 1] != '\n') --line_begin;
            bool own_line = all_ws(src.substr(line_begin, begin - line_begin));

            // swallow padding and a statement separator after the string
            size_t probe = end;
            while (probe < src.size() &&
                   (src[probe] == ' ' || src[probe] == '\t'))
                ++probe;
            if (probe < src.size() && src[probe] == ';') {
                ++probe;
                while (probe < src.size() &&
                       (src[probe] == ' ' || src[probe] == '\t'))
                    ++probe;
                end = probe;
            } else if (own_line) {
                begin = line_begin;
                end = probe;
                if (end < src.size() && src[end] == '\r') ++end;
                if (end < src.size() && src[end] == '\n') ++end;
            }
            edits.push_back({begin, end, ""});
        }
    }
    for (const auto& c : node.body) collect_docstring_edits(*c, src, edits);
    for (const auto& c : node.orelse) collect_docstring_edits(*c, src, edits);
    for (const auto& c : node.handlers) collect_docstring_edits(*c, src, edits);
    for (const auto& c : node.finalbody)
        collect_docstring_edits(*c, src, edits);
    for (const auto& c : node.cases) collect_docstring_edits(*c, src, edits);
}

}  // namespace

std::string normalize_line_endings(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\r') {
            out += '\n';
            if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
        } else {
            out += raw[i];
        }
    }
    return out;
}

std::string strip_comments_and_docstrings(std::string_view source) {
    if (source.empty() || all_ws(source))
        throw NormalizationError("nothing to clean in empty input");
    std::string uncommented = strip_comments(source);
    AstPtr before = parse_module(uncommented);

    std::vector<Edit> edits;
    collect_docstring_edits(*before, uncommented, edits);
    std::string result = apply_edits(uncommented, std::move(edits));
    if (result.empty() || all_ws(result)) result = "pass\n";

    AstPtr after;
    try {
        after = parse_module(result);
    } catch (const ParseError& e) {
        throw NormalizationError(
            std::string("comment/docstring removal broke the code: ") +
            e.what());
    }
    DumpOptions skip;
    skip.skip_docstrings = true;
    if (dump_structure(*after) != dump_structure(*before, skip))
        throw NormalizationError(
            "comment/docstring removal changed the code structure");
    return result;
}

std::string apply_style(std::string_view source) {
    AstPtr before = parse_module(source);
    TokenStream ts = tokenize(source);

    // string-literal spans, for byte-level "is this inside a string" checks
    std::vector<std::pair<size_t, size_t>> strings;
    for (const Token& t : ts.tokens)
        if (t.type == TokType::String) strings.emplace_back(t.begin, t.end);
    auto in_string = [&](size_t byte) {
        for (const auto& [b, e] : strings) {
            if (b >= byte + 1) break;
            if (byte > b && byte < e) return true;
        }
        return false;
    };

    size_t last_content = 0;  // index of last line that is not blank
    std::vector<bool> blank_line(ts.lines.size(), false);
    for (size_t i = 0; i < ts.lines.size(); ++i) {
        const LineInfo& li = ts.lines[i];
        blank_line[i] = li.blank && !in_string(li.begin);
        if (!blank_line[i]) last_content = i;
    }

    std::string out;
    out.reserve(source.size());
    bool emitted_any = false;
    bool previous_blank = false;
    for (size_t i = 0; i < ts.lines.size(); ++i) {
        const LineInfo& li = ts.lines[i];
        std::string_view line = source.substr(li.begin, li.end - li.begin);

        if (in_string(li.begin)) {  // continuation of a multi-line string
            out.append(line);
            out += '\n';
            emitted_any = true;
            previous_blank = false;
            continue;
        }
        if (blank_line[i]) {
            if (emitted_any && !previous_blank && i < last_content) {
                out += '\n';
                previous_blank = true;
            }
            continue;
        }

        size_t lead = 0;
        while (lead < line.size() &&
               (line[lead] == ' ' || line[lead] == '\t' || line[lead] == '\f'))
            ++lead;
        std::string rebuilt;
        if (li.starts_logical) {
            rebuilt.assign(static_cast<size_t>(li.indent_level) * 4, ' ');
        } else {
            for (size_t k = 0; k < lead; ++k)
                if (line[k] == '\t')
                    rebuilt.append(4, ' ');
                else if (line[k] == ' ')
                    rebuilt += ' ';
            // form feeds are dropped
        }
        for (size_t k = lead; k < line.size(); ++k) {
            char c = line[k];
            if (c == '\t' && !in_string(li.begin + k))
                rebuilt += ' ';
            else
                rebuilt += c;
        }
        bool line_ends_in_string = in_string(li.end);
        if (!line_ends_in_string) {
            while (!rebuilt.empty() &&
                   (rebuilt.back() == ' ' || rebuilt.back() == '\t'))
                rebuilt.pop_back();
        }
        out.append(rebuilt);
        out += '\n';
        emitted_any = true;
        previous_blank = false;
    }
    while (out.size() >= 2 && out[out.size() - 1] == '\n' &&
           out[out.size() - 2] == '\n')
        out.pop_back();
    if (out.empty()) out = "pass\n";

    AstPtr after;
    try {
        after = parse_module(out);
    } catch (const ParseError& e) {
        throw NormalizationError(
            std::string("style pass broke the code: ") + e.what());
    }
    if (dump_structure(*after) != dump_structure(*before))
        throw NormalizationError("style pass changed the code structure");
    return out;
}

std::string normalize_code(std::string_view raw) {
    return apply_style(
        strip_comments_and_docstrings(normalize_line_endings(raw)));
}

std::string encode_sentinels(std::string_view normalized,
                             const FlowSymbols& symbols) {
    if (normalized.empty() || all_ws(normalized))
        throw NormalizationError("cannot encode empty code");
    if (normalized.find('\t') != std::string_view::npos)
        throw NormalizationError("cannot encode code containing tabs");
    if (normalized.find(symbols.indent) != std::string_view::npos ||
        normalized.find(symbols.newline) != std::string_view::npos)
        throw NormalizationError(
            "code already contains a sentinel sequence");

    std::string text(normalized);
    while (!text.empty() && text.back() == '\n') text.pop_back();
    text += '\n';

    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '\n') {
            out += symbols.newline;
            ++i;
        } else if (text.compare(i, 4, "    ") == 0) {
            out += symbols.indent;
            i += 4;
        } else {
            out += text[i];
            ++i;
        }
    }
    return out;
}

std::string decode_sentinels(std::string_view encoded,
                             const FlowSymbols& symbols) {
    std::string out;
    out.reserve(encoded.size());
    size_t i = 0;
    while (i < encoded.size()) {
        if (encoded.compare(i, symbols.newline.size(), symbols.newline) == 0) {
            out += '\n';
            i += symbols.newline.size();
        } else if (encoded.compare(i, symbols.indent.size(), symbols.indent) ==
                   0) {
            out += "    ";
            i += symbols.indent.size();
        } else {
            out += encoded[i];
            ++i;
        }
    }
    return out;
}

}  // namespace flowgen
