#include "flowgen/tokenizer.h"

#include <array>
#include <cstring>

#include "flowgen/errors.h"

namespace flowgen {

namespace {

bool is_name_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' ||
           c >= 0x80;
}

bool is_name_char(unsigned char c) {
    return is_name_start(c) || (c >= '0' && c <= '9');
}

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

bool is_hexish(unsigned char c) {
    return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F') ||
           c == '_';
}

bool is_string_prefix(std::string_view s) {
    if (s.size() > 2) return false;
    for (char c : s) {
        switch (c) {
            case 'r': case 'R': case 'b': case 'B':
            case 'u': case 'U': case 'f': case 'F':
                break;
            default:
                return false;
        }
    }
    return true;
}

// Multi-character operators, longest first.
constexpr std::array<const char*, 24> kLongOps = {
    "**=", "//=", ">>=", "<<=", "...",
    "**", "//", ">>", "<<", "<=", ">=", "==", "!=", "->", ":=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=",
};

class Tokenizer {
public:
    explicit Tokenizer(std::string_view src) : src_(src) {
        stream_.source = std::string(src);
        scan_lines();
    }

    TokenStream run() {
        indent_stack_.push_back(0);
        if (src_.substr(0, 3) == "\xEF\xBB\xBF") pos_ = 3;
        while (pos_ < src_.size()) {
            if (at_line_start_ && paren_depth_ == 0) {
                handle_line_start();
                continue;
            }
            if (!next_token()) break;
        }
        finish();
        return std::move(stream_);
    }

private:
    std::string_view src_;
    TokenStream stream_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 0;
    int paren_depth_ = 0;
    bool at_line_start_ = true;
    bool line_has_tokens_ = false;
    std::vector<int> indent_stack_;

    void scan_lines() {
        size_t begin = 0;
        bool blank = true;
        for (size_t i = 0; i <= src_.size(); ++i) {
            if (i == src_.size() || src_[i] == '\n') {
                if (i == src_.size() && begin == i) break;
                LineInfo info;
                info.begin = begin;
                info.end = i;
                info.blank = blank;
                stream_.lines.push_back(info);
                begin = i + 1;
                blank = true;
            } else if (src_[i] != ' ' && src_[i] != '\t' && src_[i] != '\f' &&
                       src_[i] != '\r') {
                blank = false;
            }
        }
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(line_, col_, msg);
    }

    unsigned char at(size_t i) const {
        return i < src_.size() ? static_cast<unsigned char>(src_[i]) : 0;
    }

    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 0;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void advance_n(size_t n) {
        for (size_t i = 0; i < n; ++i) advance();
    }

    Token& emit(TokType type, size_t begin, int bline, int bcol) {
        Token t;
        t.type = type;
        t.begin = begin;
        t.end = pos_;
        t.line = bline;
        t.col = bcol;
        t.end_line = line_;
        t.end_col = col_;
        stream_.tokens.push_back(t);
        return stream_.tokens.back();
    }

    Token& emit_here(TokType type) { return emit(type, pos_, line_, col_); }

    void consume_newline_token(TokType type) {
        size_t begin = pos_;
        int bline = line_, bcol = col_;
        if (at(pos_) == '\r') advance();
        if (at(pos_) == '\n') advance();
        emit(type, begin, bline, bcol);
    }

    // Measures indentation, emits INDENT/DEDENT, classifies blank and
    // comment-only lines.
    void handle_line_start() {
        size_t line_index = static_cast<size_t>(line_) - 1;
        int width = 0;
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == ' ') {
                ++width;
            } else if (c == '\t') {
                width = (width / 8 + 1) * 8;
            } else if (c == '\f') {
                width = 0;
            } else if (c == '\r' && at(pos_ + 1) == '\n') {
                // handled by the newline branch below
                break;
            } else {
                break;
            }
            advance();
        }
        if (pos_ >= src_.size()) return;
        char c = src_[pos_];
        if (c == '\n' || c == '\r') {
            consume_newline_token(TokType::Nl);
            return;
        }
        if (c == '#') {
            scan_comment();
            if (pos_ < src_.size()) consume_newline_token(TokType::Nl);
            return;
        }
        if (c == '\\' && (at(pos_ + 1) == '\n' ||
                          (at(pos_ + 1) == '\r' && at(pos_ + 2) == '\n'))) {
            // a continuation on an otherwise empty line keeps the logical
            // line open without fixing the indentation yet
            advance();
            if (src_[pos_] == '\r') advance();
            advance();
            return;
        }
        if (width > indent_stack_.back()) {
            indent_stack_.push_back(width);
            Token t;
            t.type = TokType::Indent;
            t.begin = stream_.lines.empty() ? 0 : stream_.lines[line_index].begin;
            t.end = pos_;
            t.line = line_;
            t.col = 0;
            t.end_line = line_;
            t.end_col = col_;
            stream_.tokens.push_back(t);
        } else {
            while (width < indent_stack_.back()) {
                indent_stack_.pop_back();
                Token t;
                t.type = TokType::Dedent;
                t.begin = pos_;
                t.end = pos_;
                t.line = line_;
                t.col = col_;
                t.end_line = line_;
                t.end_col = col_;
                stream_.tokens.push_back(t);
            }
            if (width != indent_stack_.back())
                fail("unindent does not match any outer indentation level");
        }
        if (line_index < stream_.lines.size()) {
            stream_.lines[line_index].starts_logical = true;
            stream_.lines[line_index].indent_level =
                static_cast<int>(indent_stack_.size()) - 1;
        }
        at_line_start_ = false;
        line_has_tokens_ = false;
    }

    void scan_comment() {
        size_t begin = pos_;
        int bline = line_, bcol = col_;
        while (pos_ < src_.size() && src_[pos_] != '\n') {
            if (src_[pos_] == '\r' && at(pos_ + 1) == '\n') break;
            advance();
        }
        emit(TokType::Comment, begin, bline, bcol);
    }

    // Returns false once the end marker has been reached.
    bool next_token() {
        while (pos_ < src_.size() &&
               (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\f')) {
            advance();
        }
        if (pos_ >= src_.size()) return false;
        char c = src_[pos_];

        if (c == '\n' || (c == '\r' && at(pos_ + 1) == '\n') || c == '\r') {
            if (paren_depth_ > 0) {
                consume_newline_token(TokType::Nl);
            } else if (line_has_tokens_) {
                consume_newline_token(TokType::Newline);
                at_line_start_ = true;
            } else {
                consume_newline_token(TokType::Nl);
                at_line_start_ = true;
            }
            return true;
        }
        if (c == '\\') {
            if (at(pos_ + 1) == '\n' ||
                (at(pos_ + 1) == '\r' && at(pos_ + 2) == '\n')) {
                advance();
                if (src_[pos_] == '\r') advance();
                advance();
                return true;
            }
            fail("unexpected character after line continuation character");
        }
        if (c == '#') {
            scan_comment();
            return true;
        }
        if (is_name_start(static_cast<unsigned char>(c))) {
            scan_name_or_prefixed_string();
            return true;
        }
        if (is_digit(static_cast<unsigned char>(c)) ||
            (c == '.' && is_digit(at(pos_ + 1)))) {
            scan_number();
            return true;
        }
        if (c == '\'' || c == '"') {
            scan_string(pos_);
            return true;
        }
        scan_operator();
        return true;
    }

    void scan_name_or_prefixed_string() {
        size_t begin = pos_;
        int bline = line_, bcol = col_;
        while (pos_ < src_.size() &&
               is_name_char(static_cast<unsigned char>(src_[pos_]))) {
            advance();
        }
        std::string_view name = src_.substr(begin, pos_ - begin);
        if ((at(pos_) == '\'' || at(pos_) == '"') && is_string_prefix(name)) {
            pos_ = begin;
            line_ = bline;
            col_ = bcol;
            scan_string(begin);
            return;
        }
        emit(TokType::Name, begin, bline, bcol);
        line_has_tokens_ = true;
    }

    void scan_string(size_t begin) {
        int bline = line_, bcol = col_;
        while (pos_ < src_.size() && src_[pos_] != '\'' && src_[pos_] != '"')
            advance();  // prefix letters
        if (pos_ >= src_.size()) fail("unterminated string literal");
        char quote = src_[pos_];
        bool triple = at(pos_ + 1) == quote && at(pos_ + 2) == quote;
        advance_n(triple ? 3 : 1);
        while (true) {
            if (pos_ >= src_.size())
                fail(triple ? "unterminated triple-quoted string literal"
                            : "unterminated string literal");
            char d = src_[pos_];
            if (d == '\\') {
                advance();
                if (pos_ < src_.size()) advance();
                continue;
            }
            if (d == '\n' && !triple)
                fail("EOL while scanning string literal");
            if (d == quote) {
                if (!triple) {
                    advance();
                    break;
                }
                if (at(pos_ + 1) == quote && at(pos_ + 2) == quote) {
                    advance_n(3);
                    break;
                }
            }
            advance();
        }
        emit(TokType::String, begin, bline, bcol);
        line_has_tokens_ = true;
    }

    void scan_number() {
        size_t begin = pos_;
        int bline = line_, bcol = bcol_snapshot();
        if (src_[pos_] == '0' &&
            (at(pos_ + 1) == 'x' || at(pos_ + 1) == 'X' || at(pos_ + 1) == 'o' ||
             at(pos_ + 1) == 'O' || at(pos_ + 1) == 'b' || at(pos_ + 1) == 'B')) {
            advance_n(2);
            while (pos_ < src_.size() &&
                   is_hexish(static_cast<unsigned char>(src_[pos_])))
                advance();
            emit(TokType::Number, begin, bline, bcol);
            line_has_tokens_ = true;
            return;
        }
        while (pos_ < src_.size() &&
               (is_digit(static_cast<unsigned char>(src_[pos_])) ||
                src_[pos_] == '_'))
            advance();
        if (at(pos_) == '.' && at(pos_ + 1) != '.') {
            advance();
            while (pos_ < src_.size() &&
                   (is_digit(static_cast<unsigned char>(src_[pos_])) ||
                    src_[pos_] == '_'))
                advance();
        }
        if ((at(pos_) == 'e' || at(pos_) == 'E')) {
            size_t look = pos_ + 1;
            if (at(look) == '+' || at(look) == '-') ++look;
            if (is_digit(at(look))) {
                advance();
                if (at(pos_) == '+' || at(pos_) == '-') advance();
                while (pos_ < src_.size() &&
                       (is_digit(static_cast<unsigned char>(src_[pos_])) ||
                        src_[pos_] == '_'))
                    advance();
            }
        }
        if (at(pos_) == 'j' || at(pos_) == 'J') advance();
        emit(TokType::Number, begin, bline, bcol);
        line_has_tokens_ = true;
    }

    int bcol_snapshot() const { return col_; }

    void scan_operator() {
        size_t begin = pos_;
        int bline = line_, bcol = col_;
        for (const char* op : kLongOps) {
            size_t len = std::strlen(op);
            if (len < 2) continue;
            if (src_.compare(pos_, len, op) == 0) {
                advance_n(len);
                emit(TokType::Op, begin, bline, bcol);
                line_has_tokens_ = true;
                return;
            }
        }
        char c = src_[pos_];
        static const char kSingles[] = "+-*/%@&|^~<>()[]{},:.;=";
        if (std::strchr(kSingles, c) != nullptr) {
            if (c == '(' || c == '[' || c == '{') ++paren_depth_;
            if (c == ')' || c == ']' || c == '}')
                paren_depth_ = paren_depth_ > 0 ? paren_depth_ - 1 : 0;
            advance();
            emit(TokType::Op, begin, bline, bcol);
            line_has_tokens_ = true;
            return;
        }
        fail(std::string("invalid character '") + c + "' in source");
    }

    void finish() {
        if (paren_depth_ > 0) fail("unexpected end of file inside brackets");
        if (line_has_tokens_ && !at_line_start_) {
            emit_here(TokType::Newline);
        }
        while (indent_stack_.size() > 1) {
            indent_stack_.pop_back();
            emit_here(TokType::Dedent);
        }
        emit_here(TokType::EndMarker);
    }
};

}  // namespace

TokenStream tokenize(std::string_view source) {
    return Tokenizer(source).run();
}

bool is_fstring_token(std::string_view text) {
    for (char c : text) {
        if (c == '\'' || c == '"') return false;
        if (c == 'f' || c == 'F') return true;
    }
    return false;
}

bool is_bytes_token(std::string_view text) {
    for (char c : text) {
        if (c == '\'' || c == '"') return false;
        if (c == 'b' || c == 'B') return true;
    }
    return false;
}

bool is_raw_token(std::string_view text) {
    for (char c : text) {
        if (c == '\'' || c == '"') return false;
        if (c == 'r' || c == 'R') return true;
    }
    return false;
}

StringParts split_string_token(std::string_view text) {
    size_t q = 0;
    while (q < text.size() && text[q] != '\'' && text[q] != '"') ++q;
    StringParts parts;
    parts.prefix = text.substr(0, q);
    bool triple = q + 2 < text.size() && text[q + 1] == text[q] &&
                  text[q + 2] == text[q];
    size_t qlen = triple ? 3 : 1;
    parts.quote = text.substr(q, qlen);
    size_t body_begin = q + qlen;
    size_t body_end = text.size() >= qlen ? text.size() - qlen : body_begin;
    if (body_end < body_begin) body_end = body_begin;
    parts.body = text.substr(body_begin, body_end - body_begin);
    return parts;
}

const char* tok_type_name(TokType t) {
    switch (t) {
        case TokType::EndMarker: return "ENDMARKER";
        case TokType::Newline: return "NEWLINE";
        case TokType::Nl: return "NL";
        case TokType::Indent: return "INDENT";
        case TokType::Dedent: return "DEDENT";
        case TokType::Name: return "NAME";
        case TokType::Number: return "NUMBER";
        case TokType::String: return "STRING";
        case TokType::Op: return "OP";
        case TokType::Comment: return "COMMENT";
    }
    return "?";
}

}  // namespace flowgen
