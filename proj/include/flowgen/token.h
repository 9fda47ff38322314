#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace flowgen {

enum class TokType : uint8_t {
    EndMarker,
    Newline,  // end of a logical line
    Nl,       // non-logical newline (blank line, comment line, inside brackets)
    Indent,
    Dedent,
    Name,
    Number,
    String,
    Op,
    Comment,
};

struct Token {
    TokType type = TokType::EndMarker;
    size_t begin = 0;  // byte offset into the source
    size_t end = 0;    // one past the last byte
    int line = 0;      // 1-based physical line of the first byte
    int col = 0;       // 0-based byte column
    int end_line = 0;
    int end_col = 0;

    std::string_view text(std::string_view source) const {
        return source.substr(begin, end - begin);
    }
};

// Per-physical-line facts collected while tokenizing; the style pass keys
// its edits off this table.
struct LineInfo {
    size_t begin = 0;          // byte offset of the line start
    size_t end = 0;            // offset of the terminating '\n' (or EOF)
    bool starts_logical = false;  // first token of a logical line sits here
    int indent_level = 0;      // block nesting level when starts_logical
    bool blank = false;        // only whitespace
};

struct TokenStream {
    std::string source;  // the exact text the offsets refer to
    std::vector<Token> tokens;
    std::vector<LineInfo> lines;  // index 0 = physical line 1

    std::string_view text_of(const Token& t) const { return t.text(source); }
};

const char* tok_type_name(TokType t);

}  // namespace flowgen
