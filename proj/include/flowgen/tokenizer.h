#pragma once

#include <string>
#include <string_view>

#include "flowgen/token.h"

namespace flowgen {

// Tokenizes Python 3 source. Emits the classic INDENT/DEDENT stream with
// comments and non-logical newlines preserved as their own tokens so that
// the normalizer can do byte-exact surgery. Throws ParseError on lexical
// errors (unterminated string, bad indentation, stray characters).
TokenStream tokenize(std::string_view source);

// True for string tokens whose prefix contains 'f' or 'F'.
bool is_fstring_token(std::string_view text);
// True for string tokens whose prefix contains 'b' or 'B'.
bool is_bytes_token(std::string_view text);
// True for string tokens whose prefix contains 'r' or 'R'.
bool is_raw_token(std::string_view text);

// Splits a string token into (prefix, quote, body): for r"ab" the parts are
// ("r", "\"", "ab"). The quote is one or three characters.
struct StringParts {
    std::string_view prefix;
    std::string_view quote;
    std::string_view body;
};
StringParts split_string_token(std::string_view text);

}  // namespace flowgen
