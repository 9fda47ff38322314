#pragma once

#include <string_view>

#include "flowgen/ast.h"
#include "flowgen/token.h"

namespace flowgen {

// Parses Python 3 source (3.10 grammar level: walrus, positional-only
// params, parenthesized context managers, match statements) into an AstNode
// tree.  Throws ParseError with a 1-based line and 0-based column on any
// input the grammar does not accept.
AstPtr parse_module(std::string_view source);

// Same, over an existing token stream (tokens index into stream.source).
AstPtr parse_tokens(const TokenStream& stream);

// True when the source parses cleanly; never throws.
bool parses(std::string_view source);

}  // namespace flowgen
