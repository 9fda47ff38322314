#pragma once

#include <string>
#include <string_view>

#include "flowgen/flow.h"

namespace flowgen {

// CRLF / lone-CR -> LF.
std::string normalize_line_endings(std::string_view raw);

// Removes every comment and every docstring (the leading run of
// string-constant expression statements of the module and of each def /
// class body).  A body or module that would end up empty receives a `pass`
// placeholder.  The result re-parses to the identical tree minus the removed
// nodes; a mismatch raises NormalizationError.  Idempotent.
std::string strip_comments_and_docstrings(std::string_view source);

// Canonical whitespace: every statement is reindented to four spaces per
// nesting level, tabs outside string literals are replaced (leading
// continuation tabs -> four spaces, inner tabs -> one space), trailing
// whitespace is removed, runs of blank lines collapse to a single one (none
// at the edges), and the file ends with exactly one newline.  Lines that
// begin inside a string literal are untouched.  Verified by re-parse; a
// structural change raises NormalizationError.
std::string apply_style(std::string_view source);

// Full cleaning pipeline: line endings, strip, style.
// Throws ParseError on unparseable input, NormalizationError when a
// rewrite cannot be performed safely.
std::string normalize_code(std::string_view raw);

// Replaces the newline with the row sentinel and each four-space indentation
// unit with the indent sentinel.  Input must be non-empty and free of tabs
// and of both sentinel sequences (NormalizationError otherwise); the
// trailing newline is normalized to exactly one before substitution.
// decode_sentinels is the exact inverse and leaves sentinel-free text alone.
std::string encode_sentinels(std::string_view normalized,
                             const FlowSymbols& symbols = {});
std::string decode_sentinels(std::string_view encoded,
                             const FlowSymbols& symbols = {});

}  // namespace flowgen
