#pragma once

#include <string_view>

#include "flowgen/ast.h"
#include "flowgen/flow.h"

namespace flowgen {

// Structural skeleton of the code: one row per statement carrying its depth,
// statement kind, the kinds of the statement's direct expression children in
// source order, and the names of built-ins invoked anywhere in those
// expressions (pre-order; calls through attributes contribute "Attribute").
Flow syntax_flow(const AstNode& module);

// Convenience: parse + extract + serialize.  Throws ParseError on bad input.
std::string syntax_flow_text(std::string_view source,
                             const FlowSymbols& symbols = {});

}  // namespace flowgen
