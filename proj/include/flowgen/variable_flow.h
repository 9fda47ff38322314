#pragma once

#include <string_view>
#include <vector>

#include "flowgen/ast.h"
#include "flowgen/builtins.h"
#include "flowgen/flow.h"

namespace flowgen {

// One read/write event for a user-defined name, in source order within a
// statement row.  Built-ins, keywords, attribute members and keyword-argument
// names never generate events.
struct NameEvent {
    std::string name;
    bool write = false;
    // Binding that only exists inside the statement's own body scope
    // (function parameters on a def row); the name written for the enclosing
    // scope (the function name itself) has this false.
    bool inner_scope = false;
};

struct RowAccess {
    std::vector<NameEvent> events;
};

// Per-row name events, aligned index-for-index with walk_statements(module).
std::vector<RowAccess> collect_row_accesses(
    const AstNode& module, const BuiltinList& builtins = BuiltinList::active());

// Variable flow: one row per statement with the user names it touches,
// first occurrence only, in source order.
Flow variable_flow(const AstNode& module,
                   const BuiltinList& builtins = BuiltinList::active());

// Convenience: parse + extract + serialize.  Throws ParseError on bad input.
std::string variable_flow_text(std::string_view source,
                               const FlowSymbols& symbols = {});

}  // namespace flowgen
