#pragma once

#include <vector>

#include "flowgen/ast.h"

namespace flowgen {

// One flow row per logical statement.  `depth` counts the statement-body
// lists enclosing the node (module level = 0).  `except` clauses and `case`
// arms occupy their own rows one level below their try / match statement,
// with their bodies one level below that.
struct StatementRow {
    const AstNode* node = nullptr;
    int depth = 0;
    int parent = -1;  // row index of the enclosing statement, -1 at top level
};

// Flattens the statement tree in source order.
std::vector<StatementRow> walk_statements(const AstNode& module);

}  // namespace flowgen
