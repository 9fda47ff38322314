#include "flowgen/walk.h"

namespace flowgen {

namespace {

void visit(const AstNode& stmt, int depth, int parent,
           std::vector<StatementRow>& rows) {
    rows.push_back({&stmt, depth, parent});
    int self = static_cast<int>(rows.size()) - 1;
    for (const auto& c : stmt.body) visit(*c, depth + 1, self, rows);
    for (const auto& c : stmt.handlers) visit(*c, depth + 1, self, rows);
    for (const auto& c : stmt.orelse) visit(*c, depth + 1, self, rows);
    for (const auto& c : stmt.finalbody) visit(*c, depth + 1, self, rows);
    for (const auto& c : stmt.cases) visit(*c, depth + 1, self, rows);
}

}  // namespace

std::vector<StatementRow> walk_statements(const AstNode& module) {
    std::vector<StatementRow> rows;
    for (const auto& stmt : module.body) visit(*stmt, 0, -1, rows);
    return rows;
}

}  // namespace flowgen
