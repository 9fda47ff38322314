#include "flowgen/syntax_flow.h"

#include "flowgen/builtins.h"
#include "flowgen/parser.h"
#include "flowgen/walk.h"

namespace flowgen {

namespace {

// Pre-order scan for calls below a statement's expression children.  A call
// whose callee is a Name naming a built-in contributes that name; a call
// through an attribute contributes "Attribute"; calls of user functions add
// nothing (their names belong to the variable flow).
void scan_calls(const AstNode& n, const BuiltinList& builtins,
                std::vector<std::string>& out) {
    if (n.kind == NodeKind::Call && !n.exprs.empty()) {
        const AstNode& callee = *n.exprs[0];
        if (callee.kind == NodeKind::Name && builtins.contains(callee.name)) {
            out.push_back(callee.name);
        } else if (callee.kind == NodeKind::Attribute) {
            out.emplace_back("Attribute");
        }
    }
    for (const auto& c : n.decorators) scan_calls(*c, builtins, out);
    for (const auto& c : n.exprs) scan_calls(*c, builtins, out);
}

}  // namespace

Flow syntax_flow(const AstNode& module) {
    const BuiltinList& builtins = BuiltinList::active();
    Flow flow;
    for (const StatementRow& sr : walk_statements(module)) {
        const AstNode& stmt = *sr.node;
        FlowRow row;
        row.depth = sr.depth;
        row.tags.emplace_back(kind_name(stmt.kind));
        for (const auto& d : stmt.decorators)
            row.tags.emplace_back(kind_name(d->kind));
        for (const auto& e : stmt.exprs)
            row.tags.emplace_back(kind_name(e->kind));
        for (const auto& d : stmt.decorators) scan_calls(*d, builtins, row.tags);
        for (const auto& e : stmt.exprs) scan_calls(*e, builtins, row.tags);
        flow.rows.push_back(std::move(row));
    }
    return flow;
}

std::string syntax_flow_text(std::string_view source,
                             const FlowSymbols& symbols) {
    AstPtr module = parse_module(source);
    return serialize_flow(syntax_flow(*module), symbols);
}

}  // namespace flowgen
