#include "flowgen/ast.h"

#include <unordered_map>

#include "flowgen/tokenizer.h"

namespace flowgen {

namespace {

struct KindEntry {
    NodeKind kind;
    const char* name;
};

constexpr KindEntry kKindTable[] = {
    {NodeKind::Module, "Module"},
    {NodeKind::FunctionDef, "FunctionDef"},
    {NodeKind::AsyncFunctionDef, "AsyncFunctionDef"},
    {NodeKind::ClassDef, "ClassDef"},
    {NodeKind::Return, "Return"},
    {NodeKind::Delete, "Delete"},
    {NodeKind::Assign, "Assign"},
    {NodeKind::AugAssign, "AugAssign"},
    {NodeKind::AnnAssign, "AnnAssign"},
    {NodeKind::For, "For"},
    {NodeKind::AsyncFor, "AsyncFor"},
    {NodeKind::While, "While"},
    {NodeKind::If, "If"},
    {NodeKind::With, "With"},
    {NodeKind::AsyncWith, "AsyncWith"},
    {NodeKind::Match, "Match"},
    {NodeKind::Raise, "Raise"},
    {NodeKind::Try, "Try"},
    {NodeKind::Assert, "Assert"},
    {NodeKind::Import, "Import"},
    {NodeKind::ImportFrom, "ImportFrom"},
    {NodeKind::Global, "Global"},
    {NodeKind::Nonlocal, "Nonlocal"},
    {NodeKind::Expr, "Expr"},
    {NodeKind::Pass, "Pass"},
    {NodeKind::Break, "Break"},
    {NodeKind::Continue, "Continue"},
    {NodeKind::ExceptHandler, "ExceptHandler"},
    {NodeKind::MatchCase, "MatchCase"},
    {NodeKind::BoolOp, "BoolOp"},
    {NodeKind::NamedExpr, "NamedExpr"},
    {NodeKind::BinOp, "BinOp"},
    {NodeKind::UnaryOp, "UnaryOp"},
    {NodeKind::Lambda, "Lambda"},
    {NodeKind::IfExp, "IfExp"},
    {NodeKind::Dict, "Dict"},
    {NodeKind::Set, "Set"},
    {NodeKind::ListComp, "ListComp"},
    {NodeKind::SetComp, "SetComp"},
    {NodeKind::DictComp, "DictComp"},
    {NodeKind::GeneratorExp, "GeneratorExp"},
    {NodeKind::Await, "Await"},
    {NodeKind::Yield, "Yield"},
    {NodeKind::YieldFrom, "YieldFrom"},
    {NodeKind::Compare, "Compare"},
    {NodeKind::Call, "Call"},
    {NodeKind::FormattedValue, "FormattedValue"},
    {NodeKind::JoinedStr, "JoinedStr"},
    {NodeKind::Constant, "Constant"},
    {NodeKind::Attribute, "Attribute"},
    {NodeKind::Subscript, "Subscript"},
    {NodeKind::Starred, "Starred"},
    {NodeKind::Name, "Name"},
    {NodeKind::List, "List"},
    {NodeKind::Tuple, "Tuple"},
    {NodeKind::Slice, "Slice"},
    {NodeKind::Arguments, "arguments"},
    {NodeKind::Arg, "arg"},
    {NodeKind::Keyword, "keyword"},
    {NodeKind::Alias, "alias"},
    {NodeKind::Withitem, "withitem"},
    {NodeKind::Comprehension, "comprehension"},
    {NodeKind::MatchValue, "MatchValue"},
    {NodeKind::MatchSingleton, "MatchSingleton"},
    {NodeKind::MatchSequence, "MatchSequence"},
    {NodeKind::MatchMapping, "MatchMapping"},
    {NodeKind::MatchClass, "MatchClass"},
    {NodeKind::MatchStar, "MatchStar"},
    {NodeKind::MatchAs, "MatchAs"},
    {NodeKind::MatchOr, "MatchOr"},
};

bool owns_docstring(NodeKind kind) {
    return kind == NodeKind::Module || kind == NodeKind::FunctionDef ||
           kind == NodeKind::AsyncFunctionDef || kind == NodeKind::ClassDef;
}

void append_value(std::string& out, const std::string& value) {
    // netstring-style so arbitrary literal text can't be confused with the
    // surrounding structure
    out += std::to_string(value.size());
    out += ':';
    out += value;
}

void write_node(const AstNode& n, std::string& out, const DumpOptions& opt);

void write_list(const char* label,
                const std::vector<AstPtr>& nodes,
                size_t start,
                bool placeholder_pass,
                std::string& out,
                const DumpOptions& opt) {
    if (nodes.size() - start == 0 && !placeholder_pass) return;
    out += ' ';
    out += label;
    out += "=[";
    if (placeholder_pass) {
        out += "(Pass)";
    } else {
        for (size_t i = start; i < nodes.size(); ++i) {
            if (i > start) out += ' ';
            write_node(*nodes[i], out, opt);
        }
    }
    out += ']';
}

void write_node(const AstNode& n, std::string& out, const DumpOptions& opt) {
    out += '(';
    out += kind_name(n.kind);
    if (!n.name.empty()) {
        out += " name=";
        out += n.name;
    }
    if (!n.value.empty()) {
        out += " value=";
        append_value(out, n.value);
    }
    for (const auto& x : n.extra_names) {
        out += " xname=";
        out += x;
    }
    write_list("deco", n.decorators, 0, false, out, opt);
    write_list("e", n.exprs, 0, false, out, opt);

    size_t body_start = 0;
    bool placeholder = false;
    if (opt.skip_docstrings && owns_docstring(n.kind)) {
        while (body_start < n.body.size() &&
               is_string_constant_stmt(*n.body[body_start])) {
            ++body_start;
        }
        // A body emptied by the skip — or empty to begin with (a comment-only
        // module) — renders as the `pass` placeholder the stripper inserts.
        placeholder = body_start == n.body.size() &&
                      (body_start > 0 || n.body.empty());
    }
    write_list("body", n.body, body_start, placeholder, out, opt);
    write_list("orelse", n.orelse, 0, false, out, opt);
    write_list("handlers", n.handlers, 0, false, out, opt);
    write_list("final", n.finalbody, 0, false, out, opt);
    write_list("cases", n.cases, 0, false, out, opt);
    out += ')';
}

}  // namespace

const char* kind_name(NodeKind kind) {
    for (const auto& e : kKindTable) {
        if (e.kind == kind) return e.name;
    }
    return "?";
}

std::optional<NodeKind> kind_from_name(std::string_view name) {
    static const std::unordered_map<std::string_view, NodeKind> map = [] {
        std::unordered_map<std::string_view, NodeKind> m;
        for (const auto& e : kKindTable) m.emplace(e.name, e.kind);
        return m;
    }();
    auto it = map.find(name);
    if (it == map.end()) return std::nullopt;
    return it->second;
}

bool is_statement_kind(NodeKind kind) {
    return kind >= NodeKind::FunctionDef && kind <= NodeKind::Continue;
}

bool is_string_constant_stmt(const AstNode& node) {
    if (node.kind != NodeKind::Expr || node.exprs.size() != 1) return false;
    const AstNode& v = *node.exprs[0];
    if (v.kind != NodeKind::Constant || v.value.empty()) return false;
    // a docstring is a plain or raw str literal, never bytes / f-string /
    // number / True / ...
    size_t q = v.value.find_first_of("'\"");
    if (q == std::string::npos) return false;
    return !is_bytes_token(v.value);
}

std::string dump_structure(const AstNode& root, const DumpOptions& options) {
    std::string out;
    out.reserve(256);
    write_node(root, out, options);
    return out;
}

}  // namespace flowgen
