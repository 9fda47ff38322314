#include "flowgen/variable_flow.h"

#include <unordered_set>

#include "flowgen/parser.h"
#include "flowgen/walk.h"

namespace flowgen {

namespace {

enum class Mode { Read, Write, ReadWrite };

std::string root_segment(std::string_view dotted) {
    size_t p = 0;
    while (p < dotted.size() && dotted[p] == '.') ++p;  // relative imports
    size_t dot = dotted.find('.', p);
    return std::string(dotted.substr(p, dot == std::string_view::npos
                                            ? std::string_view::npos
                                            : dot - p));
}

class Collector {
public:
    Collector(const BuiltinList& builtins, std::vector<NameEvent>& out)
        : builtins_(builtins), out_(out) {}

    void statement(const AstNode& stmt) {
        switch (stmt.kind) {
            case NodeKind::FunctionDef:
            case NodeKind::AsyncFunctionDef: {
                for (const auto& d : stmt.decorators) expr(*d, Mode::Read);
                emit(stmt.name, Mode::Write, false);
                bool first = true;
                for (const auto& e : stmt.exprs) {
                    if (first && e->kind == NodeKind::Arguments) {
                        inner_params_ = true;
                        expr(*e, Mode::Read);
                        inner_params_ = false;
                    } else {
                        expr(*e, Mode::Read);  // return annotation
                    }
                    first = false;
                }
                return;
            }
            case NodeKind::ClassDef:
                for (const auto& d : stmt.decorators) expr(*d, Mode::Read);
                emit(stmt.name, Mode::Write, false);
                for (const auto& e : stmt.exprs) expr(*e, Mode::Read);
                return;
            case NodeKind::Assign: {
                for (size_t k = 0; k + 1 < stmt.exprs.size(); ++k)
                    expr(*stmt.exprs[k], Mode::Write);
                if (!stmt.exprs.empty())
                    expr(*stmt.exprs.back(), Mode::Read);
                return;
            }
            case NodeKind::AugAssign:
                expr(*stmt.exprs[0], Mode::ReadWrite);
                expr(*stmt.exprs[1], Mode::Read);
                return;
            case NodeKind::AnnAssign:
                expr(*stmt.exprs[0], Mode::Write);
                for (size_t k = 1; k < stmt.exprs.size(); ++k)
                    expr(*stmt.exprs[k], Mode::Read);
                return;
            case NodeKind::For:
            case NodeKind::AsyncFor:
                expr(*stmt.exprs[0], Mode::Write);
                expr(*stmt.exprs[1], Mode::Read);
                return;
            case NodeKind::Import:
                for (const auto& a : stmt.exprs) alias(*a, false);
                return;
            case NodeKind::ImportFrom: {
                std::string mod_root = root_segment(stmt.value);
                if (!mod_root.empty()) emit(mod_root, Mode::Read, false);
                for (const auto& a : stmt.exprs) alias(*a, true);
                return;
            }
            case NodeKind::Global:
            case NodeKind::Nonlocal:
                for (const auto& nm : stmt.extra_names)
                    emit(nm, Mode::Read, false);
                return;
            case NodeKind::ExceptHandler:
                for (const auto& e : stmt.exprs) expr(*e, Mode::Read);
                if (!stmt.name.empty()) emit(stmt.name, Mode::Write, false);
                return;
            case NodeKind::MatchCase:
                if (!stmt.exprs.empty()) pattern(*stmt.exprs[0]);
                for (size_t k = 1; k < stmt.exprs.size(); ++k)
                    expr(*stmt.exprs[k], Mode::Read);  // guard
                return;
            case NodeKind::Delete:
            default:
                // everything else only reads its expressions (tests,
                // returned values, subjects, with-items handle their own
                // targets below)
                for (const auto& e : stmt.exprs) expr(*e, Mode::Read);
                return;
        }
    }

private:
    const BuiltinList& builtins_;
    std::vector<NameEvent>& out_;
    bool inner_params_ = false;

    void emit(const std::string& name, Mode mode, bool inner) {
        if (name.empty()) return;
        if (builtins_.contains(name) || is_python_keyword(name)) return;
        if (mode == Mode::Read || mode == Mode::ReadWrite)
            out_.push_back({name, false, false});
        if (mode == Mode::Write || mode == Mode::ReadWrite)
            out_.push_back({name, true, inner});
    }

    void alias(const AstNode& a, bool from_import) {
        if (a.value == "*") return;
        std::string bound = a.name.empty()
                                ? (from_import ? a.value : root_segment(a.value))
                                : a.name;
        if (!a.name.empty()) {
            // "import a.b as c" / "from m import x as y": the pre-alias name
            // is referenced, the alias is bound
            std::string ref = from_import ? a.value : root_segment(a.value);
            emit(ref, Mode::Read, false);
        }
        emit(bound, Mode::Write, false);
    }

    void expr(const AstNode& n, Mode mode) {
        switch (n.kind) {
            case NodeKind::Name:
                emit(n.name, mode, false);
                return;
            case NodeKind::Attribute:
            case NodeKind::Subscript:
                // mutating a member or element reads the container
                for (const auto& c : n.exprs) expr(*c, Mode::Read);
                return;
            case NodeKind::Tuple:
            case NodeKind::List:
            case NodeKind::Starred:
                for (const auto& c : n.exprs) expr(*c, mode);
                return;
            case NodeKind::Keyword:
                for (const auto& c : n.exprs) expr(*c, Mode::Read);
                return;
            case NodeKind::Arg:
                emit(n.name, Mode::Write, inner_params_);
                for (const auto& c : n.exprs) expr(*c, Mode::Read);
                return;
            case NodeKind::Lambda: {
                bool saved = inner_params_;
                inner_params_ = false;
                for (const auto& c : n.exprs) expr(*c, Mode::Read);
                inner_params_ = saved;
                return;
            }
            case NodeKind::NamedExpr:
                expr(*n.exprs[0], Mode::Write);
                expr(*n.exprs[1], Mode::Read);
                return;
            case NodeKind::Comprehension:
                expr(*n.exprs[0], Mode::Write);
                for (size_t k = 1; k < n.exprs.size(); ++k)
                    expr(*n.exprs[k], Mode::Read);
                return;
            case NodeKind::Withitem:
                expr(*n.exprs[0], Mode::Read);
                if (n.exprs.size() > 1) expr(*n.exprs[1], Mode::Write);
                return;
            case NodeKind::Alias:
                alias(n, false);  // defensive; imports are handled per
                return;           // statement
            case NodeKind::MatchValue:
            case NodeKind::MatchSingleton:
            case NodeKind::MatchSequence:
            case NodeKind::MatchMapping:
            case NodeKind::MatchClass:
            case NodeKind::MatchStar:
            case NodeKind::MatchAs:
            case NodeKind::MatchOr:
                pattern(n);
                return;
            case NodeKind::Constant:
                return;
            default:
                for (const auto& c : n.exprs) expr(*c, mode == Mode::Write
                                                           ? Mode::Read
                                                           : mode);
                return;
        }
    }

    void pattern(const AstNode& p) {
        switch (p.kind) {
            case NodeKind::MatchValue:
            case NodeKind::MatchClass:
                // the matched value / class is an ordinary reference; nested
                // patterns may capture
                if (p.kind == NodeKind::MatchClass && !p.exprs.empty()) {
                    expr(*p.exprs[0], Mode::Read);
                    for (size_t k = 1; k < p.exprs.size(); ++k)
                        pattern(*p.exprs[k]);
                } else {
                    for (const auto& c : p.exprs) expr(*c, Mode::Read);
                }
                return;
            case NodeKind::MatchAs:
                for (const auto& c : p.exprs) pattern(*c);
                if (!p.name.empty()) emit(p.name, Mode::Write, false);
                return;
            case NodeKind::MatchStar:
                if (!p.name.empty()) emit(p.name, Mode::Write, false);
                return;
            case NodeKind::MatchMapping: {
                // keys alternate with value patterns
                for (size_t k = 0; k < p.exprs.size(); ++k) {
                    if (k % 2 == 0) {
                        expr(*p.exprs[k], Mode::Read);
                    } else {
                        pattern(*p.exprs[k]);
                    }
                }
                if (!p.name.empty()) emit(p.name, Mode::Write, false);
                return;
            }
            case NodeKind::MatchSingleton:
                return;
            default:  // MatchSequence / MatchOr
                for (const auto& c : p.exprs) pattern(*c);
                return;
        }
    }
};

}  // namespace

std::vector<RowAccess> collect_row_accesses(const AstNode& module,
                                            const BuiltinList& builtins) {
    std::vector<RowAccess> out;
    for (const StatementRow& sr : walk_statements(module)) {
        RowAccess access;
        Collector collector(builtins, access.events);
        collector.statement(*sr.node);
        out.push_back(std::move(access));
    }
    return out;
}

Flow variable_flow(const AstNode& module, const BuiltinList& builtins) {
    std::vector<StatementRow> rows = walk_statements(module);
    std::vector<RowAccess> accesses = collect_row_accesses(module, builtins);
    Flow flow;
    for (size_t r = 0; r < rows.size(); ++r) {
        FlowRow row;
        row.depth = rows[r].depth;
        std::unordered_set<std::string_view> seen;
        for (const NameEvent& ev : accesses[r].events) {
            if (seen.insert(ev.name).second) row.tags.push_back(ev.name);
        }
        flow.rows.push_back(std::move(row));
    }
    return flow;
}

std::string variable_flow_text(std::string_view source,
                               const FlowSymbols& symbols) {
    AstPtr module = parse_module(source);
    return serialize_flow(variable_flow(*module), symbols);
}

}  // namespace flowgen
