#include "flowgen/parser.h"

#include <functional>
#include <unordered_set>

#include "flowgen/errors.h"
#include "flowgen/tokenizer.h"

namespace flowgen {

namespace {

const std::unordered_set<std::string_view>& hard_keywords() {
    static const std::unordered_set<std::string_view> kw = {
        "and", "as", "assert", "async", "await", "break", "class", "continue",
        "def", "del", "elif", "else", "except", "finally", "for", "from",
        "global", "if", "import", "in", "is", "lambda", "nonlocal", "not",
        "or", "pass", "raise", "return", "try", "while", "with", "yield",
    };
    return kw;
}

bool can_start_expression_keyword(std::string_view word) {
    return word == "not" || word == "lambda" || word == "await" ||
           word == "yield";
}

class Parser {
public:
    explicit Parser(const TokenStream& ts) : ts_(ts) {
        sig_.reserve(ts.tokens.size());
        for (size_t k = 0; k < ts.tokens.size(); ++k) {
            TokType t = ts.tokens[k].type;
            if (t == TokType::Comment || t == TokType::Nl) continue;
            sig_.push_back(k);
        }
    }

    AstPtr parse() {
        AstPtr mod = make(NodeKind::Module);
        while (!at_type(TokType::EndMarker)) {
            if (at_type(TokType::Indent)) fail("unexpected indent");
            if (at_type(TokType::Newline)) {  // defensive; blank lines are NL
                ++i_;
                continue;
            }
            parse_statement_into(mod->body);
        }
        close(*mod);
        return mod;
    }

private:
    const TokenStream& ts_;
    std::vector<size_t> sig_;
    size_t i_ = 0;

    // ---- token access -------------------------------------------------

    const Token& tok(size_t off = 0) const {
        size_t k = i_ + off;
        if (k >= sig_.size()) k = sig_.size() - 1;  // EndMarker
        return ts_.tokens[sig_[k]];
    }

    std::string_view text(size_t off = 0) const {
        return ts_.text_of(tok(off));
    }

    bool at_type(TokType t, size_t off = 0) const { return tok(off).type == t; }

    bool at_op(std::string_view s, size_t off = 0) const {
        return tok(off).type == TokType::Op && text(off) == s;
    }

    bool at_word(std::string_view s, size_t off = 0) const {
        return tok(off).type == TokType::Name && text(off) == s;
    }

    void advance() {
        if (i_ + 1 < sig_.size()) ++i_;
    }

    bool accept_op(std::string_view s) {
        if (!at_op(s)) return false;
        advance();
        return true;
    }

    bool accept_word(std::string_view s) {
        if (!at_word(s)) return false;
        advance();
        return true;
    }

    void expect_op(std::string_view s) {
        if (!accept_op(s))
            fail("expected '" + std::string(s) + "', found '" +
                 describe_current() + "'");
    }

    void expect_word(std::string_view s) {
        if (!accept_word(s))
            fail("expected '" + std::string(s) + "', found '" +
                 describe_current() + "'");
    }

    void expect_type(TokType t, const char* what) {
        if (!at_type(t))
            fail(std::string("expected ") + what + ", found '" +
                 describe_current() + "'");
        advance();
    }

    std::string describe_current() const {
        const Token& t = tok();
        if (t.type == TokType::EndMarker) return "end of input";
        if (t.type == TokType::Newline) return "end of line";
        if (t.type == TokType::Indent) return "indent";
        if (t.type == TokType::Dedent) return "dedent";
        return std::string(text());
    }

    [[noreturn]] void fail(const std::string& msg) const {
        const Token& t = tok();
        throw ParseError(t.line, t.col, msg);
    }

    // ---- node helpers --------------------------------------------------

    AstPtr make(NodeKind kind) const {
        const Token& t = tok();
        auto n = std::make_unique<AstNode>();
        n->kind = kind;
        n->line = t.line;
        n->col = t.col;
        n->end_line = t.end_line;
        n->end_col = t.end_col;
        n->begin = t.begin;
        n->end = t.end;
        return n;
    }

    void close(AstNode& n) const {
        // End at the last real token: layout tokens (newline, indent,
        // dedent) trailing a suite sit on the following line and would
        // overshoot the span.
        size_t k = i_;
        while (k > 0) {
            const Token& p = ts_.tokens[sig_[k - 1]];
            if (p.type == TokType::Newline || p.type == TokType::Indent ||
                p.type == TokType::Dedent) {
                --k;
                continue;
            }
            n.end = p.end;
            n.end_line = p.end_line;
            n.end_col = p.end_col;
            return;
        }
        const Token& p = tok();
        n.end = p.end;
        n.end_line = p.end_line;
        n.end_col = p.end_col;
    }

    void span_from(AstNode& n, const AstNode& first) const {
        n.line = first.line;
        n.col = first.col;
        n.begin = first.begin;
    }

    void start_at(AstNode& n, const Token& t) const {
        n.line = t.line;
        n.col = t.col;
        n.begin = t.begin;
    }

    // ---- predicates ----------------------------------------------------

    bool starts_expression(size_t off = 0) const {
        const Token& t = tok(off);
        switch (t.type) {
            case TokType::Number:
            case TokType::String:
                return true;
            case TokType::Name: {
                std::string_view w = text(off);
                return !hard_keywords().count(w) ||
                       can_start_expression_keyword(w);
            }
            case TokType::Op: {
                std::string_view w = text(off);
                return w == "(" || w == "[" || w == "{" || w == "*" ||
                       w == "**" || w == "-" || w == "+" || w == "~" ||
                       w == "...";
            }
            default:
                return false;
        }
    }

    bool at_augassign() const {
        if (!at_type(TokType::Op)) return false;
        std::string_view w = text();
        return w == "+=" || w == "-=" || w == "*=" || w == "/=" ||
               w == "//=" || w == "%=" || w == "@=" || w == "&=" ||
               w == "|=" || w == "^=" || w == ">>=" || w == "<<=" ||
               w == "**=";
    }

    // ---- statements ----------------------------------------------------

    void parse_statement_into(std::vector<AstPtr>& out) {
        if (at_word("if")) { out.push_back(parse_if()); return; }
        if (at_word("while")) { out.push_back(parse_while()); return; }
        if (at_word("for")) { out.push_back(parse_for(false)); return; }
        if (at_word("try")) { out.push_back(parse_try()); return; }
        if (at_word("with")) { out.push_back(parse_with(false)); return; }
        if (at_word("def")) { out.push_back(parse_def(false, {})); return; }
        if (at_word("class")) { out.push_back(parse_class({})); return; }
        if (at_op("@")) { out.push_back(parse_decorated()); return; }
        if (at_word("async")) { out.push_back(parse_async({})); return; }
        if (at_word("match")) {
            if (AstPtr m = try_parse_match()) {
                out.push_back(std::move(m));
                return;
            }
        }
        parse_simple_line_into(out);
    }

    AstPtr parse_decorated() {
        std::vector<AstPtr> decorators;
        while (accept_op("@")) {
            decorators.push_back(parse_namedexpr());
            expect_type(TokType::Newline, "end of line after decorator");
        }
        if (at_word("def")) return parse_def(false, std::move(decorators));
        if (at_word("class")) return parse_class(std::move(decorators));
        if (at_word("async")) return parse_async(std::move(decorators));
        fail("expected a function or class definition after decorators");
    }

    AstPtr parse_async(std::vector<AstPtr> decorators) {
        AstPtr marker = make(NodeKind::Pass);  // position only
        expect_word("async");
        if (at_word("def")) {
            AstPtr n = parse_def(true, std::move(decorators));
            span_from(*n, *marker);
            return n;
        }
        if (at_word("for")) {
            AstPtr n = parse_for(true);
            span_from(*n, *marker);
            return n;
        }
        if (at_word("with")) {
            AstPtr n = parse_with(true);
            span_from(*n, *marker);
            return n;
        }
        fail("expected 'def', 'for' or 'with' after 'async'");
    }

    void parse_simple_line_into(std::vector<AstPtr>& out) {
        while (true) {
            out.push_back(parse_simple_stmt());
            if (accept_op(";")) {
                if (at_type(TokType::Newline)) {
                    advance();
                    break;
                }
                if (at_type(TokType::EndMarker)) break;
                continue;
            }
            expect_type(TokType::Newline, "end of line");
            break;
        }
    }

    AstPtr parse_simple_stmt() {
        if (at_word("return")) return parse_return();
        if (at_word("pass")) return parse_bare(NodeKind::Pass);
        if (at_word("break")) return parse_bare(NodeKind::Break);
        if (at_word("continue")) return parse_bare(NodeKind::Continue);
        if (at_word("raise")) return parse_raise();
        if (at_word("global")) return parse_scope_decl(NodeKind::Global);
        if (at_word("nonlocal")) return parse_scope_decl(NodeKind::Nonlocal);
        if (at_word("del")) return parse_del();
        if (at_word("assert")) return parse_assert();
        if (at_word("import")) return parse_import();
        if (at_word("from")) return parse_import_from();
        return parse_expr_stmt();
    }

    AstPtr parse_bare(NodeKind kind) {
        AstPtr n = make(kind);
        advance();
        close(*n);
        return n;
    }

    AstPtr parse_return() {
        AstPtr n = make(NodeKind::Return);
        expect_word("return");
        if (starts_expression()) n->exprs.push_back(parse_star_expressions());
        close(*n);
        return n;
    }

    AstPtr parse_raise() {
        AstPtr n = make(NodeKind::Raise);
        expect_word("raise");
        if (starts_expression()) {
            n->exprs.push_back(parse_test());
            if (accept_word("from")) n->exprs.push_back(parse_test());
        }
        close(*n);
        return n;
    }

    AstPtr parse_scope_decl(NodeKind kind) {
        AstPtr n = make(kind);
        advance();  // global / nonlocal
        do {
            if (!at_type(TokType::Name)) fail("expected a name");
            n->extra_names.emplace_back(text());
            advance();
        } while (accept_op(","));
        close(*n);
        return n;
    }

    AstPtr parse_del() {
        AstPtr n = make(NodeKind::Delete);
        expect_word("del");
        n->exprs.push_back(parse_target());
        while (accept_op(",")) {
            if (!starts_expression()) break;
            n->exprs.push_back(parse_target());
        }
        close(*n);
        return n;
    }

    AstPtr parse_assert() {
        AstPtr n = make(NodeKind::Assert);
        expect_word("assert");
        n->exprs.push_back(parse_test());
        if (accept_op(",")) n->exprs.push_back(parse_test());
        close(*n);
        return n;
    }

    std::string parse_dotted_name() {
        if (!at_type(TokType::Name)) fail("expected a module name");
        std::string path(text());
        advance();
        while (at_op(".") && at_type(TokType::Name, 1)) {
            advance();
            path += '.';
            path += text();
            advance();
        }
        return path;
    }

    AstPtr parse_alias(bool dotted) {
        AstPtr a = make(NodeKind::Alias);
        if (dotted) {
            a->value = parse_dotted_name();
        } else {
            if (at_op("*")) {
                a->value = "*";
                advance();
            } else {
                if (!at_type(TokType::Name)) fail("expected a name to import");
                a->value = std::string(text());
                advance();
            }
        }
        if (a->value != "*" && accept_word("as")) {
            if (!at_type(TokType::Name)) fail("expected a name after 'as'");
            a->name = std::string(text());
            advance();
        }
        close(*a);
        return a;
    }

    AstPtr parse_import() {
        AstPtr n = make(NodeKind::Import);
        expect_word("import");
        n->exprs.push_back(parse_alias(true));
        while (accept_op(",")) n->exprs.push_back(parse_alias(true));
        close(*n);
        return n;
    }

    AstPtr parse_import_from() {
        AstPtr n = make(NodeKind::ImportFrom);
        expect_word("from");
        std::string module;
        while (at_op(".") || at_op("...")) {
            module += text();
            advance();
        }
        if (at_type(TokType::Name) && !at_word("import")) {
            module += parse_dotted_name();
        }
        if (module.empty()) fail("expected a module name after 'from'");
        n->value = module;
        expect_word("import");
        if (accept_op("(")) {
            n->exprs.push_back(parse_alias(false));
            while (accept_op(",")) {
                if (at_op(")")) break;
                n->exprs.push_back(parse_alias(false));
            }
            expect_op(")");
        } else {
            n->exprs.push_back(parse_alias(false));
            while (accept_op(",")) n->exprs.push_back(parse_alias(false));
        }
        close(*n);
        return n;
    }

    AstPtr parse_expr_stmt() {
        // capture the first token so grouping parens are inside the span
        const Token& start = tok();
        AstPtr first = parse_star_expressions();
        if (at_op(":") && !at_op(":=")) {
            AstPtr n = std::make_unique<AstNode>();
            n->kind = NodeKind::AnnAssign;
            start_at(*n, start);
            advance();  // :
            n->exprs.push_back(std::move(first));
            n->exprs.push_back(parse_test());
            if (accept_op("=")) n->exprs.push_back(parse_assign_value());
            close(*n);
            return n;
        }
        if (at_augassign()) {
            AstPtr n = std::make_unique<AstNode>();
            n->kind = NodeKind::AugAssign;
            start_at(*n, start);
            n->value = std::string(text());
            advance();
            n->exprs.push_back(std::move(first));
            n->exprs.push_back(parse_assign_value());
            close(*n);
            return n;
        }
        if (at_op("=")) {
            AstPtr n = std::make_unique<AstNode>();
            n->kind = NodeKind::Assign;
            start_at(*n, start);
            n->exprs.push_back(std::move(first));
            while (accept_op("=")) n->exprs.push_back(parse_assign_value());
            close(*n);
            return n;
        }
        AstPtr n = std::make_unique<AstNode>();
        n->kind = NodeKind::Expr;
        start_at(*n, start);
        n->exprs.push_back(std::move(first));
        close(*n);
        return n;
    }

    AstPtr parse_assign_value() {
        if (at_word("yield")) return parse_yield();
        return parse_star_expressions();
    }

    // ---- suites ----------------------------------------------------------

    void parse_block_into(std::vector<AstPtr>& out) {
        expect_op(":");
        if (at_type(TokType::Newline)) {
            advance();
            expect_type(TokType::Indent, "an indented block");
            while (!at_type(TokType::Dedent)) {
                if (at_type(TokType::EndMarker))
                    fail("expected a dedent to close the block");
                parse_statement_into(out);
            }
            advance();  // dedent
        } else {
            parse_simple_line_into(out);
        }
        if (out.empty()) fail("expected at least one statement in block");
    }

    AstPtr parse_if() {
        AstPtr n = make(NodeKind::If);
        expect_word("if");
        n->exprs.push_back(parse_namedexpr());
        parse_block_into(n->body);
        parse_if_tail(*n);
        close(*n);
        return n;
    }

    void parse_if_tail(AstNode& n) {
        if (at_word("elif")) {
            AstPtr nested = make(NodeKind::If);
            advance();
            nested->exprs.push_back(parse_namedexpr());
            parse_block_into(nested->body);
            parse_if_tail(*nested);
            close(*nested);
            n.orelse.push_back(std::move(nested));
        } else if (accept_word("else")) {
            parse_block_into(n.orelse);
        }
    }

    AstPtr parse_while() {
        AstPtr n = make(NodeKind::While);
        expect_word("while");
        n->exprs.push_back(parse_namedexpr());
        parse_block_into(n->body);
        if (accept_word("else")) parse_block_into(n->orelse);
        close(*n);
        return n;
    }

    AstPtr parse_for(bool is_async) {
        AstPtr n = make(is_async ? NodeKind::AsyncFor : NodeKind::For);
        expect_word("for");
        n->exprs.push_back(parse_target_list());
        expect_word("in");
        n->exprs.push_back(parse_star_expressions());
        parse_block_into(n->body);
        if (accept_word("else")) parse_block_into(n->orelse);
        close(*n);
        return n;
    }

    AstPtr parse_try() {
        AstPtr n = make(NodeKind::Try);
        expect_word("try");
        parse_block_into(n->body);
        while (at_word("except")) {
            AstPtr h = make(NodeKind::ExceptHandler);
            advance();
            if (!at_op(":")) {
                h->exprs.push_back(parse_test());
                if (accept_word("as")) {
                    if (!at_type(TokType::Name))
                        fail("expected a name after 'as'");
                    h->name = std::string(text());
                    advance();
                }
            }
            parse_block_into(h->body);
            close(*h);
            n->handlers.push_back(std::move(h));
        }
        if (at_word("else")) {
            if (n->handlers.empty())
                fail("'else' requires at least one 'except' clause");
            advance();
            parse_block_into(n->orelse);
        }
        if (accept_word("finally")) parse_block_into(n->finalbody);
        if (n->handlers.empty() && n->finalbody.empty())
            fail("expected 'except' or 'finally' after 'try' block");
        close(*n);
        return n;
    }

    AstPtr parse_withitem() {
        AstPtr w = make(NodeKind::Withitem);
        w->exprs.push_back(parse_test());
        if (accept_word("as")) w->exprs.push_back(parse_target());
        close(*w);
        return w;
    }

    AstPtr parse_with(bool is_async) {
        AstPtr n = make(is_async ? NodeKind::AsyncWith : NodeKind::With);
        expect_word("with");
        if (at_op("(")) {
            // 3.10 allows the item list to be parenthesized; this collides
            // with an ordinary parenthesized expression, so try the item
            // form and fall back on failure
            size_t mark = i_;
            bool ok = true;
            std::vector<AstPtr> items;
            try {
                advance();  // (
                items.push_back(parse_withitem());
                bool saw_as = items.back()->exprs.size() == 2;
                while (accept_op(",")) {
                    if (at_op(")")) break;
                    items.push_back(parse_withitem());
                    if (items.back()->exprs.size() == 2) saw_as = true;
                }
                expect_op(")");
                if (!at_op(":")) ok = false;
                // without any 'as' the source is also a valid tuple /
                // grouped expression; prefer the expression reading there
                // only when the list has a single item
                if (items.size() == 1 && !saw_as) ok = false;
            } catch (const ParseError&) {
                ok = false;
            }
            if (ok) {
                for (auto& it : items) n->exprs.push_back(std::move(it));
                parse_block_into(n->body);
                close(*n);
                return n;
            }
            i_ = mark;
        }
        n->exprs.push_back(parse_withitem());
        while (accept_op(",")) n->exprs.push_back(parse_withitem());
        parse_block_into(n->body);
        close(*n);
        return n;
    }

    AstPtr parse_params(bool parenthesized, bool annotations) {
        AstPtr args = make(NodeKind::Arguments);
        auto at_end = [&] {
            return parenthesized ? at_op(")") : at_op(":");
        };
        while (!at_end()) {
            if (accept_op("/")) {
                args->extra_names.emplace_back("/");
            } else if (at_op("*") || at_op("**")) {
                std::string marker(text());
                advance();
                if (marker == "*" && !at_type(TokType::Name)) {
                    args->extra_names.emplace_back("*");
                } else {
                    if (!at_type(TokType::Name))
                        fail("expected a parameter name");
                    AstPtr p = make(NodeKind::Arg);
                    p->name = std::string(text());
                    p->value = marker;
                    advance();
                    if (annotations && accept_op(":"))
                        p->exprs.push_back(parse_test());
                    close(*p);
                    args->exprs.push_back(std::move(p));
                }
            } else {
                if (!at_type(TokType::Name) ||
                    (hard_keywords().count(text()) != 0))
                    fail("expected a parameter name");
                AstPtr p = make(NodeKind::Arg);
                p->name = std::string(text());
                advance();
                if (annotations && accept_op(":"))
                    p->exprs.push_back(parse_test());
                close(*p);
                args->exprs.push_back(std::move(p));
                if (accept_op("="))
                    args->exprs.push_back(parse_test());
            }
            if (!accept_op(",")) break;
        }
        close(*args);
        return args;
    }

    AstPtr parse_def(bool is_async, std::vector<AstPtr> decorators) {
        AstPtr n =
            make(is_async ? NodeKind::AsyncFunctionDef : NodeKind::FunctionDef);
        n->decorators = std::move(decorators);
        if (!n->decorators.empty()) span_from(*n, *n->decorators.front());
        expect_word("def");
        if (!at_type(TokType::Name)) fail("expected a function name");
        n->name = std::string(text());
        advance();
        expect_op("(");
        n->exprs.push_back(parse_params(true, true));
        expect_op(")");
        if (accept_op("->")) n->exprs.push_back(parse_test());
        parse_block_into(n->body);
        close(*n);
        return n;
    }

    AstPtr parse_class(std::vector<AstPtr> decorators) {
        AstPtr n = make(NodeKind::ClassDef);
        n->decorators = std::move(decorators);
        if (!n->decorators.empty()) span_from(*n, *n->decorators.front());
        expect_word("class");
        if (!at_type(TokType::Name)) fail("expected a class name");
        n->name = std::string(text());
        advance();
        if (accept_op("(")) parse_call_args_into(*n);
        parse_block_into(n->body);
        close(*n);
        return n;
    }

    // ---- match statements -------------------------------------------------

    AstPtr try_parse_match() {
        size_t mark = i_;
        try {
            AstPtr n = make(NodeKind::Match);
            expect_word("match");
            if (!starts_expression()) {
                i_ = mark;
                return nullptr;
            }
            n->exprs.push_back(parse_star_expressions());
            if (!at_op(":")) {
                i_ = mark;
                return nullptr;
            }
            advance();
            expect_type(TokType::Newline, "end of line after 'match ...:'");
            expect_type(TokType::Indent, "an indented case block");
            while (at_word("case")) {
                AstPtr c = make(NodeKind::MatchCase);
                advance();
                c->exprs.push_back(parse_open_pattern());
                if (accept_word("if")) c->exprs.push_back(parse_namedexpr());
                parse_block_into(c->body);
                close(*c);
                n->cases.push_back(std::move(c));
            }
            if (n->cases.empty()) {
                i_ = mark;
                return nullptr;
            }
            expect_type(TokType::Dedent, "a dedent after the case blocks");
            close(*n);
            return n;
        } catch (const ParseError&) {
            i_ = mark;
            return nullptr;
        }
    }

    AstPtr parse_open_pattern() {
        AstPtr first = parse_pattern();
        if (!at_op(",")) return first;
        AstPtr seq = std::make_unique<AstNode>();
        seq->kind = NodeKind::MatchSequence;
        span_from(*seq, *first);
        seq->exprs.push_back(std::move(first));
        while (accept_op(",")) {
            if (at_op(":") || at_word("if")) break;
            seq->exprs.push_back(parse_pattern());
        }
        close(*seq);
        return seq;
    }

    AstPtr parse_pattern() {
        AstPtr p = parse_or_pattern();
        if (accept_word("as")) {
            AstPtr as = std::make_unique<AstNode>();
            as->kind = NodeKind::MatchAs;
            span_from(*as, *p);
            as->exprs.push_back(std::move(p));
            if (!at_type(TokType::Name)) fail("expected a capture name");
            as->name = std::string(text());
            advance();
            close(*as);
            return as;
        }
        return p;
    }

    AstPtr parse_or_pattern() {
        AstPtr first = parse_closed_pattern();
        if (!at_op("|")) return first;
        AstPtr n = std::make_unique<AstNode>();
        n->kind = NodeKind::MatchOr;
        span_from(*n, *first);
        n->exprs.push_back(std::move(first));
        while (accept_op("|")) n->exprs.push_back(parse_closed_pattern());
        close(*n);
        return n;
    }

    AstPtr parse_closed_pattern() {
        if (at_op("(")) {
            advance();
            if (at_op(")")) {
                AstPtr n = make(NodeKind::MatchSequence);
                advance();
                close(*n);
                return n;
            }
            AstPtr inner = parse_pattern();
            if (at_op(",")) {
                AstPtr seq = std::make_unique<AstNode>();
                seq->kind = NodeKind::MatchSequence;
                span_from(*seq, *inner);
                seq->exprs.push_back(std::move(inner));
                while (accept_op(",")) {
                    if (at_op(")")) break;
                    seq->exprs.push_back(parse_pattern());
                }
                expect_op(")");
                close(*seq);
                return seq;
            }
            expect_op(")");
            return inner;
        }
        if (at_op("[")) {
            AstPtr seq = make(NodeKind::MatchSequence);
            advance();
            while (!at_op("]")) {
                seq->exprs.push_back(parse_pattern());
                if (!accept_op(",")) break;
            }
            expect_op("]");
            close(*seq);
            return seq;
        }
        if (at_op("{")) return parse_mapping_pattern();
        if (at_op("*")) {
            AstPtr n = make(NodeKind::MatchStar);
            advance();
            if (!at_type(TokType::Name)) fail("expected a name after '*'");
            n->name = std::string(text());
            advance();
            close(*n);
            return n;
        }
        if (at_word("None") || at_word("True") || at_word("False")) {
            AstPtr n = make(NodeKind::MatchSingleton);
            n->value = std::string(text());
            advance();
            close(*n);
            return n;
        }
        if (at_type(TokType::Number) || at_type(TokType::String) ||
            at_op("-")) {
            AstPtr n = make(NodeKind::MatchValue);
            n->exprs.push_back(parse_literal_pattern_value());
            close(*n);
            return n;
        }
        if (at_type(TokType::Name)) {
            if (hard_keywords().count(text()))
                fail("keyword cannot appear in a pattern");
            if (!at_op(".", 1) && !at_op("(", 1)) {
                AstPtr n = make(NodeKind::MatchAs);
                if (text() != "_") n->name = std::string(text());  // _ = wildcard
                advance();
                close(*n);
                return n;
            }
            AstPtr v = parse_dotted_value();
            if (at_op("(")) return parse_class_pattern(std::move(v));
            AstPtr n = std::make_unique<AstNode>();
            n->kind = NodeKind::MatchValue;
            span_from(*n, *v);
            n->exprs.push_back(std::move(v));
            close(*n);
            return n;
        }
        fail("expected a pattern");
    }

    // number / string / signed and complex numbers, as a Constant carrying
    // the literal source text
    AstPtr parse_literal_pattern_value() {
        AstPtr n = make(NodeKind::Constant);
        size_t begin = tok().begin;
        if (at_op("-")) advance();
        if (at_type(TokType::Number)) {
            advance();
            if ((at_op("+") || at_op("-")) && at_type(TokType::Number, 1)) {
                advance();
                advance();
            }
        } else if (at_type(TokType::String)) {
            while (at_type(TokType::String)) advance();
        } else {
            fail("expected a literal pattern");
        }
        close(*n);
        n->value = ts_.source.substr(begin, n->end - begin);
        return n;
    }

    AstPtr parse_dotted_value() {
        AstPtr n = make(NodeKind::Name);
        n->name = std::string(text());
        advance();
        close(*n);
        while (at_op(".") && at_type(TokType::Name, 1)) {
            advance();
            AstPtr attr = std::make_unique<AstNode>();
            attr->kind = NodeKind::Attribute;
            span_from(*attr, *n);
            attr->name = std::string(text());
            advance();
            attr->exprs.push_back(std::move(n));
            close(*attr);
            n = std::move(attr);
        }
        return n;
    }

    AstPtr parse_class_pattern(AstPtr cls) {
        AstPtr n = std::make_unique<AstNode>();
        n->kind = NodeKind::MatchClass;
        span_from(*n, *cls);
        n->exprs.push_back(std::move(cls));
        expect_op("(");
        while (!at_op(")")) {
            if (at_type(TokType::Name) && at_op("=", 1)) {
                n->extra_names.emplace_back(text());
                advance();
                advance();
                n->exprs.push_back(parse_pattern());
            } else {
                n->exprs.push_back(parse_pattern());
            }
            if (!accept_op(",")) break;
        }
        expect_op(")");
        close(*n);
        return n;
    }

    AstPtr parse_mapping_pattern() {
        AstPtr n = make(NodeKind::MatchMapping);
        expect_op("{");
        while (!at_op("}")) {
            if (accept_op("**")) {
                if (!at_type(TokType::Name))
                    fail("expected a name after '**'");
                n->name = std::string(text());
                advance();
            } else {
                if (at_type(TokType::Name) && !hard_keywords().count(text())) {
                    n->exprs.push_back(parse_dotted_value());
                } else {
                    n->exprs.push_back(parse_literal_pattern_value());
                }
                expect_op(":");
                n->exprs.push_back(parse_pattern());
            }
            if (!accept_op(",")) break;
        }
        expect_op("}");
        close(*n);
        return n;
    }

    // ---- assignment / loop targets ----------------------------------------

    bool starts_target() const {
        return at_type(TokType::Name) || at_op("(") || at_op("[") || at_op("*");
    }

    AstPtr parse_target_list() {
        AstPtr first = parse_target();
        if (!at_op(",")) return first;
        AstPtr t = std::make_unique<AstNode>();
        t->kind = NodeKind::Tuple;
        span_from(*t, *first);
        t->exprs.push_back(std::move(first));
        while (accept_op(",")) {
            if (!starts_target()) break;
            t->exprs.push_back(parse_target());
        }
        close(*t);
        return t;
    }

    AstPtr parse_target() {
        if (at_op("*")) {
            AstPtr n = make(NodeKind::Starred);
            advance();
            n->exprs.push_back(parse_target());
            close(*n);
            return n;
        }
        if (at_op("(")) {
            advance();
            AstPtr inner = parse_target_list();
            expect_op(")");
            return inner;
        }
        if (at_op("[")) {
            AstPtr n = make(NodeKind::List);
            advance();
            while (!at_op("]")) {
                n->exprs.push_back(parse_target());
                if (!accept_op(",")) break;
            }
            expect_op("]");
            close(*n);
            return n;
        }
        return parse_primary();
    }

    // ---- expressions -------------------------------------------------------

    AstPtr parse_star_expressions() {
        AstPtr first = parse_star_expression();
        if (!at_op(",")) return first;
        AstPtr t = std::make_unique<AstNode>();
        t->kind = NodeKind::Tuple;
        span_from(*t, *first);
        t->exprs.push_back(std::move(first));
        while (accept_op(",")) {
            if (!starts_expression()) break;
            t->exprs.push_back(parse_star_expression());
        }
        close(*t);
        return t;
    }

    AstPtr parse_star_expression() {
        if (at_op("*")) {
            AstPtr n = make(NodeKind::Starred);
            advance();
            n->exprs.push_back(parse_bitor());
            close(*n);
            return n;
        }
        return parse_namedexpr();
    }

    AstPtr parse_namedexpr() {
        if (at_type(TokType::Name) && at_op(":=", 1) &&
            !hard_keywords().count(text())) {
            AstPtr n = make(NodeKind::NamedExpr);
            AstPtr target = make(NodeKind::Name);
            target->name = std::string(text());
            advance();
            close(*target);
            advance();  // :=
            n->exprs.push_back(std::move(target));
            n->exprs.push_back(parse_test());
            close(*n);
            return n;
        }
        return parse_test();
    }

    AstPtr parse_test() {
        if (at_word("lambda")) return parse_lambda();
        AstPtr body = parse_or_test();
        if (!at_word("if")) return body;
        AstPtr n = std::make_unique<AstNode>();
        n->kind = NodeKind::IfExp;
        span_from(*n, *body);
        advance();  // if
        n->exprs.push_back(std::move(body));
        n->exprs.push_back(parse_or_test());
        expect_word("else");
        n->exprs.push_back(parse_test());
        close(*n);
        return n;
    }

    AstPtr parse_lambda() {
        AstPtr n = make(NodeKind::Lambda);
        expect_word("lambda");
        n->exprs.push_back(parse_params(false, false));
        expect_op(":");
        n->exprs.push_back(parse_test());
        close(*n);
        return n;
    }

    AstPtr parse_or_test() {
        AstPtr first = parse_and_test();
        if (!at_word("or")) return first;
        AstPtr n = std::make_unique<AstNode>();
        n->kind = NodeKind::BoolOp;
        n->value = "or";
        span_from(*n, *first);
        n->exprs.push_back(std::move(first));
        while (accept_word("or")) n->exprs.push_back(parse_and_test());
        close(*n);
        return n;
    }

    AstPtr parse_and_test() {
        AstPtr first = parse_not_test();
        if (!at_word("and")) return first;
        AstPtr n = std::make_unique<AstNode>();
        n->kind = NodeKind::BoolOp;
        n->value = "and";
        span_from(*n, *first);
        n->exprs.push_back(std::move(first));
        while (accept_word("and")) n->exprs.push_back(parse_not_test());
        close(*n);
        return n;
    }

    AstPtr parse_not_test() {
        if (at_word("not")) {
            AstPtr n = make(NodeKind::UnaryOp);
            n->value = "not";
            advance();
            n->exprs.push_back(parse_not_test());
            close(*n);
            return n;
        }
        return parse_comparison();
    }

    bool at_comparison_op() const {
        if (at_word("in") || at_word("is")) return true;
        if (at_word("not") && at_word("in", 1)) return true;
        if (!at_type(TokType::Op)) return false;
        std::string_view w = text();
        return w == "<" || w == ">" || w == "<=" || w == ">=" || w == "==" ||
               w == "!=";
    }

    AstPtr parse_comparison() {
        AstPtr left = parse_bitor();
        if (!at_comparison_op()) return left;
        AstPtr n = std::make_unique<AstNode>();
        n->kind = NodeKind::Compare;
        span_from(*n, *left);
        n->exprs.push_back(std::move(left));
        std::string ops;
        while (at_comparison_op()) {
            std::string op(text());
            advance();
            if (op == "not") {
                expect_word("in");
                op = "not in";
            } else if (op == "is" && accept_word("not")) {
                op = "is not";
            }
            if (!ops.empty()) ops += ' ';
            ops += op;
            n->exprs.push_back(parse_bitor());
        }
        n->value = std::move(ops);
        close(*n);
        return n;
    }

    using SubParser = AstPtr (Parser::*)();

    AstPtr parse_binop_chain(SubParser sub,
                             std::initializer_list<std::string_view> ops) {
        AstPtr left = (this->*sub)();
        while (true) {
            bool matched = false;
            for (std::string_view op : ops) {
                if (at_op(op)) {
                    AstPtr n = std::make_unique<AstNode>();
                    n->kind = NodeKind::BinOp;
                    n->value = std::string(op);
                    span_from(*n, *left);
                    advance();
                    n->exprs.push_back(std::move(left));
                    n->exprs.push_back((this->*sub)());
                    close(*n);
                    left = std::move(n);
                    matched = true;
                    break;
                }
            }
            if (!matched) return left;
        }
    }

    AstPtr parse_bitor() {
        return parse_binop_chain(&Parser::parse_bitxor, {"|"});
    }
    AstPtr parse_bitxor() {
        return parse_binop_chain(&Parser::parse_bitand, {"^"});
    }
    AstPtr parse_bitand() {
        return parse_binop_chain(&Parser::parse_shift, {"&"});
    }
    AstPtr parse_shift() {
        return parse_binop_chain(&Parser::parse_arith, {"<<", ">>"});
    }
    AstPtr parse_arith() {
        return parse_binop_chain(&Parser::parse_term, {"+", "-"});
    }
    AstPtr parse_term() {
        return parse_binop_chain(&Parser::parse_factor,
                                 {"*", "/", "//", "%", "@"});
    }

    AstPtr parse_factor() {
        if (at_op("+") || at_op("-") || at_op("~")) {
            AstPtr n = make(NodeKind::UnaryOp);
            n->value = std::string(text());
            advance();
            n->exprs.push_back(parse_factor());
            close(*n);
            return n;
        }
        return parse_power();
    }

    AstPtr parse_power() {
        AstPtr base = parse_await_primary();
        if (!at_op("**")) return base;
        AstPtr n = std::make_unique<AstNode>();
        n->kind = NodeKind::BinOp;
        n->value = "**";
        span_from(*n, *base);
        advance();
        n->exprs.push_back(std::move(base));
        n->exprs.push_back(parse_factor());
        close(*n);
        return n;
    }

    AstPtr parse_await_primary() {
        if (at_word("await")) {
            AstPtr n = make(NodeKind::Await);
            advance();
            n->exprs.push_back(parse_await_primary());
            close(*n);
            return n;
        }
        return parse_primary();
    }

    AstPtr parse_primary() {
        AstPtr node = parse_atom();
        while (true) {
            if (at_op("(")) {
                AstPtr call = std::make_unique<AstNode>();
                call->kind = NodeKind::Call;
                span_from(*call, *node);
                call->exprs.push_back(std::move(node));
                advance();
                parse_call_args_into(*call);
                close(*call);
                node = std::move(call);
            } else if (at_op("[")) {
                AstPtr sub = std::make_unique<AstNode>();
                sub->kind = NodeKind::Subscript;
                span_from(*sub, *node);
                sub->exprs.push_back(std::move(node));
                advance();
                sub->exprs.push_back(parse_subscript_list());
                expect_op("]");
                close(*sub);
                node = std::move(sub);
            } else if (at_op(".") && at_type(TokType::Name, 1)) {
                AstPtr attr = std::make_unique<AstNode>();
                attr->kind = NodeKind::Attribute;
                span_from(*attr, *node);
                attr->exprs.push_back(std::move(node));
                advance();
                attr->name = std::string(text());
                advance();
                close(*attr);
                node = std::move(attr);
            } else {
                return node;
            }
        }
    }

    // caller consumed '('; consumes the matching ')'
    void parse_call_args_into(AstNode& call) {
        while (!at_op(")")) {
            if (at_op("*")) {
                AstPtr n = make(NodeKind::Starred);
                advance();
                n->exprs.push_back(parse_test());
                close(*n);
                call.exprs.push_back(std::move(n));
            } else if (at_op("**")) {
                AstPtr n = make(NodeKind::Keyword);
                advance();
                n->exprs.push_back(parse_test());
                close(*n);
                call.exprs.push_back(std::move(n));
            } else if (at_type(TokType::Name) && at_op("=", 1) &&
                       !hard_keywords().count(text())) {
                AstPtr n = make(NodeKind::Keyword);
                n->name = std::string(text());
                advance();
                advance();
                n->exprs.push_back(parse_test());
                close(*n);
                call.exprs.push_back(std::move(n));
            } else {
                AstPtr e = parse_namedexpr();
                if (at_word("for") || (at_word("async") && at_word("for", 1))) {
                    AstPtr gen = std::make_unique<AstNode>();
                    gen->kind = NodeKind::GeneratorExp;
                    span_from(*gen, *e);
                    gen->exprs.push_back(std::move(e));
                    parse_comprehensions_into(*gen);
                    close(*gen);
                    e = std::move(gen);
                }
                call.exprs.push_back(std::move(e));
            }
            if (!accept_op(",")) break;
        }
        expect_op(")");
    }

    AstPtr parse_subscript_list() {
        AstPtr first = parse_subscript_item();
        if (!at_op(",")) return first;
        AstPtr t = std::make_unique<AstNode>();
        t->kind = NodeKind::Tuple;
        span_from(*t, *first);
        t->exprs.push_back(std::move(first));
        while (accept_op(",")) {
            if (at_op("]")) break;
            t->exprs.push_back(parse_subscript_item());
        }
        close(*t);
        return t;
    }

    AstPtr parse_subscript_item() {
        AstPtr lower;
        if (!at_op(":")) {
            if (at_op("*")) {
                AstPtr n = make(NodeKind::Starred);
                advance();
                n->exprs.push_back(parse_test());
                close(*n);
                return n;
            }
            lower = parse_namedexpr();
            if (!at_op(":")) return lower;
        }
        AstPtr s = std::make_unique<AstNode>();
        s->kind = NodeKind::Slice;
        if (lower) {
            span_from(*s, *lower);
        } else {
            const Token& t = tok();
            s->line = t.line;
            s->col = t.col;
            s->begin = t.begin;
        }
        std::string mask;
        mask += lower ? '1' : '0';
        if (lower) s->exprs.push_back(std::move(lower));
        expect_op(":");
        if (!at_op(":") && !at_op("]") && !at_op(",")) {
            s->exprs.push_back(parse_test());
            mask += '1';
        } else {
            mask += '0';
        }
        if (accept_op(":")) {
            if (!at_op("]") && !at_op(",")) {
                s->exprs.push_back(parse_test());
                mask += '1';
            } else {
                mask += '0';
            }
        } else {
            mask += '0';
        }
        s->value = std::move(mask);
        close(*s);
        return s;
    }

    void parse_comprehensions_into(AstNode& owner) {
        while (at_word("for") || (at_word("async") && at_word("for", 1))) {
            AstPtr c = make(NodeKind::Comprehension);
            if (accept_word("async")) c->value = "async";
            expect_word("for");
            c->exprs.push_back(parse_target_list());
            expect_word("in");
            c->exprs.push_back(parse_or_test());
            while (at_word("if")) {
                advance();
                c->exprs.push_back(parse_comp_condition());
            }
            close(*c);
            owner.exprs.push_back(std::move(c));
        }
    }

    AstPtr parse_comp_condition() {
        // condition of a comprehension: no ternary, walrus allowed
        if (at_type(TokType::Name) && at_op(":=", 1) &&
            !hard_keywords().count(text())) {
            AstPtr n = make(NodeKind::NamedExpr);
            AstPtr target = make(NodeKind::Name);
            target->name = std::string(text());
            advance();
            close(*target);
            advance();
            n->exprs.push_back(std::move(target));
            n->exprs.push_back(parse_test());
            close(*n);
            return n;
        }
        return parse_or_test();
    }

    AstPtr parse_yield() {
        AstPtr n = make(NodeKind::Yield);
        expect_word("yield");
        if (accept_word("from")) {
            n->kind = NodeKind::YieldFrom;
            n->exprs.push_back(parse_test());
        } else if (starts_expression()) {
            n->exprs.push_back(parse_star_expressions());
        }
        close(*n);
        return n;
    }

    AstPtr parse_atom() {
        const Token& t = tok();
        switch (t.type) {
            case TokType::Number: {
                AstPtr n = make(NodeKind::Constant);
                n->value = std::string(text());
                advance();
                close(*n);
                return n;
            }
            case TokType::String:
                return parse_string_run();
            case TokType::Name: {
                std::string_view w = text();
                if (w == "True" || w == "False" || w == "None") {
                    AstPtr n = make(NodeKind::Constant);
                    n->value = std::string(w);
                    advance();
                    close(*n);
                    return n;
                }
                if (w == "lambda") return parse_lambda();
                if (w == "not") return parse_not_test();
                if (w == "await") return parse_await_primary();
                if (w == "yield") return parse_yield();
                if (hard_keywords().count(w))
                    fail("unexpected keyword '" + std::string(w) + "'");
                AstPtr n = make(NodeKind::Name);
                n->name = std::string(w);
                advance();
                close(*n);
                return n;
            }
            case TokType::Op: {
                std::string_view w = text();
                if (w == "(") return parse_paren_atom();
                if (w == "[") return parse_list_atom();
                if (w == "{") return parse_braced_atom();
                if (w == "...") {
                    AstPtr n = make(NodeKind::Constant);
                    n->value = "...";
                    advance();
                    close(*n);
                    return n;
                }
                fail("unexpected token '" + std::string(w) + "'");
            }
            default:
                fail("expected an expression, found '" + describe_current() +
                     "'");
        }
    }

    AstPtr parse_paren_atom() {
        AstPtr span = make(NodeKind::Tuple);
        expect_op("(");
        if (at_op(")")) {
            advance();
            close(*span);
            return span;  // empty tuple
        }
        if (at_word("yield")) {
            AstPtr y = parse_yield();
            expect_op(")");
            return y;
        }
        AstPtr first = parse_star_expression();
        if (at_word("for") || (at_word("async") && at_word("for", 1))) {
            AstPtr gen = std::make_unique<AstNode>();
            gen->kind = NodeKind::GeneratorExp;
            span_from(*gen, *span);
            gen->exprs.push_back(std::move(first));
            parse_comprehensions_into(*gen);
            expect_op(")");
            close(*gen);
            return gen;
        }
        if (at_op(",")) {
            span->exprs.push_back(std::move(first));
            while (accept_op(",")) {
                if (at_op(")")) break;
                span->exprs.push_back(parse_star_expression());
            }
            expect_op(")");
            close(*span);
            return span;
        }
        expect_op(")");
        return first;  // grouping parens
    }

    AstPtr parse_list_atom() {
        AstPtr n = make(NodeKind::List);
        expect_op("[");
        if (at_op("]")) {
            advance();
            close(*n);
            return n;
        }
        AstPtr first = parse_star_expression();
        if (at_word("for") || (at_word("async") && at_word("for", 1))) {
            n->kind = NodeKind::ListComp;
            n->exprs.push_back(std::move(first));
            parse_comprehensions_into(*n);
            expect_op("]");
            close(*n);
            return n;
        }
        n->exprs.push_back(std::move(first));
        while (accept_op(",")) {
            if (at_op("]")) break;
            n->exprs.push_back(parse_star_expression());
        }
        expect_op("]");
        close(*n);
        return n;
    }

    AstPtr parse_braced_atom() {
        AstPtr n = make(NodeKind::Dict);
        expect_op("{");
        if (at_op("}")) {
            advance();
            close(*n);
            return n;
        }
        if (at_op("**")) {
            parse_dict_items_into(*n);
            expect_op("}");
            close(*n);
            return n;
        }
        AstPtr first = parse_star_expression();
        if (at_op(":")) {
            advance();
            AstPtr val = parse_test();
            if (at_word("for") || (at_word("async") && at_word("for", 1))) {
                n->kind = NodeKind::DictComp;
                n->exprs.push_back(std::move(first));
                n->exprs.push_back(std::move(val));
                parse_comprehensions_into(*n);
                expect_op("}");
                close(*n);
                return n;
            }
            n->exprs.push_back(std::move(first));
            n->exprs.push_back(std::move(val));
            if (accept_op(",")) parse_dict_items_into(*n);
            expect_op("}");
            close(*n);
            return n;
        }
        // set literal or set comprehension
        n->kind = NodeKind::Set;
        if (at_word("for") || (at_word("async") && at_word("for", 1))) {
            n->kind = NodeKind::SetComp;
            n->exprs.push_back(std::move(first));
            parse_comprehensions_into(*n);
            expect_op("}");
            close(*n);
            return n;
        }
        n->exprs.push_back(std::move(first));
        while (accept_op(",")) {
            if (at_op("}")) break;
            n->exprs.push_back(parse_star_expression());
        }
        expect_op("}");
        close(*n);
        return n;
    }

    void parse_dict_items_into(AstNode& dict) {
        while (!at_op("}")) {
            if (at_op("**")) {
                AstPtr kw = make(NodeKind::Keyword);
                advance();
                kw->exprs.push_back(parse_bitor());
                close(*kw);
                dict.exprs.push_back(std::move(kw));
            } else {
                dict.exprs.push_back(parse_test());
                expect_op(":");
                dict.exprs.push_back(parse_test());
            }
            if (!accept_op(",")) break;
        }
    }

    // ---- strings and f-strings ---------------------------------------------

    AstPtr parse_string_run() {
        size_t first = i_;
        bool any_fstring = false;
        while (at_type(TokType::String)) {
            if (is_fstring_token(text())) any_fstring = true;
            advance();
        }
        size_t last = i_ - 1;
        const Token& ft = ts_.tokens[sig_[first]];
        const Token& lt = ts_.tokens[sig_[last]];
        if (!any_fstring) {
            auto n = std::make_unique<AstNode>();
            n->kind = NodeKind::Constant;
            n->line = ft.line;
            n->col = ft.col;
            n->begin = ft.begin;
            n->end = lt.end;
            n->end_line = lt.end_line;
            n->end_col = lt.end_col;
            n->value = ts_.source.substr(ft.begin, lt.end - ft.begin);
            return n;
        }
        auto n = std::make_unique<AstNode>();
        n->kind = NodeKind::JoinedStr;
        n->line = ft.line;
        n->col = ft.col;
        n->begin = ft.begin;
        n->end = lt.end;
        n->end_line = lt.end_line;
        n->end_col = lt.end_col;
        for (size_t k = first; k <= last; ++k) {
            const Token& t = ts_.tokens[sig_[k]];
            std::string_view piece = ts_.text_of(t);
            if (is_fstring_token(piece)) {
                parse_fstring_parts(piece, t, *n);
            } else {
                auto part = std::make_unique<AstNode>();
                part->kind = NodeKind::Constant;
                part->value = std::string(piece);
                set_span(*part, t);
                n->exprs.push_back(std::move(part));
            }
        }
        return n;
    }

    static void set_span(AstNode& n, const Token& t) {
        n.line = t.line;
        n.col = t.col;
        n.end_line = t.end_line;
        n.end_col = t.end_col;
        n.begin = t.begin;
        n.end = t.end;
    }

    static void set_span_recursive(AstNode& n, const Token& t) {
        set_span(n, t);
        for (auto& c : n.decorators) set_span_recursive(*c, t);
        for (auto& c : n.exprs) set_span_recursive(*c, t);
        for (auto& c : n.body) set_span_recursive(*c, t);
        for (auto& c : n.orelse) set_span_recursive(*c, t);
        for (auto& c : n.handlers) set_span_recursive(*c, t);
        for (auto& c : n.finalbody) set_span_recursive(*c, t);
        for (auto& c : n.cases) set_span_recursive(*c, t);
    }

    AstPtr parse_fragment(const std::string& fragment, const Token& where) {
        // wrapping in parens lets the fragment span physical lines without
        // producing INDENT bookkeeping
        std::string wrapped = "(" + fragment + "\n)\n";
        TokenStream ts;
        try {
            ts = tokenize(wrapped);
        } catch (const ParseError&) {
            throw ParseError(where.line, where.col,
                             "malformed expression inside f-string");
        }
        Parser sub(ts);
        AstPtr mod = sub.parse();
        if (mod->body.size() != 1 || mod->body[0]->kind != NodeKind::Expr)
            throw ParseError(where.line, where.col,
                             "malformed expression inside f-string");
        AstPtr expr = std::move(mod->body[0]->exprs[0]);
        set_span_recursive(*expr, where);
        return expr;
    }

    void parse_fstring_parts(std::string_view token_text,
                             const Token& where,
                             AstNode& joined) {
        StringParts parts = split_string_token(token_text);
        std::string_view body = parts.body;
        std::string literal;
        size_t p = 0;

        auto flush_literal = [&] {
            if (literal.empty()) return;
            auto c = std::make_unique<AstNode>();
            c->kind = NodeKind::Constant;
            c->value = literal;
            set_span(*c, where);
            joined.exprs.push_back(std::move(c));
            literal.clear();
        };

        while (p < body.size()) {
            char ch = body[p];
            if (ch == '{' && p + 1 < body.size() && body[p + 1] == '{') {
                literal += '{';
                p += 2;
                continue;
            }
            if (ch == '}' && p + 1 < body.size() && body[p + 1] == '}') {
                literal += '}';
                p += 2;
                continue;
            }
            if (ch != '{') {
                literal += ch;
                ++p;
                continue;
            }
            // replacement field
            ++p;
            size_t expr_begin = p;
            int depth = 0;
            char conversion = 0;
            size_t expr_end = std::string_view::npos;
            size_t spec_begin = std::string_view::npos;
            while (p < body.size()) {
                char c = body[p];
                if (c == '\'' || c == '"') {
                    p = skip_nested_string(body, p, where);
                    continue;
                }
                if (c == '(' || c == '[' || c == '{') {
                    ++depth;
                    ++p;
                    continue;
                }
                if (c == ')' || c == ']') {
                    --depth;
                    ++p;
                    continue;
                }
                if (c == '}') {
                    if (depth == 0) {
                        if (expr_end == std::string_view::npos) expr_end = p;
                        break;
                    }
                    --depth;
                    ++p;
                    continue;
                }
                if (depth == 0 && c == '!' && p + 2 < body.size() + 1 &&
                    body[p + 1] != '=' &&
                    (body[p + 1] == 'r' || body[p + 1] == 's' ||
                     body[p + 1] == 'a') &&
                    (p + 2 >= body.size() || body[p + 2] == '}' ||
                     body[p + 2] == ':')) {
                    expr_end = p;
                    conversion = body[p + 1];
                    p += 2;
                    continue;
                }
                if (depth == 0 && c == ':') {
                    // a ':' outside brackets always opens the format spec
                    // (walrus needs parens inside a replacement field)
                    if (expr_end == std::string_view::npos) expr_end = p;
                    spec_begin = p + 1;
                    p = skip_format_spec(body, p + 1);
                    continue;
                }
                ++p;
            }
            if (p >= body.size())
                throw ParseError(where.line, where.col,
                                 "unterminated replacement field in f-string");
            size_t field_close = p;
            ++p;  // past '}'

            std::string expr_text(body.substr(expr_begin,
                                              expr_end - expr_begin));
            // "f'{x=}'" / "f'{x = }'": the field text up to and including
            // '=' is echoed as literal output
            bool self_doc = false;
            {
                std::string trimmed = expr_text;
                while (!trimmed.empty() && trimmed.back() == ' ')
                    trimmed.pop_back();
                if (!trimmed.empty() && trimmed.back() == '=' &&
                    (trimmed.size() < 2 ||
                     std::string_view("=!<>+-*/%&|^:@~").find(
                         trimmed[trimmed.size() - 2]) ==
                         std::string_view::npos)) {
                    self_doc = true;
                    trimmed.pop_back();
                    while (!trimmed.empty() && trimmed.back() == ' ')
                        trimmed.pop_back();
                    literal += expr_text;
                    literal += '=';
                    expr_text = trimmed;
                }
            }
            flush_literal();

            auto field = std::make_unique<AstNode>();
            field->kind = NodeKind::FormattedValue;
            set_span(*field, where);
            if (conversion) field->value = std::string(1, conversion);
            field->exprs.push_back(parse_fragment(expr_text, where));
            if (spec_begin != std::string_view::npos) {
                size_t spec_end = field_close;
                field->exprs.push_back(parse_spec(
                    body.substr(spec_begin, spec_end - spec_begin), where));
            }
            (void)self_doc;
            joined.exprs.push_back(std::move(field));
        }
        flush_literal();
    }

    // returns the index just past the nested string literal that starts at p
    size_t skip_nested_string(std::string_view body, size_t p,
                              const Token& where) const {
        char quote = body[p];
        bool triple = p + 2 < body.size() && body[p + 1] == quote &&
                      body[p + 2] == quote;
        p += triple ? 3 : 1;
        while (p < body.size()) {
            if (body[p] == '\\') {
                p += 2;
                continue;
            }
            if (body[p] == quote) {
                if (!triple) return p + 1;
                if (p + 2 < body.size() && body[p + 1] == quote &&
                    body[p + 2] == quote)
                    return p + 3;
            }
            ++p;
        }
        throw ParseError(where.line, where.col,
                         "unterminated string inside f-string");
    }

    // advances over a format spec (stops at the field's closing '}'),
    // honouring nested replacement fields
    size_t skip_format_spec(std::string_view body, size_t p) const {
        int depth = 0;
        while (p < body.size()) {
            char c = body[p];
            if (c == '{') {
                ++depth;
            } else if (c == '}') {
                if (depth == 0) return p;
                --depth;
            }
            ++p;
        }
        return p;
    }

    AstPtr parse_spec(std::string_view spec, const Token& where) {
        auto joined = std::make_unique<AstNode>();
        joined->kind = NodeKind::JoinedStr;
        set_span(*joined, where);
        std::string literal;
        size_t p = 0;
        auto flush = [&] {
            if (literal.empty()) return;
            auto c = std::make_unique<AstNode>();
            c->kind = NodeKind::Constant;
            c->value = literal;
            set_span(*c, where);
            joined->exprs.push_back(std::move(c));
            literal.clear();
        };
        while (p < spec.size()) {
            char c = spec[p];
            if (c == '{') {
                size_t end = p + 1;
                int depth = 0;
                while (end < spec.size()) {
                    if (spec[end] == '{') ++depth;
                    if (spec[end] == '}') {
                        if (depth == 0) break;
                        --depth;
                    }
                    ++end;
                }
                flush();
                auto field = std::make_unique<AstNode>();
                field->kind = NodeKind::FormattedValue;
                set_span(*field, where);
                field->exprs.push_back(parse_fragment(
                    std::string(spec.substr(p + 1, end - p - 1)), where));
                joined->exprs.push_back(std::move(field));
                p = end + 1;
            } else {
                literal += c;
                ++p;
            }
        }
        flush();
        return joined;
    }
};

}  // namespace

AstPtr parse_tokens(const TokenStream& stream) {
    return Parser(stream).parse();
}

AstPtr parse_module(std::string_view source) {
    TokenStream ts = tokenize(source);
    return parse_tokens(ts);
}

bool parses(std::string_view source) {
    try {
        parse_module(source);
        return true;
    } catch (const Error&) {
        return false;
    }
}

}  // namespace flowgen
