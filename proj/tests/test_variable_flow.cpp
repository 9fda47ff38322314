// Variable-flow extraction: per-statement user identifiers, first occurrence
// only, built-ins/keywords/attribute-members filtered, ρ-equivariant under
// renaming.  The token-scan test is an independent oracle: it recovers the
// same name sets from the raw token stream without touching the AST.

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "flowgen/builtins.h"
#include "flowgen/parser.h"
#include "flowgen/syntax_flow.h"
#include "flowgen/tokenizer.h"
#include "flowgen/variable_flow.h"
#include "flowgen/walk.h"
#include "program_gen.h"

using namespace flowgen;
using flowgen::testing::GenOptions;
using flowgen::testing::NamePools;

namespace {

std::string var(std::string_view source) {
    return variable_flow_text(source, FlowSymbols::ascii());
}

// Independent identifier scan over the raw token stream.  Mirrors the
// extraction filters (built-ins, keywords, attribute members, call-keyword
// names) using only token-level context, so it cannot share a bug with the
// AST walker.  Valid for sources without f-strings.
std::set<std::string> token_scan(std::string_view source) {
    const BuiltinList& builtins = BuiltinList::frozen();
    TokenStream ts = tokenize(std::string(source));
    std::set<std::string> out;
    // Bracket context stack: true when the open paren is a def parameter list
    // (names followed by '=' there are parameters, not keyword arguments).
    std::vector<bool> def_paren;
    bool last_was_def = false;   // previous significant token was 'def'
    bool after_def_name = false; // the 'def NAME' just ended, '(' comes next
    std::string prev;
    for (size_t i = 0; i < ts.tokens.size(); ++i) {
        const Token& t = ts.tokens[i];
        if (t.type == TokType::Comment || t.type == TokType::Nl ||
            t.type == TokType::Newline || t.type == TokType::Indent ||
            t.type == TokType::Dedent || t.type == TokType::EndMarker)
            continue;
        std::string text(ts.text_of(t));
        if (t.type == TokType::Op) {
            if (text == "(" || text == "[" || text == "{") {
                def_paren.push_back(text == "(" && after_def_name);
            } else if (text == ")" || text == "]" || text == "}") {
                if (!def_paren.empty()) def_paren.pop_back();
            }
            after_def_name = false;
            prev = text;
            continue;
        }
        if (t.type == TokType::Name) {
            after_def_name = last_was_def;
            last_was_def = (text == "def");
            bool skip = is_python_keyword(text) || builtins.contains(text) ||
                        text == "match" || text == "case" || text == "_";
            if (prev == ".") skip = true;  // attribute member / dotted tail
            if (!skip && i + 1 < ts.tokens.size()) {
                const Token& nx = ts.tokens[i + 1];
                if (nx.type == TokType::Op && ts.text_of(nx) == "=" &&
                    !def_paren.empty() && !def_paren.back())
                    skip = true;  // keyword-argument name
            }
            if (!skip) out.insert(text);
            prev = text;
            continue;
        }
        last_was_def = false;
        after_def_name = false;
        prev = text;
    }
    return out;
}

std::set<std::string> flow_union(const Flow& flow) {
    std::set<std::string> out;
    for (const auto& row : flow.rows) out.insert(row.tags.begin(), row.tags.end());
    return out;
}

std::string apply_renaming(const std::string& flow_text,
                           const std::map<std::string, std::string>& rho) {
    std::istringstream in(flow_text);
    std::ostringstream out;
    std::string tok;
    bool first = true;
    while (in >> tok) {
        auto it = rho.find(tok);
        if (!first) out << ' ';
        out << (it == rho.end() ? tok : it->second);
        first = false;
    }
    return out.str();
}

}  // namespace

TEST_CASE("statements list their user identifiers in source order") {
    CHECK_EQ(var("x = len(items)"), "0 x items");
    CHECK_EQ(var("x = a + b"), "0 x a b");
    CHECK_EQ(var("def add(a, b):\n    return a + b"), "0 add a b <NL> 1 a b");
    CHECK_EQ(var("result = helper(len(data))"), "0 result helper data");
}

TEST_CASE("rows without identifiers serialize as a bare depth") {
    CHECK_EQ(var("pass"), "0");
    CHECK_EQ(var("if x:\n    pass"), "0 x <NL> 1");
    CHECK_EQ(var("print(1)"), "0");
}

TEST_CASE("built-ins and keywords never appear") {
    CHECK_EQ(var("x = str(len(range(10)))"), "0 x");
    CHECK_EQ(var("assert isinstance(v, str), 'bad'"), "0 v");
}

TEST_CASE("attribute members and keyword-argument names are excluded") {
    CHECK_EQ(var("obj.method(x)"), "0 obj x");
    CHECK_EQ(var("a.b.c = d"), "0 a d");
    CHECK_EQ(var("f(key=v)"), "0 f v");
    CHECK_EQ(var("print(a, sorted(b), c.method())"), "0 a b c");
}

TEST_CASE("duplicates collapse to the first occurrence per row") {
    CHECK_EQ(var("x = x + x"), "0 x");
    CHECK_EQ(var("a = b + a * b"), "0 a b");
    CHECK_EQ(var("x = 1\nx = x + 1"), "0 x <NL> 0 x");  // rows stay separate
}

TEST_CASE("definition rows carry decorators, names and parameters") {
    CHECK_EQ(var("@wrap\ndef f(a):\n    return sorted(a)"),
             "0 wrap f a <NL> 1 a");
    CHECK_EQ(var("class C(Base):\n    pass"), "0 C Base <NL> 1");
}

TEST_CASE("imports record roots, sources and bound aliases") {
    CHECK_EQ(var("import os.path as osp"), "0 os osp");
    CHECK_EQ(var("import mypkg"), "0 mypkg");
    CHECK_EQ(var("from mypkg.sub import thing as alias_v"),
             "0 mypkg thing alias_v");
}

TEST_CASE("handlers, with-targets and patterns capture their names") {
    CHECK_EQ(var("try:\n    x = 1\nexcept ValueError as e:\n    y = 2\n"
                 "else:\n    z = 3"),
             "0 <NL> 1 x <NL> 1 e <NL> 2 y <NL> 1 z");
    CHECK_EQ(var("with open(p) as fh:\n    data = fh.read()"),
             "0 p fh <NL> 1 data fh");
    CHECK_EQ(var("match v:\n    case [a, *b]:\n        pass"),
             "0 v <NL> 1 a b <NL> 2");
}

TEST_CASE("lambda parameters and comprehension targets count as names") {
    CHECK_EQ(var("f = lambda u, w: u + w"), "0 f u w");
    CHECK_EQ(var("ys = [q for q in xs if q]"), "0 ys q xs");
}

TEST_CASE("f-string embedded expressions are walked for names") {
    CHECK_EQ(var("s = f\"{a} and {b.c}\""), "0 s a b");
}

TEST_CASE("global and nonlocal rows list their names") {
    CHECK_EQ(var("def f():\n    global counter_a, counter_b"),
             "0 f <NL> 1 counter_a counter_b");
}

TEST_CASE("variable rows align with syntax rows on generated programs") {
    for (std::uint32_t seed = 0; seed < 150; ++seed) {
        GenOptions opt;
        opt.seed = seed;
        auto prog = flowgen::testing::generate_program(opt);
        AstPtr m = parse_module(prog.source);
        Flow synf = syntax_flow(*m);
        Flow varf = variable_flow(*m);
        REQUIRE_EQ(synf.rows.size(), varf.rows.size());
        for (size_t i = 0; i < synf.rows.size(); ++i)
            REQUIRE_EQ(synf.rows[i].depth, varf.rows[i].depth);
    }
}

TEST_CASE("flow names equal an independent token-level scan") {
    for (std::uint32_t seed = 0; seed < 200; ++seed) {
        GenOptions opt;
        opt.seed = seed;
        opt.fstrings = false;  // a token scan cannot see into f-strings
        auto prog = flowgen::testing::generate_program(opt);
        AstPtr m = parse_module(prog.source);
        CAPTURE(prog.source);
        REQUIRE_EQ(flow_union(variable_flow(*m)), token_scan(prog.source));
    }
}

TEST_CASE("renaming by a bijection maps the flow elementwise") {
    NamePools renamed;
    renamed.vars = {"ren_a", "ren_b", "ren_c", "ren_d", "ren_e", "ren_f",
                    "ren_g", "ren_h"};
    renamed.funcs = {"rfn_one", "rfn_two", "rfn_three", "rfn_four"};
    renamed.classes = {"RK_One", "RK_Two", "RK_Three"};
    NamePools base = NamePools::standard();
    std::map<std::string, std::string> rho;
    for (size_t i = 0; i < base.vars.size(); ++i) rho[base.vars[i]] = renamed.vars[i];
    for (size_t i = 0; i < base.funcs.size(); ++i)
        rho[base.funcs[i]] = renamed.funcs[i];
    for (size_t i = 0; i < base.classes.size(); ++i)
        rho[base.classes[i]] = renamed.classes[i];

    for (std::uint32_t seed = 0; seed < 60; ++seed) {
        GenOptions original;
        original.seed = seed;
        GenOptions redone = original;
        redone.pools = renamed;
        auto a = flowgen::testing::generate_program(original);
        auto b = flowgen::testing::generate_program(redone);
        CAPTURE(a.source);
        REQUIRE_EQ(apply_renaming(variable_flow_text(a.source), rho),
                   variable_flow_text(b.source));
    }
}
