// Statement-walk depth semantics and the flow wire format: serialization,
// strict parsing, tolerant repair, and round-trip identity on random flows.

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "flowgen/ast.h"
#include "flowgen/errors.h"
#include "flowgen/flow.h"
#include "flowgen/parser.h"
#include "flowgen/walk.h"

using namespace flowgen;

namespace {

std::string walk_text(std::string_view source) {
    AstPtr m = parse_module(source);
    std::ostringstream out;
    for (const auto& r : walk_statements(*m)) {
        out << r.depth << " " << kind_name(r.node->kind) << "\n";
    }
    return out.str();
}

Flow random_flow(std::mt19937& rng, FlowKind kind) {
    // Row heads must be statement kinds; the tags that follow may be
    // expression kinds or builtin call names.
    static const std::vector<std::string> kHeadTags = {
        "If", "For", "Assign", "Return", "Expr", "While", "Pass", "Try"};
    static const std::vector<std::string> kTailTags = {
        "Call", "Name", "BinOp", "print", "len", "Attribute", "Compare",
        "Constant"};
    static const std::vector<std::string> kNames = {
        "alpha", "beta", "gamma", "x", "y", "value_2", "_private", "n"};
    auto pick = [&rng](const std::vector<std::string>& pool) {
        return pool[std::uniform_int_distribution<size_t>(0, pool.size() - 1)(
            rng)];
    };
    std::uniform_int_distribution<int> rows(1, 12);
    std::uniform_int_distribution<int> depth(0, 9);
    Flow flow;
    int n = rows(rng);
    for (int i = 0; i < n; ++i) {
        FlowRow row;
        row.depth = depth(rng);
        if (kind == FlowKind::Syntax) {
            row.tags.push_back(pick(kHeadTags));
            int k = std::uniform_int_distribution<int>(0, 4)(rng);
            for (int j = 0; j < k; ++j) row.tags.push_back(pick(kTailTags));
        } else {
            int k = std::uniform_int_distribution<int>(0, 4)(rng);  // bare ok
            for (int j = 0; j < k; ++j) row.tags.push_back(pick(kNames));
        }
        flow.rows.push_back(std::move(row));
    }
    return flow;
}

std::string corrupt(std::string text, std::mt19937& rng) {
    if (text.empty()) return text;
    std::uniform_int_distribution<int> mode(0, 5);
    std::uniform_int_distribution<size_t> pos(0, text.size() - 1);
    switch (mode(rng)) {
        case 0:
            text.insert(pos(rng), "###");
            break;
        case 1:
            text.erase(pos(rng), std::min<size_t>(3, text.size() - pos(rng)));
            break;
        case 2:
            text[pos(rng)] = '!';
            break;
        case 3:
            text.insert(pos(rng), " -17 ");
            break;
        case 4:
            text += " \xCE\xB4 99999999999999999999 BadKind";
            break;
        default:
            text.insert(pos(rng), " \xCE\xB4 \xCE\xB4 ");
            break;
    }
    return text;
}

}  // namespace

TEST_CASE("module statements walk at depth zero") {
    CHECK_EQ(walk_text("x = 1\ny = 2\n"), "0 Assign\n0 Assign\n");
}

TEST_CASE("suites deepen by one per enclosing body") {
    CHECK_EQ(walk_text("def f():\n    if a:\n        return 1\n"),
             "0 FunctionDef\n1 If\n2 Return\n");
}

TEST_CASE("elif rows deepen as the chain nests into orelse") {
    CHECK_EQ(walk_text("if a:\n    x = 1\nelif b:\n    y = 2\nelif c:\n    z = 3\n"),
             "0 If\n1 Assign\n1 If\n2 Assign\n2 If\n3 Assign\n");
}

TEST_CASE("else bodies stay at the chain's level plus one") {
    CHECK_EQ(walk_text("if a:\n    x = 1\nelse:\n    y = 2\n"),
             "0 If\n1 Assign\n1 Assign\n");
    CHECK_EQ(walk_text("while a:\n    x = 1\nelse:\n    y = 2\n"),
             "0 While\n1 Assign\n1 Assign\n");
    CHECK_EQ(walk_text("for i in a:\n    x = 1\nelse:\n    y = 2\n"),
             "0 For\n1 Assign\n1 Assign\n");
}

TEST_CASE("except clauses take a row between try and their body") {
    CHECK_EQ(walk_text("try:\n    a = 1\nexcept E:\n    b = 2\nfinally:\n    c = 3\n"),
             "0 Try\n1 Assign\n1 ExceptHandler\n2 Assign\n1 Assign\n");
}

TEST_CASE("try rows come in source order: body, handlers, else, finally") {
    CHECK_EQ(walk_text("try:\n    a = 1\nexcept E:\n    b = 2\nelse:\n    c = 3\n"
                       "finally:\n    d = 4\n"),
             "0 Try\n1 Assign\n1 ExceptHandler\n2 Assign\n1 Assign\n1 Assign\n");
}

TEST_CASE("match cases take a row between match and their body") {
    CHECK_EQ(walk_text("match v:\n    case 1:\n        a = 1\n    case _:\n"
                       "        b = 2\n"),
             "0 Match\n1 MatchCase\n2 Assign\n1 MatchCase\n2 Assign\n");
}

TEST_CASE("inline suites still nest their statement one level down") {
    CHECK_EQ(walk_text("if a: pass\n"), "0 If\n1 Pass\n");
    CHECK_EQ(walk_text("while a: b = 1; c = 2\n"),
             "0 While\n1 Assign\n1 Assign\n");
}

TEST_CASE("decorators do not occupy a row") {
    CHECK_EQ(walk_text("@wrap\n@mod.deep\ndef f():\n    pass\n"),
             "0 FunctionDef\n1 Pass\n");
}

TEST_CASE("walk records parent row indices") {
    AstPtr m = parse_module("if a:\n    b = 1\n    if c:\n        d = 2\nx = 3\n");
    auto rows = walk_statements(*m);
    REQUIRE_EQ(rows.size(), 5u);
    CHECK_EQ(rows[0].parent, -1);
    CHECK_EQ(rows[1].parent, 0);
    CHECK_EQ(rows[2].parent, 0);
    CHECK_EQ(rows[3].parent, 2);
    CHECK_EQ(rows[4].parent, -1);
}

TEST_CASE("serialize joins rows with the delta sentinel") {
    Flow flow;
    flow.rows.push_back({0, {"FunctionDef", "arguments"}});
    flow.rows.push_back({1, {"Return", "BinOp"}});
    CHECK_EQ(serialize_flow(flow),
             "0 FunctionDef arguments \xCE\xB4 1 Return BinOp");
    CHECK_EQ(serialize_flow(flow, FlowSymbols::ascii()),
             "0 FunctionDef arguments <NL> 1 Return BinOp");
}

TEST_CASE("variable rows with no names serialize as a bare depth") {
    Flow flow;
    flow.rows.push_back({0, {"f"}});
    flow.rows.push_back({1, {}});
    CHECK_EQ(serialize_flow(flow), "0 f \xCE\xB4 1");
}

TEST_CASE("strict parse inverts serialize for both sentinel spellings") {
    Flow flow;
    flow.rows.push_back({0, {"If", "Compare"}});
    flow.rows.push_back({1, {"Pass"}});
    for (FlowSymbols symbols : {FlowSymbols{}, FlowSymbols::ascii()}) {
        std::string text = serialize_flow(flow, symbols);
        FlowParseResult parsed = parse_flow(text, FlowKind::Syntax, true);
        CHECK_EQ(parsed.repairs, 0);
        CHECK_EQ(serialize_flow(parsed.flow, symbols), text);
    }
}

TEST_CASE("strict parse rejects malformed flow text") {
    CHECK_THROWS_AS(parse_flow("x If", FlowKind::Syntax, true), FlowFormatError);
    CHECK_THROWS_AS(parse_flow("0 NotAKind", FlowKind::Syntax, true),
                    FlowFormatError);
    CHECK_THROWS_AS(parse_flow("-2 If", FlowKind::Syntax, true), FlowFormatError);
    CHECK_THROWS_AS(parse_flow("0 If \xCE\xB4 \xCE\xB4 1 Pass", FlowKind::Syntax,
                               true),
                    FlowFormatError);
    CHECK_THROWS_AS(parse_flow("0", FlowKind::Syntax, true), FlowFormatError);
    CHECK_THROWS_AS(parse_flow("0 9bad", FlowKind::Variable, true),
                    FlowFormatError);
    // Empty text is the serialization of a zero-row flow, not an error.
    FlowParseResult empty = parse_flow("", FlowKind::Syntax, true);
    CHECK_EQ(empty.repairs, 0);
    CHECK(empty.flow.rows.empty());
}

TEST_CASE("tolerant parse repairs instead of failing") {
    FlowParseResult r = parse_flow("0 NotAKind", FlowKind::Syntax, false);
    CHECK_GT(r.repairs, 0);
    REQUIRE_EQ(r.flow.rows.size(), 1u);
    CHECK_EQ(r.flow.rows[0].tags, std::vector<std::string>{"UNK"});

    r = parse_flow("-3 If", FlowKind::Syntax, false);
    CHECK_GT(r.repairs, 0);
    REQUIRE_EQ(r.flow.rows.size(), 1u);
    CHECK_EQ(r.flow.rows[0].depth, 0);

    r = parse_flow("0 9bad x", FlowKind::Variable, false);
    CHECK_GT(r.repairs, 0);
    REQUIRE_EQ(r.flow.rows.size(), 1u);
    CHECK_EQ(r.flow.rows[0].tags, std::vector<std::string>{"x"});
}

TEST_CASE("round-trip identity holds for 1000 random flows of each kind") {
    std::mt19937 rng(2024);
    for (FlowKind kind : {FlowKind::Syntax, FlowKind::Variable}) {
        for (int i = 0; i < 1000; ++i) {
            Flow flow = random_flow(rng, kind);
            for (FlowSymbols symbols : {FlowSymbols{}, FlowSymbols::ascii()}) {
                std::string text = serialize_flow(flow, symbols);
                FlowParseResult parsed = parse_flow(text, kind, true);
                CAPTURE(text);
                REQUIRE_EQ(parsed.repairs, 0);
                REQUIRE_EQ(serialize_flow(parsed.flow, symbols), text);
            }
        }
    }
}

TEST_CASE("tolerant parser never throws on 1000 corrupted flows") {
    std::mt19937 rng(77);
    int processed = 0;
    for (int i = 0; i < 1000; ++i) {
        FlowKind kind = (i % 2 == 0) ? FlowKind::Syntax : FlowKind::Variable;
        std::string text = serialize_flow(random_flow(rng, kind));
        text = corrupt(std::move(text), rng);
        CAPTURE(text);
        REQUIRE_NOTHROW(parse_flow(text, kind, false));
        ++processed;
    }
    CHECK_EQ(processed, 1000);
}

TEST_CASE("flow name validation") {
    CHECK(is_valid_flow_name("alpha"));
    CHECK(is_valid_flow_name("_x2"));
    CHECK_FALSE(is_valid_flow_name("2x"));
    CHECK_FALSE(is_valid_flow_name(""));
    CHECK_FALSE(is_valid_flow_name("a b"));
    CHECK_FALSE(is_valid_flow_name("\xCE\xB4"));
    CHECK_FALSE(is_valid_flow_name("\xC2\xA7"));
}

TEST_CASE("whitespace token counting") {
    CHECK_EQ(whitespace_token_count(""), 0u);
    CHECK_EQ(whitespace_token_count("   "), 0u);
    CHECK_EQ(whitespace_token_count("a"), 1u);
    CHECK_EQ(whitespace_token_count(" a  b\tc \n d "), 4u);
}
