#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flowgen {

// Node kinds mirror the shape of a Python 3.10 syntax tree.  Statement and
// expression kinds use CamelCase; the small structural helpers (parameter
// lists, keywords, import aliases, ...) use the lowercase spelling that the
// flow format expects as tags.
enum class NodeKind : uint8_t {
    // statements
    Module,
    FunctionDef,
    AsyncFunctionDef,
    ClassDef,
    Return,
    Delete,
    Assign,
    AugAssign,
    AnnAssign,
    For,
    AsyncFor,
    While,
    If,
    With,
    AsyncWith,
    Match,
    Raise,
    Try,
    Assert,
    Import,
    ImportFrom,
    Global,
    Nonlocal,
    Expr,
    Pass,
    Break,
    Continue,
    // body-owning helpers that occupy their own flow row
    ExceptHandler,
    MatchCase,
    // expressions
    BoolOp,
    NamedExpr,
    BinOp,
    UnaryOp,
    Lambda,
    IfExp,
    Dict,
    Set,
    ListComp,
    SetComp,
    DictComp,
    GeneratorExp,
    Await,
    Yield,
    YieldFrom,
    Compare,
    Call,
    FormattedValue,
    JoinedStr,
    Constant,
    Attribute,
    Subscript,
    Starred,
    Name,
    List,
    Tuple,
    Slice,
    // structural helpers
    Arguments,
    Arg,
    Keyword,
    Alias,
    Withitem,
    Comprehension,
    // match patterns
    MatchValue,
    MatchSingleton,
    MatchSequence,
    MatchMapping,
    MatchClass,
    MatchStar,
    MatchAs,
    MatchOr,
};

struct AstNode {
    NodeKind kind = NodeKind::Module;

    // Identifier payload: function/class/parameter name, attribute member,
    // keyword-argument name, `as` target, capture name.
    std::string name;

    // Secondary payload: literal source text for Constant, operator spelling
    // for BinOp/UnaryOp/BoolOp/AugAssign/Compare, the dotted module path for
    // ImportFrom/alias, the conversion char for FormattedValue, a presence
    // mask for Slice.
    std::string value;

    // Names carried directly by the statement (global / nonlocal).
    std::vector<std::string> extra_names;

    // Decorators of a FunctionDef / AsyncFunctionDef / ClassDef, in source
    // order.  Kept apart from `exprs` because they precede the name while the
    // remaining children follow it.
    std::vector<std::unique_ptr<AstNode>> decorators;

    // Non-statement children in source order (targets, tests, arguments,
    // aliases, patterns, ...).
    std::vector<std::unique_ptr<AstNode>> exprs;

    // Nested statement lists.
    std::vector<std::unique_ptr<AstNode>> body;
    std::vector<std::unique_ptr<AstNode>> orelse;
    std::vector<std::unique_ptr<AstNode>> handlers;   // Try
    std::vector<std::unique_ptr<AstNode>> finalbody;  // Try
    std::vector<std::unique_ptr<AstNode>> cases;      // Match

    // Source span, 1-based line / 0-based column plus byte offsets.
    int line = 0;
    int col = 0;
    int end_line = 0;
    int end_col = 0;
    size_t begin = 0;
    size_t end = 0;
};

using AstPtr = std::unique_ptr<AstNode>;

const char* kind_name(NodeKind kind);
std::optional<NodeKind> kind_from_name(std::string_view name);

// True for kinds that appear inside statement bodies (Module excluded;
// ExceptHandler / MatchCase excluded: they live in their own vectors).
bool is_statement_kind(NodeKind kind);

struct DumpOptions {
    // Drop the leading run of string-constant expression statements from
    // every Module / def / class body and substitute a Pass placeholder when
    // that empties the body.  Mirrors what docstring removal does to the
    // source, so the dumps of original and cleaned code can be compared.
    bool skip_docstrings = false;
};

// Deterministic structural rendering used for equality checks between parse
// results.  Positions are not included.
std::string dump_structure(const AstNode& root, const DumpOptions& options = {});

// True if `node` is an expression statement whose value is a plain string
// constant (the docstring shape).
bool is_string_constant_stmt(const AstNode& node);

}  // namespace flowgen
