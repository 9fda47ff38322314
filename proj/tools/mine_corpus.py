#!/usr/bin/env python3
"""Mine (docstring, function) records from an installed Python tree.

Walks a directory of .py files (default: the running interpreter's stdlib),
collects every function or method that carries a docstring, and writes one
JSONL record per function with keys id / docstring / code.  Records are
validated by compiling the dedented function source, so every emitted record
is parseable on its own.  The walk order, the per-file extraction order, and
the output are fully deterministic for a fixed tree.

Functions longer than --max-lines are skipped to keep the corpus at the
short-function granularity the downstream token budgets assume.
"""

import argparse
import ast
import json
import sys
import textwrap
import tokenize
from pathlib import Path


def iter_functions(tree):
    for node in ast.walk(tree):
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            yield node


def extract(path, rel, max_lines):
    try:
        with tokenize.open(path) as fh:
            source = fh.read()
    except (OSError, SyntaxError, UnicodeDecodeError):
        return
    try:
        tree = ast.parse(source)
    except (SyntaxError, ValueError):
        return
    lines = source.splitlines(keepends=True)
    for node in iter_functions(tree):
        doc = ast.get_docstring(node, clean=True)
        if not doc or len(doc.split()) < 3:
            continue
        start = node.lineno
        if node.decorator_list:
            start = min(start, node.decorator_list[0].lineno)
        end = node.end_lineno
        if end is None or end - start + 1 > max_lines or end - start + 1 < 3:
            continue
        snippet = textwrap.dedent("".join(lines[start - 1 : end]))
        try:
            compile(snippet, "<mined>", "exec")
        except (SyntaxError, ValueError):
            continue
        yield {
            "id": f"{rel}:{node.name}:{node.lineno}",
            "docstring": doc,
            "code": snippet,
        }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", type=Path,
                        default=Path(sys.prefix) / "lib" / f"python{sys.version_info.major}.{sys.version_info.minor}",
                        help="directory tree to mine (default: the stdlib)")
    parser.add_argument("--limit", type=int, default=6000,
                        help="stop after this many records (0 = no limit)")
    parser.add_argument("--max-lines", type=int, default=60,
                        help="skip functions longer than this many lines")
    parser.add_argument("--output", type=Path, required=True)
    args = parser.parse_args()

    count = 0
    with open(args.output, "w", encoding="utf-8") as out:
        for path in sorted(args.root.rglob("*.py")):
            rel = path.relative_to(args.root).as_posix()
            for record in extract(path, rel, args.max_lines):
                out.write(json.dumps(record, ensure_ascii=False) + "\n")
                count += 1
                if args.limit and count >= args.limit:
                    print(f"mined {count} records", file=sys.stderr)
                    return
    print(f"mined {count} records", file=sys.stderr)


if __name__ == "__main__":
    main()
