"""Reference AST shape and style counts computed with CPython's own tools.

Reads a JSON list of source strings on stdin, writes a JSON list of
{"parse_ok", "nodes", "depth", "width", "violations"} objects.
"""
import ast
import json
import sys

import style_oracle


def shape(tree):
    def children(node):
        return [c for c in ast.iter_child_nodes(node)
                if not isinstance(c, (ast.expr_context, ast.type_ignore))]

    level = [tree]
    depth = width = nodes = 0
    while level:
        depth += 1
        width = max(width, len(level))
        nodes += len(level)
        level = [c for n in level for c in children(n)]
    return nodes, depth, width


def measure(src):
    out = {"parse_ok": True}
    try:
        tree = ast.parse(src)
    except (SyntaxError, ValueError):
        out["parse_ok"] = False
    else:
        out["nodes"], out["depth"], out["width"] = shape(tree)
    out["violations"] = style_oracle.check(src)
    return out


if __name__ == "__main__":
    json.dump([measure(s) for s in json.load(sys.stdin)], sys.stdout)
