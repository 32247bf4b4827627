"""Deterministic pretty-printer for ast_core trees.

Canonical form: 4-space indentation, single spaces around operators, tuples
always parenthesized. Guarantees parse(unparse(ast)) is structurally equal
to ast for every tree the parser can produce.
"""

from __future__ import annotations

from .ast_core import Ast, Node

# Binding strength; higher binds tighter.
_PREC_OR = 1
_PREC_AND = 2
_PREC_NOT = 3
_PREC_CMP = 4
_PREC_ADD = 5
_PREC_MUL = 6
_PREC_UNARY = 7
_PREC_POW = 8
_PREC_POSTFIX = 9

_BINOP_PREC = {
    "+": (_PREC_ADD, _PREC_ADD, _PREC_ADD + 1),
    "-": (_PREC_ADD, _PREC_ADD, _PREC_ADD + 1),
    "*": (_PREC_MUL, _PREC_MUL, _PREC_MUL + 1),
    "/": (_PREC_MUL, _PREC_MUL, _PREC_MUL + 1),
    "%": (_PREC_MUL, _PREC_MUL, _PREC_MUL + 1),
    # Right-associative; unary minus allowed in the exponent.
    "**": (_PREC_POW, _PREC_POSTFIX, _PREC_UNARY),
}


def _kids(ast: Ast, nd: Node, relation: str) -> list[Node]:
    return [ast.nodes[c] for c in nd.children if ast.nodes[c].relation == relation]


def _expr(ast: Ast, nid: int, prec: int = 0) -> str:
    nd = ast.nodes[nid]
    k = nd.kind
    if k == "Name" or k == "Constant":
        return nd.value  # type: ignore[return-value]
    if k == "Attribute":
        obj = _expr(ast, nd.children[0], _PREC_POSTFIX)
        return f"{obj}.{nd.value}"
    if k == "Call":
        func = _expr(ast, _kids(ast, nd, "func")[0].id, _PREC_POSTFIX)
        parts = [_expr(ast, a.id) for a in _kids(ast, nd, "args")]
        for kw in _kids(ast, nd, "keywords"):
            key = _kids(ast, kw, "target")[0]
            val = _kids(ast, kw, "value")[0]
            parts.append(f"{key.value}={_expr(ast, val.id)}")
        return f"{func}({', '.join(parts)})"
    if k == "Subscript":
        obj = _expr(ast, _kids(ast, nd, "value")[0].id, _PREC_POSTFIX)
        idx = _expr(ast, _kids(ast, nd, "slice")[0].id)
        return f"{obj}[{idx}]"
    if k == "TupleLit":
        elts = [_expr(ast, c) for c in nd.children]
        if len(elts) == 1:
            return f"({elts[0]},)"
        return f"({', '.join(elts)})"
    if k == "ListLit":
        return f"[{', '.join(_expr(ast, c) for c in nd.children)}]"
    if k == "DictLit":
        keys = _kids(ast, nd, "keys")
        vals = _kids(ast, nd, "values")
        pairs = [f"{_expr(ast, kk.id)}: {_expr(ast, vv.id)}" for kk, vv in zip(keys, vals)]
        return f"{{{', '.join(pairs)}}}"
    if k == "BinOp":
        own, lp, rp = _BINOP_PREC[nd.value]  # type: ignore[index]
        left = _expr(ast, nd.children[0], lp)
        right = _expr(ast, nd.children[1], rp)
        text = f"{left} {nd.value} {right}"
        return f"({text})" if own < prec else text
    if k == "UnaryOp":
        if nd.value == "not":
            text = f"not {_expr(ast, nd.children[0], _PREC_NOT)}"
            return f"({text})" if _PREC_NOT < prec else text
        text = f"-{_expr(ast, nd.children[0], _PREC_UNARY)}"
        return f"({text})" if _PREC_UNARY < prec else text
    if k == "BoolOp":
        own = _PREC_OR if nd.value == "or" else _PREC_AND
        text = f" {nd.value} ".join(_expr(ast, c, own + 1) for c in nd.children)
        return f"({text})" if own < prec else text
    if k == "Compare":
        parts = [_expr(ast, _kids(ast, nd, "left")[0].id, _PREC_CMP + 1)]
        ops = _kids(ast, nd, "ops")
        comps = _kids(ast, nd, "comparators")
        for op, comp in zip(ops, comps):
            parts.append(op.value)  # type: ignore[arg-type]
            parts.append(_expr(ast, comp.id, _PREC_CMP + 1))
        text = " ".join(parts)
        return f"({text})" if _PREC_CMP < prec else text
    raise ValueError(f"not an expression kind: {k}")


def _stmt(ast: Ast, nid: int, indent: int, out: list[str]) -> None:
    pad = "    " * indent
    nd = ast.nodes[nid]
    k = nd.kind
    if k == "FunctionDef":
        args = _kids(ast, nd, "args")[0]
        params = ", ".join(p.value for p in [ast.nodes[c] for c in args.children])  # type: ignore[misc]
        out.append(f"{pad}def {nd.value}({params}):")
        for s in _kids(ast, nd, "body"):
            _stmt(ast, s.id, indent + 1, out)
    elif k == "If":
        _if_chain(ast, nd, indent, out, keyword="if")
    elif k == "While":
        test = _kids(ast, nd, "test")[0]
        out.append(f"{pad}while {_expr(ast, test.id)}:")
        for s in _kids(ast, nd, "body"):
            _stmt(ast, s.id, indent + 1, out)
    elif k == "ForIn":
        target = _kids(ast, nd, "target")[0]
        it = _kids(ast, nd, "iter")[0]
        out.append(f"{pad}for {_expr(ast, target.id)} in {_expr(ast, it.id)}:")
        for s in _kids(ast, nd, "body"):
            _stmt(ast, s.id, indent + 1, out)
    elif k == "Return":
        vals = _kids(ast, nd, "value")
        out.append(f"{pad}return {_expr(ast, vals[0].id)}" if vals else f"{pad}return")
    elif k == "Pass":
        out.append(f"{pad}pass")
    elif k == "Assign":
        target = _kids(ast, nd, "targets")[0]
        value = _kids(ast, nd, "value")[0]
        out.append(f"{pad}{_expr(ast, target.id)} = {_expr(ast, value.id)}")
    elif k == "AugAssign":
        target = _kids(ast, nd, "target")[0]
        op = _kids(ast, nd, "op")[0]
        value = _kids(ast, nd, "value")[0]
        out.append(f"{pad}{_expr(ast, target.id)} {op.value}= {_expr(ast, value.id)}")
    elif k == "ExprStmt":
        out.append(f"{pad}{_expr(ast, nd.children[0])}")
    else:
        raise ValueError(f"not a statement kind: {k}")


def _if_chain(ast: Ast, nd: Node, indent: int, out: list[str], keyword: str) -> None:
    pad = "    " * indent
    test = _kids(ast, nd, "test")[0]
    out.append(f"{pad}{keyword} {_expr(ast, test.id)}:")
    for s in _kids(ast, nd, "body"):
        _stmt(ast, s.id, indent + 1, out)
    orelse = _kids(ast, nd, "orelse")
    if not orelse:
        return
    if len(orelse) == 1 and orelse[0].kind == "If":
        _if_chain(ast, orelse[0], indent, out, keyword="elif")
    else:
        out.append(f"{pad}else:")
        for s in orelse:
            _stmt(ast, s.id, indent + 1, out)


def unparse(ast: Ast) -> str:
    if ast.nodes[0].kind != "FunctionDef":
        raise ValueError("root must be a FunctionDef")
    out: list[str] = []
    _stmt(ast, 0, 0, out)
    return "\n".join(out) + "\n"
