"""Recursive-descent parser for a Python subset, producing ast_core trees.

Supported: a single (optionally nested) function definition as root; plain
parameters; assignment / augmented assignment / expression statements,
return, pass, if/elif/else, while, for-in; names, attribute access, calls
with positional and keyword args, int/float/string/True/False/None
constants, comparison chains, and/or/not, + - * / % **, unary minus,
subscripts, list/tuple/dict literals. Blocks are indentation-delimited,
4 spaces per level, tabs rejected. Anything else raises ParseError.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .ast_core import Ast, Node, COMPARE_OPS


class ParseError(Exception):
    def __init__(self, line: int, column: int, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.message = message


KEYWORDS = frozenset({
    "def", "return", "pass", "if", "elif", "else", "while", "for", "in",
    "is", "not", "and", "or", "True", "False", "None",
})

_NUMBER_RE = re.compile(
    r"0[xXoObB][0-9a-fA-F]+"
    r"|\d+\.\d*(?:[eE][+-]?\d+)?"
    r"|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?"
)
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

# Longest-match operator list.
_OPERATORS = (
    "**=", "**", "==", "!=", "<=", ">=", "+=", "-=", "*=", "//", "/=", "%=",
    "->", "(", ")", "[", "]", "{", "}", ",", ":", ".", ";", "=", "<", ">",
    "+", "-", "*", "/", "%", "@",
)

AUG_OPS = {"+=": "+", "-=": "-", "*=": "*", "/=": "/", "%=": "%", "**=": "**"}


@dataclass
class Tok:
    type: str  # NAME NUMBER STRING OP NEWLINE INDENT DEDENT EOF
    text: str
    line: int
    col: int
    start: int
    end: int


def tokenize(source: str) -> list[Tok]:
    toks: list[Tok] = []
    indent_stack = [0]
    i = 0
    line = 1
    line_start = 0
    depth = 0  # bracket nesting; newlines inside are joined
    at_line_start = True
    n = len(source)

    def err(msg: str, pos: Optional[int] = None) -> ParseError:
        p = i if pos is None else pos
        return ParseError(line, p - line_start + 1, msg)

    while i < n:
        if at_line_start and depth == 0:
            j = i
            while j < n and source[j] == " ":
                j += 1
            if j < n and source[j] == "\t":
                i = j
                raise err("tab in indentation")
            if j >= n or source[j] in "\n#":
                # Blank or comment-only line.
                while j < n and source[j] != "\n":
                    j += 1
                if j < n:
                    j += 1
                    line += 1
                    line_start = j
                i = j
                continue
            width = j - i
            if width > indent_stack[-1]:
                if width != indent_stack[-1] + 4:
                    i = j
                    raise err("indentation must step by 4 spaces")
                indent_stack.append(width)
                toks.append(Tok("INDENT", "", line, 1, i, j))
            else:
                while width < indent_stack[-1]:
                    indent_stack.pop()
                    toks.append(Tok("DEDENT", "", line, 1, i, i))
                if width != indent_stack[-1]:
                    i = j
                    raise err("unindent does not match any outer block")
            i = j
            at_line_start = False
            continue

        c = source[i]
        if c == "\n":
            line += 1
            if depth == 0:
                if toks and toks[-1].type not in ("NEWLINE", "INDENT", "DEDENT"):
                    toks.append(Tok("NEWLINE", "\n", line - 1, i - line_start + 1, i, i + 1))
                at_line_start = True
            i += 1
            line_start = i
            continue
        if c == " ":
            i += 1
            continue
        if c == "\t":
            raise err("tab character")
        if c == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        if c == "\\" and i + 1 < n and source[i + 1] == "\n":
            # Explicit line joining.
            i += 2
            line += 1
            line_start = i
            continue
        if c in "fF" and i + 1 < n and source[i + 1] in "'\"":
            raise err("f-strings are not supported")
        if c in "'\"" or (c in "rbuRBU" and i + 1 < n and source[i + 1] in "'\""):
            start = i
            start_line, start_col = line, i - line_start + 1
            if c not in "'\"":
                i += 1
            quote = source[i]
            if source[i:i + 3] in ("'''", '"""'):
                closer = source[i:i + 3]
                i += 3
                while i < n and source[i:i + 3] != closer:
                    if source[i] == "\\":
                        i += 1
                    if i < n and source[i] == "\n":
                        line += 1
                        line_start = i + 1
                    i += 1
                if i >= n:
                    raise ParseError(start_line, start_col, "unterminated string")
                i += 3
            else:
                i += 1
                while i < n and source[i] != quote:
                    if source[i] == "\n":
                        raise ParseError(start_line, start_col, "unterminated string")
                    if source[i] == "\\":
                        i += 1
                    i += 1
                if i >= n:
                    raise ParseError(start_line, start_col, "unterminated string")
                i += 1
            toks.append(Tok("STRING", source[start:i], start_line, start_col, start, i))
            continue
        m = _NUMBER_RE.match(source, i)
        if m and (c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit())):
            toks.append(Tok("NUMBER", m.group(), line, i - line_start + 1, i, m.end()))
            i = m.end()
            continue
        m = _NAME_RE.match(source, i)
        if m:
            toks.append(Tok("NAME", m.group(), line, i - line_start + 1, i, m.end()))
            i = m.end()
            continue
        for op in _OPERATORS:
            if source.startswith(op, i):
                if op in "([{":
                    depth += 1
                elif op in ")]}":
                    depth = max(0, depth - 1)
                toks.append(Tok("OP", op, line, i - line_start + 1, i, i + len(op)))
                i += len(op)
                break
        else:
            raise err(f"unexpected character {c!r}")

    if toks and toks[-1].type not in ("NEWLINE", "INDENT", "DEDENT"):
        toks.append(Tok("NEWLINE", "\n", line, n - line_start + 1, n, n))
    while len(indent_stack) > 1:
        indent_stack.pop()
        toks.append(Tok("DEDENT", "", line, 1, n, n))
    toks.append(Tok("EOF", "", line, 1, n, n))
    return toks


@dataclass
class _P:
    """Pending tree node; preorder ids are assigned after the parse."""
    kind: str
    value: Optional[str]
    span: tuple[int, int]
    children: list[tuple[str, "_P"]] = field(default_factory=list)


def _linearize(root: _P, source: str) -> Ast:
    nodes: list[Node] = []

    def walk(p: _P, parent: Optional[int], relation: str) -> int:
        nid = len(nodes)
        nodes.append(None)  # type: ignore[arg-type]
        child_ids = [walk(c, nid, rel) for rel, c in p.children]
        nodes[nid] = Node(nid, p.kind, p.value, parent, relation, tuple(child_ids), p.span)
        return nid

    walk(root, None, "root")
    ast = Ast(tuple(nodes), source=source)
    ast.check()
    return ast


class _Parser:
    def __init__(self, toks: list[Tok]):
        self.toks = toks
        self.pos = 0

    # -- token plumbing -----------------------------------------------------

    def peek(self, ahead: int = 0) -> Tok:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Tok:
        t = self.toks[self.pos]
        if t.type != "EOF":
            self.pos += 1
        return t

    def err(self, msg: str, tok: Optional[Tok] = None) -> ParseError:
        t = tok or self.peek()
        return ParseError(t.line, t.col, msg)

    def expect(self, type_: str, text: Optional[str] = None) -> Tok:
        t = self.peek()
        if t.type != type_ or (text is not None and t.text != text):
            want = text or type_
            raise self.err(f"expected {want!r}, found {t.text or t.type!r}")
        return self.next()

    def at(self, type_: str, text: Optional[str] = None) -> bool:
        t = self.peek()
        return t.type == type_ and (text is None or t.text == text)

    def at_name(self, text: str) -> bool:
        return self.at("NAME", text)

    # -- entry --------------------------------------------------------------

    def parse_snippet(self) -> _P:
        while self.at("NEWLINE"):
            self.next()
        if not self.at_name("def"):
            raise self.err("snippet must start with a function definition")
        fn = self.parse_funcdef()
        while self.at("NEWLINE"):
            self.next()
        if not self.at("EOF"):
            raise self.err("trailing content after the function")
        return fn

    def parse_funcdef(self) -> _P:
        d = self.expect("NAME", "def")
        name = self.expect("NAME")
        if name.text in KEYWORDS:
            raise self.err("keyword used as function name", name)
        self.expect("OP", "(")
        args = _P("Arguments", None, (self.peek().start, self.peek().start))
        while not self.at("OP", ")"):
            p = self.expect("NAME")
            if p.text in KEYWORDS:
                raise self.err("keyword used as parameter name", p)
            if self.at("OP", "=") or self.at("OP", "*") or self.at("OP", "**"):
                raise self.err("only plain parameters are supported")
            args.children.append(("args", _P("Param", p.text, (p.start, p.end))))
            if self.at("OP", ","):
                self.next()
            elif not self.at("OP", ")"):
                raise self.err("expected ',' or ')' in parameter list")
        close = self.expect("OP", ")")
        args.span = (args.span[0], close.end)
        self.expect("OP", ":")
        body, end = self.parse_block()
        fn = _P("FunctionDef", name.text, (d.start, end))
        fn.children = [("args", args)] + [("body", s) for s in body]
        return fn

    def parse_block(self) -> tuple[list[_P], int]:
        self.expect("NEWLINE")
        self.expect("INDENT")
        stmts: list[_P] = []
        while not self.at("DEDENT"):
            stmts.append(self.parse_stmt())
        self.expect("DEDENT")
        if not stmts:
            raise self.err("empty block")
        return stmts, stmts[-1].span[1]

    # -- statements ---------------------------------------------------------

    def parse_stmt(self) -> _P:
        t = self.peek()
        if t.type == "NAME":
            if t.text == "def":
                return self.parse_funcdef()
            if t.text == "return":
                return self.parse_return()
            if t.text == "pass":
                self.next()
                self.expect("NEWLINE")
                return _P("Pass", None, (t.start, t.end))
            if t.text == "if":
                return self.parse_if()
            if t.text == "while":
                return self.parse_while()
            if t.text == "for":
                return self.parse_for()
            if t.text in ("elif", "else"):
                raise self.err(f"{t.text!r} without matching 'if'")
            if t.text in KEYWORDS and t.text not in ("not", "True", "False", "None"):
                raise self.err(f"unsupported statement {t.text!r}")
        return self.parse_expr_stmt()

    def parse_return(self) -> _P:
        t = self.expect("NAME", "return")
        node = _P("Return", None, (t.start, t.end))
        if not self.at("NEWLINE"):
            v = self.parse_testlist()
            node.children.append(("value", v))
            node.span = (t.start, v.span[1])
        self.expect("NEWLINE")
        return node

    def parse_if(self) -> _P:
        t = self.next()  # 'if' or 'elif'
        test = self.parse_test()
        self.expect("OP", ":")
        body, end = self.parse_block()
        node = _P("If", None, (t.start, end))
        node.children = [("test", test)] + [("body", s) for s in body]
        if self.at_name("elif"):
            sub = self.parse_if()
            node.children.append(("orelse", sub))
            node.span = (t.start, sub.span[1])
        elif self.at_name("else"):
            self.next()
            self.expect("OP", ":")
            orelse, end = self.parse_block()
            node.children.extend(("orelse", s) for s in orelse)
            node.span = (t.start, end)
        return node

    def parse_while(self) -> _P:
        t = self.expect("NAME", "while")
        test = self.parse_test()
        self.expect("OP", ":")
        body, end = self.parse_block()
        node = _P("While", None, (t.start, end))
        node.children = [("test", test)] + [("body", s) for s in body]
        return node

    def parse_for(self) -> _P:
        t = self.expect("NAME", "for")
        target = self.parse_target_list()
        self._check_target(target)
        self.expect("NAME", "in")
        it = self.parse_testlist()
        self.expect("OP", ":")
        body, end = self.parse_block()
        node = _P("ForIn", None, (t.start, end))
        node.children = [("target", target), ("iter", it)] + [("body", s) for s in body]
        return node

    def parse_expr_stmt(self) -> _P:
        first = self.parse_testlist()
        t = self.peek()
        if t.type == "OP" and t.text == "=":
            self.next()
            self._check_target(first)
            value = self.parse_testlist()
            if self.at("OP", "="):
                raise self.err("chained assignment is not supported")
            self.expect("NEWLINE")
            node = _P("Assign", None, (first.span[0], value.span[1]))
            node.children = [("targets", first), ("value", value)]
            return node
        if t.type == "OP" and t.text in AUG_OPS:
            self.next()
            self._check_target(first, allow_tuple=False)
            op_leaf = _P("BinOp", AUG_OPS[t.text], (t.start, t.end))
            value = self.parse_testlist()
            self.expect("NEWLINE")
            node = _P("AugAssign", None, (first.span[0], value.span[1]))
            node.children = [("target", first), ("op", op_leaf), ("value", value)]
            return node
        self.expect("NEWLINE")
        node = _P("ExprStmt", None, first.span)
        node.children = [("value", first)]
        return node

    def _check_target(self, node: _P, allow_tuple: bool = True) -> None:
        if node.kind in ("Name", "Attribute", "Subscript"):
            return
        if node.kind == "TupleLit" and allow_tuple and node.children:
            for _, c in node.children:
                self._check_target(c, allow_tuple=False)
            return
        raise self.err(f"invalid assignment target of kind {node.kind}")

    def parse_target_list(self) -> _P:
        """Comma-separated postfix targets; `in` is a delimiter here, never
        a comparison operator."""
        first = self.parse_postfix()
        if not self.at("OP", ","):
            return first
        items = [first]
        while self.at("OP", ","):
            self.next()
            if self.at_name("in"):
                break
            items.append(self.parse_postfix())
        node = _P("TupleLit", None, (first.span[0], items[-1].span[1]))
        node.children = [("elts", e) for e in items]
        return node

    # -- expressions --------------------------------------------------------

    def parse_testlist(self) -> _P:
        first = self.parse_test()
        if not self.at("OP", ","):
            return first
        items = [first]
        while self.at("OP", ","):
            self.next()
            t = self.peek()
            if t.type == "NEWLINE" or (t.type == "OP" and t.text in (")", "]", "}", ":", "=")):
                break
            items.append(self.parse_test())
        node = _P("TupleLit", None, (first.span[0], items[-1].span[1]))
        node.children = [("elts", e) for e in items]
        return node

    def parse_test(self) -> _P:
        return self.parse_or()

    def parse_or(self) -> _P:
        return self._boolop("or", self.parse_and)

    def parse_and(self) -> _P:
        return self._boolop("and", self.parse_not)

    def _boolop(self, word: str, sub) -> _P:
        first = sub()
        if not self.at_name(word):
            return first
        items = [first]
        while self.at_name(word):
            self.next()
            items.append(sub())
        node = _P("BoolOp", word, (items[0].span[0], items[-1].span[1]))
        node.children = [("values", e) for e in items]
        return node

    def parse_not(self) -> _P:
        if self.at_name("not"):
            t = self.next()
            operand = self.parse_not()
            node = _P("UnaryOp", "not", (t.start, operand.span[1]))
            node.children = [("operand", operand)]
            return node
        return self.parse_comparison()

    def _comp_op(self) -> Optional[Tok]:
        t = self.peek()
        if t.type == "OP" and t.text in ("==", "!=", "<", "<=", ">", ">="):
            return self.next()
        if t.type == "NAME" and t.text == "in":
            return self.next()
        if t.type == "NAME" and t.text == "is":
            self.next()
            if self.at_name("not"):
                t2 = self.next()
                return Tok("NAME", "is not", t.line, t.col, t.start, t2.end)
            return t
        if t.type == "NAME" and t.text == "not" and self.peek(1).type == "NAME" and self.peek(1).text == "in":
            self.next()
            t2 = self.next()
            return Tok("NAME", "not in", t.line, t.col, t.start, t2.end)
        return None

    def parse_comparison(self) -> _P:
        left = self.parse_arith()
        op = self._comp_op()
        if op is None:
            return left
        node = _P("Compare", None, left.span)
        node.children = [("left", left)]
        while op is not None:
            if op.text not in COMPARE_OPS:
                raise self.err(f"unsupported comparison operator {op.text!r}", op)
            op_leaf = _P("CompareOp", op.text, (op.start, op.end))
            comp = self.parse_arith()
            node.children.append(("ops", op_leaf))
            node.children.append(("comparators", comp))
            node.span = (node.span[0], comp.span[1])
            op = self._comp_op()
        return node

    def parse_arith(self) -> _P:
        return self._left_assoc(self.parse_term, ("+", "-"))

    def parse_term(self) -> _P:
        return self._left_assoc(self.parse_factor, ("*", "/", "%"))

    def _left_assoc(self, sub, ops: tuple[str, ...]) -> _P:
        left = sub()
        while self.at("OP") and self.peek().text in ops:
            t = self.next()
            right = sub()
            node = _P("BinOp", t.text, (left.span[0], right.span[1]))
            node.children = [("left", left), ("right", right)]
            left = node
        return left

    def parse_factor(self) -> _P:
        if self.at("OP", "-"):
            t = self.next()
            operand = self.parse_factor()
            node = _P("UnaryOp", "-", (t.start, operand.span[1]))
            node.children = [("operand", operand)]
            return node
        if self.at("OP", "+"):
            raise self.err("unsupported unary operator")
        return self.parse_power()

    def parse_power(self) -> _P:
        base = self.parse_postfix()
        if self.at("OP", "**"):
            self.next()
            exp = self.parse_factor()
            node = _P("BinOp", "**", (base.span[0], exp.span[1]))
            node.children = [("left", base), ("right", exp)]
            return node
        return base

    def parse_postfix(self) -> _P:
        node = self.parse_atom()
        while True:
            if self.at("OP", "."):
                self.next()
                attr = self.expect("NAME")
                if attr.text in KEYWORDS:
                    raise self.err("keyword used as attribute name", attr)
                wrap = _P("Attribute", attr.text, (node.span[0], attr.end))
                wrap.children = [("value", node)]
                node = wrap
            elif self.at("OP", "("):
                self.next()
                call = _P("Call", None, node.span)
                pos_args: list[tuple[str, _P]] = []
                kw_args: list[tuple[str, _P]] = []
                while not self.at("OP", ")"):
                    if (
                        self.at("NAME") and self.peek().text not in KEYWORDS
                        and self.peek(1).type == "OP" and self.peek(1).text == "="
                    ):
                        k = self.next()
                        self.next()  # '='
                        key_leaf = _P("Param", k.text, (k.start, k.end))
                        val = self.parse_test()
                        kw = _P("KeywordArg", None, (k.start, val.span[1]))
                        kw.children = [("target", key_leaf), ("value", val)]
                        kw_args.append(("keywords", kw))
                    else:
                        if kw_args:
                            raise self.err("positional argument after keyword argument")
                        if self.at("OP", "*") or self.at("OP", "**"):
                            raise self.err("star-arguments are not supported")
                        pos_args.append(("args", self.parse_test()))
                    if self.at("OP", ","):
                        self.next()
                    elif not self.at("OP", ")"):
                        raise self.err("expected ',' or ')' in argument list")
                close = self.expect("OP", ")")
                call.children = [("func", node)] + pos_args + kw_args
                call.span = (node.span[0], close.end)
                node = call
            elif self.at("OP", "["):
                self.next()
                if self.at("OP", ":") or self.at("OP", "]"):
                    raise self.err("slices are not supported")
                index = self.parse_testlist()
                if self.at("OP", ":"):
                    raise self.err("slices are not supported")
                close = self.expect("OP", "]")
                sub = _P("Subscript", None, (node.span[0], close.end))
                sub.children = [("value", node), ("slice", index)]
                node = sub
            else:
                return node

    def parse_atom(self) -> _P:
        t = self.peek()
        if t.type == "NAME":
            if t.text in ("True", "False", "None"):
                self.next()
                return _P("Constant", t.text, (t.start, t.end))
            if t.text in KEYWORDS:
                raise self.err(f"unsupported expression keyword {t.text!r}")
            self.next()
            return _P("Name", t.text, (t.start, t.end))
        if t.type == "NUMBER":
            self.next()
            return _P("Constant", t.text, (t.start, t.end))
        if t.type == "STRING":
            self.next()
            if self.at("STRING"):
                raise self.err("implicit string concatenation is not supported")
            return _P("Constant", t.text, (t.start, t.end))
        if t.type == "OP" and t.text == "(":
            self.next()
            if self.at("OP", ")"):
                close = self.next()
                return _P("TupleLit", None, (t.start, close.end))
            first = self.parse_test()
            if self.at("OP", ","):
                items = [first]
                while self.at("OP", ","):
                    self.next()
                    if self.at("OP", ")"):
                        break
                    items.append(self.parse_test())
                close = self.expect("OP", ")")
                node = _P("TupleLit", None, (t.start, close.end))
                node.children = [("elts", e) for e in items]
                return node
            self.expect("OP", ")")
            return first
        if t.type == "OP" and t.text == "[":
            self.next()
            items = []
            while not self.at("OP", "]"):
                items.append(self.parse_test())
                if self.at("OP", ","):
                    self.next()
                elif not self.at("OP", "]"):
                    raise self.err("expected ',' or ']' in list literal")
            close = self.expect("OP", "]")
            node = _P("ListLit", None, (t.start, close.end))
            node.children = [("elts", e) for e in items]
            return node
        if t.type == "OP" and t.text == "{":
            self.next()
            node = _P("DictLit", None, (t.start, t.end))
            while not self.at("OP", "}"):
                k = self.parse_test()
                if not self.at("OP", ":"):
                    raise self.err("set literals are not supported")
                self.next()
                v = self.parse_test()
                node.children.append(("keys", k))
                node.children.append(("values", v))
                if self.at("OP", ","):
                    self.next()
                elif not self.at("OP", "}"):
                    raise self.err("expected ',' or '}' in dict literal")
            close = self.expect("OP", "}")
            node.span = (t.start, close.end)
            return node
        raise self.err(f"unexpected token {t.text or t.type!r}")


def parse(source: str) -> Ast:
    """Parses one function definition; raises ParseError on any violation."""
    toks = tokenize(source)
    p = _Parser(toks)
    root = p.parse_snippet()
    return _linearize(root, source)
