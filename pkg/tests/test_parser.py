"""Tokenizer, parser, and unparser behavior on the supported subset."""

import pytest
from hypothesis import given, settings, strategies as st

from corpusgen import make_source
from sscrepair.parser import ParseError, parse, tokenize
from sscrepair.unparse import unparse


class TestTokenizer:
    def test_indent_dedent_pairing(self):
        src = "def f(x):\n    if x:\n        pass\n    return x\n"
        kinds = [t.type for t in tokenize(src)]
        assert kinds.count("INDENT") == kinds.count("DEDENT")

    def test_bracket_continuation_joins_lines(self):
        src = "def f(x):\n    return g(x,\n        1)\n"
        kinds = [t.type for t in tokenize(src)]
        assert kinds.count("INDENT") == 1

    def test_comments_ignored(self):
        a = [(t.type, t.text) for t in tokenize("def f(x):\n    return x\n")]
        b = [(t.type, t.text)
             for t in tokenize("def f(x):  # doc\n    return x  # tail\n")]
        assert a == b

    def test_string_with_escapes_and_hash(self):
        toks = [t for t in tokenize('def f(x):\n    return "a\\"b # c"\n')
                if t.type == "STRING"]
        assert len(toks) == 1

    def test_tabs_rejected(self):
        with pytest.raises(ParseError):
            list(tokenize("def f(x):\n\treturn x\n"))

    def test_fstring_rejected(self):
        with pytest.raises(ParseError):
            list(tokenize('def f(x):\n    return f"{x}"\n'))

    def test_bad_dedent_rejected(self):
        with pytest.raises(ParseError):
            list(tokenize("def f(x):\n    if x:\n        pass\n      pass\n"))


GOLDEN = "def f(a, b):\n    return a < b\n"


class TestParser:
    def test_golden_compare(self):
        t = parse(GOLDEN)
        kinds = [nd.kind for nd in t.nodes]
        assert kinds == ["FunctionDef", "Arguments", "Param", "Param",
                         "Return", "Compare", "Name", "CompareOp", "Name"]
        cmp_node = t.nodes[5]
        assert [t.nodes[c].relation for c in cmp_node.children] == \
            ["left", "ops", "comparators"]
        assert t.nodes[7].value == "<"

    def test_chained_comparison(self):
        t = parse("def f(a, b, c):\n    return a < b <= c\n")
        ops = [nd.value for nd in t.nodes if nd.kind == "CompareOp"]
        assert ops == ["<", "<="]

    def test_merged_operators(self):
        t = parse("def f(a, b):\n    return a is not b\n")
        assert [nd.value for nd in t.nodes if nd.kind == "CompareOp"] == ["is not"]
        t = parse("def f(a, b):\n    return a not in b\n")
        assert [nd.value for nd in t.nodes if nd.kind == "CompareOp"] == ["not in"]

    def test_elif_chain(self):
        t = parse("def f(a):\n    if a > 1:\n        return 1\n"
                  "    elif a > 0:\n        return 0\n    else:\n"
                  "        return 2\n")
        ifs = [nd for nd in t.nodes if nd.kind == "If"]
        assert len(ifs) == 2
        assert ifs[1].relation == "orelse"

    def test_augassign_op_leaf(self):
        t = parse("def f(a):\n    a += 1\n    return a\n")
        aug = next(nd for nd in t.nodes if nd.kind == "AugAssign")
        op = next(t.nodes[c] for c in aug.children
                  if t.nodes[c].relation == "op")
        assert op.kind == "BinOp" and op.value == "+" and op.children == ()

    def test_keyword_argument(self):
        t = parse("def f(a):\n    return g(a, key=a)\n")
        kw = next(nd for nd in t.nodes if nd.kind == "KeywordArg")
        label = next(t.nodes[c] for c in kw.children
                     if t.nodes[c].relation == "target")
        assert label.kind == "Param" and label.value == "key"

    def test_tuple_for_target(self):
        t = parse("def f(xs):\n    for i, j in xs:\n        return i + j\n")
        assert any(nd.kind == "TupleLit" and nd.relation == "target"
                   for nd in t.nodes)

    def test_power_right_associative(self):
        t = parse("def f(a):\n    return a ** a ** a\n")
        tops = [nd for nd in t.nodes if nd.kind == "BinOp" and nd.value == "**"]
        outer = tops[0]
        right = next(t.nodes[c] for c in outer.children
                     if t.nodes[c].relation == "right")
        assert right.kind == "BinOp" and right.value == "**"

    def test_error_carries_position(self):
        with pytest.raises(ParseError) as exc:
            parse("def f(a):\n    return a +\n")
        assert exc.value.line == 2

    @pytest.mark.parametrize("bad", [
        "x = 1\n",                                   # no function definition
        "def f(a):\n    return [i for i in a]\n",    # comprehension
        "def f(*args):\n    return args\n",          # star parameter
        "def f(a):\n    return a[1:2]\n",            # slice
        "def f(a):\n    yield a\n",                  # generator
    ])
    def test_rejected_constructs(self, bad):
        with pytest.raises(ParseError):
            parse(bad)

    def test_spans_cover_tokens(self):
        src = GOLDEN
        t = parse(src)
        for nd in t.nodes:
            if nd.kind == "Name":
                start, end = nd.span
                assert src[start:end] == nd.value


class TestUnparse:
    CASES = [
        "def f(a, b):\n    return (a, b)\n",
        "def f(a):\n    return (a,)\n",
        "def f(a):\n    return -a ** 2\n",
        "def f(a):\n    return (a + 1) * 2\n",
        "def f(a, b):\n    return a or b and not a\n",
        "def f(d, k):\n    d[k] = {1: 2}\n    return d[k]\n",
        "def f(a):\n    a.b.c(1, x=2)\n    return a\n",
        "def f(a):\n    while a > 0:\n        a -= 1\n    return a\n",
    ]

    @pytest.mark.parametrize("src", CASES)
    def test_fixpoint(self, src):
        once = unparse(parse(src))
        assert parse(once).structure_key == parse(src).structure_key
        assert unparse(parse(once)) == once

    def test_elif_rendering(self):
        src = ("def f(a):\n    if a > 1:\n        return 1\n"
               "    elif a > 0:\n        return 0\n    else:\n"
               "        return 2\n")
        assert "elif" in unparse(parse(src))


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 500), idx=st.integers(0, 40))
def test_property_template_fixpoint(seed, idx):
    src = make_source(seed, idx)
    t = parse(src)
    rendered = unparse(t)
    assert parse(rendered).structure_key == t.structure_key
