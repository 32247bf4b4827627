"""Core AST data model: preorder-indexed trees, repair payloads, edits, diffing.

Every other module works in terms of these types. Trees are immutable after
construction; all edit operations return new trees with node ids re-assigned
by a full preorder linearization.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterator, Optional, Union

# Closed node-kind enumeration. Order is load-bearing: kind ids used for
# embeddings are indices into this tuple.
KINDS = (
    "FunctionDef", "Arguments", "Param", "If", "While", "ForIn", "Return",
    "Assign", "AugAssign", "ExprStmt", "Pass", "Call", "Attribute", "Name",
    "Constant", "Compare", "CompareOp", "BoolOp", "BinOp", "UnaryOp",
    "Subscript", "ListLit", "TupleLit", "DictLit", "KeywordArg",
)
KIND_ID = {k: i for i, k in enumerate(KINDS)}

# Closed parent-relation label set (field name on the parent).
RELATIONS = (
    "root", "args", "body", "orelse", "test", "target", "targets", "iter",
    "value", "left", "ops", "comparators", "values", "operand", "func",
    "keywords", "slice", "elts", "keys", "op", "right",
)
RELATION_ID = {r: i for i, r in enumerate(RELATIONS)}

# Kinds that carry a surface value string.
VALUED_KINDS = frozenset({
    "Name", "Constant", "CompareOp", "BoolOp", "BinOp", "UnaryOp",
    "Attribute", "Param", "FunctionDef",
})

COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=", "in", "not in", "is", "is not")
# Operators eligible for CompReplace; `is`/`is not` belong to IsSwap.
COMP_REPLACE_OPS = ("==", "!=", "<", "<=", ">", ">=", "in", "not in")
IS_OPS = ("is", "is not")


class PayloadMismatch(Exception):
    """Raised when a payload does not fit the node kind at its location."""


@dataclass(frozen=True)
class Node:
    id: int
    kind: str
    value: Optional[str]
    parent: Optional[int]
    relation: str
    children: tuple[int, ...]
    span: Optional[tuple[int, int]] = None


@dataclass(frozen=True)
class Ast:
    nodes: tuple[Node, ...]
    source: Optional[str] = None

    @property
    def n(self) -> int:
        return len(self.nodes)

    def node(self, nid: int) -> Node:
        return self.nodes[nid]

    @cached_property
    def structure_key(self) -> tuple:
        """Span-insensitive identity used for structural equality."""
        return tuple((nd.kind, nd.value, nd.parent, nd.relation) for nd in self.nodes)

    def check(self) -> None:
        """Validate all structural invariants; raises ValueError on violation."""
        roots = [nd for nd in self.nodes if nd.parent is None]
        if len(roots) != 1 or roots[0].id != 0 or roots[0].relation != "root":
            raise ValueError("tree must have exactly one root at id 0 with relation 'root'")
        for i, nd in enumerate(self.nodes):
            if nd.id != i:
                raise ValueError(f"node id {nd.id} at index {i}")
            if nd.kind not in KIND_ID:
                raise ValueError(f"unknown kind {nd.kind}")
            if nd.relation not in RELATION_ID:
                raise ValueError(f"unknown relation {nd.relation}")
            if (nd.value is not None) != (nd.kind in VALUED_KINDS):
                raise ValueError(f"value presence mismatch on {nd.kind} node {i}")
            if nd.kind == "CompareOp" and nd.value not in COMPARE_OPS:
                raise ValueError(f"bad CompareOp value {nd.value!r}")
            if nd.parent is not None:
                if nd.parent >= nd.id:
                    raise ValueError(f"parent {nd.parent} not before child {nd.id}")
                if nd.id not in self.nodes[nd.parent].children:
                    raise ValueError(f"node {nd.id} missing from parent's children")
            for c in nd.children:
                if self.nodes[c].parent != nd.id:
                    raise ValueError(f"child {c} does not point back to {nd.id}")

    def structurally_equal(self, other: "Ast") -> bool:
        return self.structure_key == other.structure_key

    def subtree_ids(self, nid: int) -> range:
        """Contiguous preorder range covered by the subtree rooted at nid."""
        end = nid + 1
        stack = list(self.nodes[nid].children)
        while stack:
            c = stack.pop()
            end = max(end, c + 1)
            stack.extend(self.nodes[c].children)
        return range(nid, end)


# ---------------------------------------------------------------------------
# Repair payloads

@dataclass(frozen=True)
class SetOperator:
    op: str


@dataclass(frozen=True)
class SetVariable:
    name: str


@dataclass(frozen=True)
class WrapSelf:
    pass


@dataclass(frozen=True)
class ToggleIs:
    pass


@dataclass(frozen=True)
class StripSelf:
    """Removes a `self.` wrapper; appears in diffs and bug injection, never
    as a repair candidate."""


Payload = Union[SetOperator, SetVariable, WrapSelf, ToggleIs, StripSelf]


def payload_to_json(p: Payload) -> dict:
    if isinstance(p, SetOperator):
        return {"kind": "set_operator", "op": p.op}
    if isinstance(p, SetVariable):
        return {"kind": "set_variable", "name": p.name}
    if isinstance(p, WrapSelf):
        return {"kind": "wrap_self"}
    if isinstance(p, ToggleIs):
        return {"kind": "toggle_is"}
    if isinstance(p, StripSelf):
        return {"kind": "strip_self"}
    raise TypeError(f"not a payload: {p!r}")


def payload_from_json(obj: dict) -> Payload:
    k = obj["kind"]
    if k == "set_operator":
        return SetOperator(obj["op"])
    if k == "set_variable":
        return SetVariable(obj["name"])
    if k == "wrap_self":
        return WrapSelf()
    if k == "toggle_is":
        return ToggleIs()
    if k == "strip_self":
        return StripSelf()
    raise ValueError(f"unknown payload kind {k!r}")


def describe_payload(p: Payload, current: Optional[str] = None) -> str:
    """Human-readable candidate label for diffs and the console."""
    if isinstance(p, SetOperator):
        return f"use operator `{p.op}`"
    if isinstance(p, SetVariable):
        return f"use variable `{p.name}`"
    if isinstance(p, WrapSelf):
        return f"use `self.{current}`" if current else "add `self.` accessor"
    if isinstance(p, ToggleIs):
        return f"use `{'is not' if current == 'is' else 'is'}`"
    if isinstance(p, StripSelf):
        return "drop `self.` accessor"
    raise TypeError(f"not a payload: {p!r}")


# ---------------------------------------------------------------------------
# Repair instances

@dataclass(frozen=True)
class RepairCandidate:
    payload: Payload
    is_noop: bool
    # SetVariable only: preorder ids of every occurrence of the variable.
    occurrences: tuple[int, ...] = ()


BUG_TYPES = ("VarReplace", "CompReplace", "IsSwap", "ClassMember")


@dataclass(frozen=True)
class RepairInstance:
    id: int
    bug_type: str
    location: int
    candidates: tuple[RepairCandidate, ...]
    reference: Optional[int] = None

    @property
    def noop_index(self) -> int:
        return next(i for i, c in enumerate(self.candidates) if c.is_noop)

    def with_reference(self, ref: int) -> "RepairInstance":
        return replace(self, reference=ref)


# ---------------------------------------------------------------------------
# Mutable tree used internally for edits; linearized back to Ast.

class _T:
    __slots__ = ("kind", "value", "children")

    def __init__(self, kind: str, value: Optional[str], children=None):
        self.kind = kind
        self.value = value
        self.children: list[tuple[str, "_T"]] = children or []


def _to_tree(ast: Ast) -> tuple[_T, list[_T]]:
    """Returns the mutable root plus a by-id lookup of mutable nodes."""
    by_id: list[_T] = [None] * ast.n  # type: ignore[list-item]

    def build(nid: int) -> _T:
        nd = ast.nodes[nid]
        t = _T(nd.kind, nd.value)
        by_id[nid] = t
        for c in nd.children:
            t.children.append((ast.nodes[c].relation, build(c)))
        return t

    root = build(0)
    return root, by_id


def _linearize(root: _T) -> tuple[Ast, dict[int, int]]:
    """Preorder-numbers a mutable tree; returns the Ast and an id(obj)->nid map."""
    nodes: list[Node] = []
    obj_ids: dict[int, int] = {}

    def walk(t: _T, parent: Optional[int], relation: str) -> int:
        nid = len(nodes)
        obj_ids[id(t)] = nid
        nodes.append(None)  # type: ignore[arg-type]
        child_ids = []
        for rel, c in t.children:
            child_ids.append(walk(c, nid, rel))
        nodes[nid] = Node(nid, t.kind, t.value, parent, relation, tuple(child_ids))
        return nid

    walk(root, None, "root")
    return Ast(tuple(nodes)), obj_ids


def _edit_tree(by_id: list[_T], location: int, payload: Payload) -> _T:
    """Applies one payload in place; returns the node now standing at the
    edit site (useful to recover its id after re-linearization)."""
    t = by_id[location]
    if isinstance(t, type(None)):
        raise PayloadMismatch(f"no node at {location}")
    if isinstance(payload, SetOperator):
        if t.kind != "CompareOp":
            raise PayloadMismatch(f"SetOperator on {t.kind}")
        if payload.op not in COMPARE_OPS:
            raise PayloadMismatch(f"unknown operator {payload.op!r}")
        t.value = payload.op
        return t
    if isinstance(payload, ToggleIs):
        if t.kind != "CompareOp" or t.value not in IS_OPS:
            raise PayloadMismatch(f"ToggleIs on {t.kind} {t.value!r}")
        t.value = "is not" if t.value == "is" else "is"
        return t
    if isinstance(payload, SetVariable):
        if t.kind != "Name":
            raise PayloadMismatch(f"SetVariable on {t.kind}")
        t.value = payload.name
        return t
    if isinstance(payload, WrapSelf):
        if t.kind != "Name" or t.value == "self":
            raise PayloadMismatch(f"WrapSelf on {t.kind} {t.value!r}")
        # Name x  ->  Attribute(value=x, children=[Name self])
        attr = t.value
        t.kind = "Attribute"
        t.value = attr
        t.children = [("value", _T("Name", "self"))]
        return t
    if isinstance(payload, StripSelf):
        ok = (
            t.kind == "Attribute"
            and len(t.children) == 1
            and t.children[0][1].kind == "Name"
            and t.children[0][1].value == "self"
        )
        if not ok:
            raise PayloadMismatch("StripSelf needs a `self.<attr>` node")
        t.kind = "Name"
        t.children = []
        return t
    raise PayloadMismatch(f"unknown payload {payload!r}")


def apply_payload(ast: Ast, location: int, payload: Payload) -> Ast:
    """Applies one edit, returning a fresh preorder-renumbered tree."""
    if not 0 <= location < ast.n:
        raise PayloadMismatch(f"location {location} out of range")
    root, by_id = _to_tree(ast)
    _edit_tree(by_id, location, payload)
    out, _ = _linearize(root)
    return out


def apply_payloads(ast: Ast, edits: list[tuple[int, Payload]]) -> Ast:
    """Applies several edits at distinct locations of `ast`.

    Locations all refer to `ast`; edits are applied to one mutable copy, so
    structural edits cannot shift each other's sites.
    """
    root, by_id = _to_tree(ast)
    for location, payload in edits:
        _edit_tree(by_id, location, payload)
    out, _ = _linearize(root)
    return out


def apply_candidate(ast: Ast, instance: RepairInstance, candidate_index: int) -> Ast:
    cand = instance.candidates[candidate_index]
    if cand.is_noop:
        return ast
    return apply_payload(ast, instance.location, cand.payload)


# ---------------------------------------------------------------------------
# Diffing

@dataclass(frozen=True)
class Identical:
    pass


@dataclass(frozen=True)
class SingleEdit:
    location: int  # node id in the *before* tree
    payload: Payload


@dataclass(frozen=True)
class Complex:
    pass


DiffResult = Union[Identical, SingleEdit, Complex]


def ast_diff(a: Ast, b: Ast) -> DiffResult:
    """Classifies b relative to a as no change, one candidate-shaped edit,
    or anything bigger."""
    if a.structurally_equal(b):
        return Identical()
    if a.n == b.n:
        diffs = []
        for na, nb in zip(a.nodes, b.nodes):
            if (na.kind, na.parent, na.relation, na.children) != (
                nb.kind, nb.parent, nb.relation, nb.children
            ):
                return Complex()
            if na.value != nb.value:
                diffs.append((na, nb))
        if len(diffs) != 1:
            return Complex()
        na, nb = diffs[0]
        if na.kind == "CompareOp":
            if {na.value, nb.value} == set(IS_OPS):
                return SingleEdit(na.id, ToggleIs())
            return SingleEdit(na.id, SetOperator(nb.value))
        if na.kind == "Name":
            return SingleEdit(na.id, SetVariable(nb.value))
        return Complex()
    if b.n == a.n + 1:
        # Candidate wrap sites in a: the divergence point is the first
        # preorder index where the trees differ.
        for nid in _wrap_sites(a, b):
            if apply_payload(a, nid, WrapSelf()).structurally_equal(b):
                return SingleEdit(nid, WrapSelf())
        return Complex()
    if a.n == b.n + 1:
        for nid in _strip_sites(a):
            if apply_payload(a, nid, StripSelf()).structurally_equal(b):
                return SingleEdit(nid, StripSelf())
        return Complex()
    return Complex()


def _first_divergence(a: Ast, b: Ast) -> int:
    for na, nb in zip(a.nodes, b.nodes):
        if (na.kind, na.value, na.parent, na.relation) != (nb.kind, nb.value, nb.parent, nb.relation):
            return na.id
    return min(a.n, b.n)


def _wrap_sites(a: Ast, b: Ast) -> Iterator[int]:
    d = _first_divergence(a, b)
    for nd in a.nodes:
        if nd.kind == "Name" and nd.value != "self" and nd.id <= d:
            yield nd.id


def _strip_sites(a: Ast) -> Iterator[int]:
    for nd in a.nodes:
        if (
            nd.kind == "Attribute"
            and len(nd.children) == 1
            and a.nodes[nd.children[0]].kind == "Name"
            and a.nodes[nd.children[0]].value == "self"
        ):
            yield nd.id


# ---------------------------------------------------------------------------
# Featurization

@dataclass(frozen=True)
class FeatureConfig:
    """Which per-node streams feed the encoder. At least one must be on."""
    position: bool = True
    kind: bool = True
    relation: bool = True
    value: bool = True
    position_cap: int = 300

    @property
    def streams(self) -> tuple[str, ...]:
        out = []
        if self.position:
            out.append("position")
        if self.kind:
            out.append("kind")
        if self.relation:
            out.append("relation")
        if self.value:
            out.append("value")
        if not out:
            raise ValueError("at least one feature stream must be enabled")
        return tuple(out)

    def to_json(self) -> dict:
        return {
            "position": self.position, "kind": self.kind,
            "relation": self.relation, "value": self.value,
            "position_cap": self.position_cap,
        }

    @staticmethod
    def from_json(obj: dict) -> "FeatureConfig":
        return FeatureConfig(
            position=obj["position"], kind=obj["kind"], relation=obj["relation"],
            value=obj["value"], position_cap=obj["position_cap"],
        )


def node_features(ast: Ast, vocab, config: FeatureConfig) -> dict[str, list[int]]:
    """Integer feature ids per enabled stream, indexed by preorder position.

    Valueless nodes use the vocab PAD id in the value stream.
    """
    out: dict[str, list[int]] = {s: [] for s in config.streams}
    for nd in ast.nodes:
        if config.position:
            out["position"].append(min(nd.id, config.position_cap))
        if config.kind:
            out["kind"].append(KIND_ID[nd.kind])
        if config.relation:
            out["relation"].append(RELATION_ID[nd.relation])
        if config.value:
            out["value"].append(vocab.id_of(nd.value) if nd.value is not None else vocab.pad_id)
    return out


# ---------------------------------------------------------------------------
# JSON interchange

def ast_to_json(ast: Ast) -> dict:
    nodes = []
    for nd in ast.nodes:
        obj: dict = {"id": nd.id, "kind": nd.kind}
        if nd.value is not None:
            obj["value"] = nd.value
        if nd.parent is not None:
            obj["parent"] = nd.parent
        obj["relation"] = nd.relation
        obj["children"] = list(nd.children)
        if nd.span is not None:
            obj["span"] = list(nd.span)
        nodes.append(obj)
    return {"nodes": nodes}


def ast_from_json(obj: dict, source: Optional[str] = None) -> Ast:
    nodes = []
    for nd in obj["nodes"]:
        span = tuple(nd["span"]) if "span" in nd else None
        nodes.append(Node(
            nd["id"], nd["kind"], nd.get("value"), nd.get("parent"),
            nd["relation"], tuple(nd["children"]), span,
        ))
    ast = Ast(tuple(nodes), source=source)
    ast.check()
    return ast


# ---------------------------------------------------------------------------
# Scope helpers shared by the candidate generator, injector, and classifier.

def bound_variables(ast: Ast) -> set[str]:
    """Parameters plus assignment/for targets, `self` excluded."""
    out: set[str] = set()
    for nd in ast.nodes:
        # Param under KeywordArg is a keyword label, not a binding.
        if nd.kind == "Param" and ast.nodes[nd.parent].kind == "Arguments":
            out.add(nd.value)  # type: ignore[arg-type]
        elif nd.kind in ("Assign", "ForIn"):
            rel = "targets" if nd.kind == "Assign" else "target"
            for c in nd.children:
                if ast.nodes[c].relation == rel:
                    out.update(_target_names(ast, c))
    out.discard("self")
    return out


def _target_names(ast: Ast, nid: int) -> Iterator[str]:
    nd = ast.nodes[nid]
    if nd.kind == "Name":
        yield nd.value  # type: ignore[misc]
    elif nd.kind == "TupleLit":
        for c in nd.children:
            yield from _target_names(ast, c)
    # Attribute / Subscript targets bind nothing new.


def binding_name_ids(ast: Ast) -> set[int]:
    """Ids of Name nodes in binding position (assign/for targets)."""
    out: set[int] = set()
    for nd in ast.nodes:
        if nd.kind in ("Assign", "ForIn"):
            rel = "targets" if nd.kind == "Assign" else "target"
            for c in nd.children:
                if ast.nodes[c].relation == rel:
                    out.update(_binding_ids(ast, c))
    return out


def _binding_ids(ast: Ast, nid: int) -> Iterator[int]:
    nd = ast.nodes[nid]
    if nd.kind == "Name":
        yield nd.id
    elif nd.kind == "TupleLit":
        for c in nd.children:
            yield from _binding_ids(ast, c)


def usage_name_ids(ast: Ast) -> list[int]:
    """Ids of Name nodes in usage (non-binding) position, preorder."""
    binding = binding_name_ids(ast)
    return [nd.id for nd in ast.nodes if nd.kind == "Name" and nd.id not in binding]


def occurrence_ids(ast: Ast, name: str) -> tuple[int, ...]:
    """Every node where the variable occurs: params plus all Name nodes."""
    return tuple(
        nd.id for nd in ast.nodes
        if nd.value == name and (
            nd.kind == "Name"
            or (nd.kind == "Param" and ast.nodes[nd.parent].kind == "Arguments")
        )
    )


def enclosing_function(ast: Ast, nid: int) -> int:
    """Nearest FunctionDef ancestor (the node itself if a FunctionDef)."""
    cur = nid
    while True:
        nd = ast.nodes[cur]
        if nd.kind == "FunctionDef":
            return cur
        if nd.parent is None:
            raise ValueError(f"node {nid} not inside a function")
        cur = nd.parent


def is_self_method(ast: Ast, fn_id: int) -> bool:
    fn = ast.nodes[fn_id]
    for c in fn.children:
        if ast.nodes[c].kind == "Arguments":
            params = [p for p in ast.nodes[c].children]
            return bool(params) and ast.nodes[params[0]].value == "self"
    return False
