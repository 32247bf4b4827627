"""Bug synthesis and exhaustive repair-candidate generation.

Injection draws bug types, sites, and replacements uniformly at random and
keeps the exact reverse edit as supervision. The candidate generators
propose every possible repair of each type with no pruning, so the reverse
of any injected bug is always present in the generated candidate sets.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

from .ast_core import (
    Ast, BUG_TYPES, COMP_REPLACE_OPS, IS_OPS, Payload, RepairCandidate,
    RepairInstance, SetOperator, SetVariable, StripSelf, ToggleIs, WrapSelf,
    _edit_tree, _linearize, _to_tree, apply_payloads, ast_from_json,
    ast_to_json, bound_variables, enclosing_function, is_self_method,
    occurrence_ids, payload_from_json, payload_to_json, usage_name_ids,
)


class MissingReverseCandidate(Exception):
    """The generator failed to propose the reverse of an injected bug;
    indicates an injector/generator mismatch, never a runtime condition."""


@dataclass(frozen=True)
class BugRecord:
    original: Ast
    buggy: Ast
    bugs: tuple[tuple[str, int, Payload], ...]  # (type, location in buggy, reverse)
    requested: int = -1  # bugs asked for; -1 when not produced by injection

    @property
    def shortfall(self) -> bool:
        return self.requested >= 0 and len(self.bugs) < self.requested

    def restore(self) -> Ast:
        """Applies every reverse payload to the buggy tree."""
        return apply_payloads(self.buggy, [(loc, p) for _, loc, p in self.bugs])

    def to_json(self) -> dict:
        return {
            "original_ast": ast_to_json(self.original),
            "buggy_ast": ast_to_json(self.buggy),
            "bugs": [
                {"type": t, "location": loc, "reverse_payload": payload_to_json(p)}
                for t, loc, p in self.bugs
            ],
            "requested": self.requested,
            "source": self.original.source,
        }

    @staticmethod
    def from_json(obj: dict) -> "BugRecord":
        return BugRecord(
            original=ast_from_json(obj["original_ast"], source=obj.get("source")),
            buggy=ast_from_json(obj["buggy_ast"]),
            bugs=tuple(
                (b["type"], b["location"], payload_from_json(b["reverse_payload"]))
                for b in obj["bugs"]
            ),
            requested=obj.get("requested", -1),
        )


def save_records(records: Iterable[BugRecord], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r.to_json()) + "\n")


def load_records(path: Union[str, Path]) -> list[BugRecord]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                out.append(BugRecord.from_json(json.loads(line)))
    return out


# ---------------------------------------------------------------------------
# Site discovery

def _is_binding_position(ast: Ast, nid: int) -> bool:
    """True when a node at this tree position is an assign/for-in target
    (directly or through tuple unpacking)."""
    nd = ast.nodes[nid]
    if nd.parent is None:
        return False
    parent = ast.nodes[nd.parent]
    if nd.relation == "targets" and parent.kind == "Assign":
        return True
    if nd.relation == "target" and parent.kind == "ForIn":
        return True
    if parent.kind == "TupleLit":
        return _is_binding_position(ast, parent.id)
    return False


def _class_member_name_ids(ast: Ast) -> list[int]:
    """Usage Names eligible for a WrapSelf repair."""
    out = []
    for nid in usage_name_ids(ast):
        nd = ast.nodes[nid]
        if nd.value == "self":
            continue
        if not is_self_method(ast, enclosing_function(ast, nid)):
            continue
        out.append(nid)
    return out


def _strip_site_ids(ast: Ast) -> list[int]:
    """Attribute nodes of shape `self.<attr>` whose strip yields a usage
    Name inside a self-method (so the reverse WrapSelf is proposable)."""
    out = []
    for nd in ast.nodes:
        if nd.kind != "Attribute" or len(nd.children) != 1:
            continue
        child = ast.nodes[nd.children[0]]
        if child.kind != "Name" or child.value != "self":
            continue
        if nd.value == "self":
            continue
        if _is_binding_position(ast, nd.id):
            continue
        if not is_self_method(ast, enclosing_function(ast, nd.id)):
            continue
        out.append(nd.id)
    return out


def _var_replace_site_ids(ast: Ast, bound: set[str]) -> list[int]:
    if len(bound) < 2:
        return []
    return [nid for nid in usage_name_ids(ast) if ast.nodes[nid].value in bound]


def _comp_replace_site_ids(ast: Ast) -> list[int]:
    return [nd.id for nd in ast.nodes
            if nd.kind == "CompareOp" and nd.value in COMP_REPLACE_OPS]


def _is_swap_site_ids(ast: Ast) -> list[int]:
    return [nd.id for nd in ast.nodes
            if nd.kind == "CompareOp" and nd.value in IS_OPS]


# ---------------------------------------------------------------------------
# Injection

def inject_bugs(ast: Ast, num_bugs: int, rng: random.Random) -> BugRecord:
    """Injects up to num_bugs uniformly drawn bugs at distinct sites.

    Draw order per bug: type uniform over the four, then site uniform over
    that type's applicable unused sites, then replacement uniform over the
    type's non-identity replacements. A type with no free site is redrawn;
    when no type applies the record carries fewer bugs than requested.
    """
    if not 0 <= num_bugs <= 3:
        raise ValueError("num_bugs must be in 0..3")
    root, _ = _to_tree(ast)
    used: set[int] = set()  # id() of mutable nodes already targeted
    pending: list[tuple[str, object, Payload]] = []  # (type, site obj, reverse)

    def flatten(t) -> list:
        out = [t]
        for _, c in t.children:
            out.extend(flatten(c))
        return out

    for _ in range(num_bugs):
        current, _ = _linearize(root)
        objs = flatten(root)  # preorder, aligned with current ids
        types_left = list(BUG_TYPES)
        while types_left:
            bug_type = types_left.pop(rng.randrange(len(types_left)))
            bound = bound_variables(current)
            if bug_type == "VarReplace":
                sites = _var_replace_site_ids(current, bound)
            elif bug_type == "CompReplace":
                sites = _comp_replace_site_ids(current)
            elif bug_type == "IsSwap":
                sites = _is_swap_site_ids(current)
            else:
                sites = _strip_site_ids(current)
            sites = [s for s in sites if id(objs[s]) not in used]
            if not sites:
                continue
            site = sites[rng.randrange(len(sites))]
            node = current.nodes[site]
            if bug_type == "VarReplace":
                others = sorted(bound - {node.value})
                new = others[rng.randrange(len(others))]
                edit: Payload = SetVariable(new)
                reverse: Payload = SetVariable(node.value)  # type: ignore[arg-type]
            elif bug_type == "CompReplace":
                others = [op for op in COMP_REPLACE_OPS if op != node.value]
                new = others[rng.randrange(len(others))]
                edit = SetOperator(new)
                reverse = SetOperator(node.value)  # type: ignore[arg-type]
            elif bug_type == "IsSwap":
                edit = ToggleIs()
                reverse = ToggleIs()
            else:
                edit = StripSelf()
                reverse = WrapSelf()
            obj = _edit_tree(objs, site, edit)
            used.add(id(obj))
            pending.append((bug_type, obj, reverse))
            break

    buggy, obj_ids = _linearize(root)
    bugs = tuple(
        sorted(
            ((t, obj_ids[id(obj)], rev) for t, obj, rev in pending),
            key=lambda b: b[1],
        )
    )
    return BugRecord(original=ast, buggy=buggy, bugs=bugs, requested=num_bugs)


# ---------------------------------------------------------------------------
# Candidate generation

def generate_instances(ast: Ast) -> list[RepairInstance]:
    """Every proposable repair instance, ordered by location then type."""
    raw: list[tuple[int, int, str, tuple[RepairCandidate, ...]]] = []
    bound = sorted(bound_variables(ast))

    if len(bound) >= 2:
        occ = {v: occurrence_ids(ast, v) for v in bound}
        for nid in _var_replace_site_ids(ast, set(bound)):
            current = ast.nodes[nid].value
            cands = tuple(
                RepairCandidate(SetVariable(v), is_noop=(v == current), occurrences=occ[v])
                for v in bound
            )
            raw.append((nid, 0, "VarReplace", cands))

    for nid in _comp_replace_site_ids(ast):
        current = ast.nodes[nid].value
        cands = tuple(
            RepairCandidate(SetOperator(op), is_noop=(op == current))
            for op in COMP_REPLACE_OPS
        )
        raw.append((nid, 1, "CompReplace", cands))

    for nid in _is_swap_site_ids(ast):
        current = ast.nodes[nid].value
        cands = tuple(
            RepairCandidate(
                SetOperator(op) if op == current else ToggleIs(),
                is_noop=(op == current),
            )
            for op in IS_OPS
        )
        raw.append((nid, 2, "IsSwap", cands))

    for nid in _class_member_name_ids(ast):
        current = ast.nodes[nid].value
        cands = (
            RepairCandidate(SetVariable(current), is_noop=True),  # type: ignore[arg-type]
            RepairCandidate(WrapSelf(), is_noop=False),
        )
        raw.append((nid, 3, "ClassMember", cands))

    raw.sort(key=lambda r: (r[0], r[1]))
    return [
        RepairInstance(i, bug_type, nid, cands)
        for i, (nid, _, bug_type, cands) in enumerate(raw)
    ]


def label_reference(instances: list[RepairInstance],
                    record: BugRecord) -> list[RepairInstance]:
    """Marks the reverse candidate at each bug location, no-op elsewhere."""
    by_key = {(t, loc): rev for t, loc, rev in record.bugs}
    out = []
    for inst in instances:
        rev = by_key.get((inst.bug_type, inst.location))
        if rev is None:
            out.append(inst.with_reference(inst.noop_index))
            continue
        ref = next(
            (i for i, c in enumerate(inst.candidates) if c.payload == rev and not c.is_noop),
            None,
        )
        if ref is None:
            raise MissingReverseCandidate(
                f"{inst.bug_type} at node {inst.location}: reverse {rev!r} not proposed"
            )
        out.append(inst.with_reference(ref))
    covered = {(inst.bug_type, inst.location) for inst in out
               if inst.reference != inst.noop_index}
    missing = set(by_key) - covered
    if missing:
        raise MissingReverseCandidate(f"no instance generated for bugs {sorted(missing)}")
    return out


def total_candidates(instances: list[RepairInstance]) -> int:
    return sum(len(i.candidates) for i in instances)
