"""Corpus construction: function extraction, repo-level splits, value
vocabulary, training/heldout overlap filtering, and real-bug pair mining."""

from __future__ import annotations

import json
import logging
import random
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Union

from . import ast_core
from .ast_core import (
    Ast, BUG_TYPES, COMP_REPLACE_OPS, SetOperator, SetVariable, SingleEdit,
    StripSelf, ToggleIs, WrapSelf, ast_diff, bound_variables,
    enclosing_function, is_self_method,
)
from .parser import ParseError, parse

log = logging.getLogger(__name__)

MIN_NODES = 5
MAX_NODES = 300


@dataclass(frozen=True)
class Snippet:
    ast: Ast
    repo: str
    path: str
    index: int  # position of the function within its file

    @property
    def source(self) -> str:
        assert self.ast.source is not None
        return self.ast.source


@dataclass(frozen=True)
class Vocab:
    """Value-string vocabulary; id 0 is PAD, id 1 is OOV."""
    tokens: tuple[str, ...]

    PAD = 0
    OOV = 1

    @property
    def pad_id(self) -> int:
        return self.PAD

    @property
    def oov_id(self) -> int:
        return self.OOV

    @property
    def size(self) -> int:
        return len(self.tokens) + 2

    def id_of(self, token: str) -> int:
        return self._index.get(token, self.OOV)

    @property
    def _index(self) -> dict[str, int]:
        cached = getattr(self, "_index_cache", None)
        if cached is None:
            cached = {t: i + 2 for i, t in enumerate(self.tokens)}
            object.__setattr__(self, "_index_cache", cached)
        return cached

    def to_json(self) -> dict:
        return {"tokens": list(self.tokens)}

    @staticmethod
    def from_json(obj: dict) -> "Vocab":
        return Vocab(tuple(obj["tokens"]))


def build_vocab(snippets: Iterable[Snippet], max_size: int) -> Vocab:
    """Top max_size value strings by corpus frequency, ties lexicographic."""
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    counts: Counter[str] = Counter()
    for s in snippets:
        for nd in s.ast.nodes:
            if nd.value is not None:
                counts[nd.value] += 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocab(tuple(t for t, _ in ranked[:max_size]))


# ---------------------------------------------------------------------------
# Extraction

_DEF_RE = re.compile(r"^(\s*)def\s+[A-Za-z_]")


def iter_function_blocks(text: str) -> Iterable[tuple[int, str]]:
    """Yields (index, dedented source) for every def block in a file,
    including methods and nested functions. Purely line-based; blocks end at
    the first non-blank line indented at or below the def header."""
    lines = text.splitlines()
    idx = 0
    for start, line in enumerate(lines):
        m = _DEF_RE.match(line)
        if not m:
            continue
        indent = len(m.group(1))
        block = [line[indent:]]
        for follow in lines[start + 1:]:
            stripped = follow.strip()
            if stripped and len(follow) - len(follow.lstrip(" \t")) <= indent:
                break
            block.append(follow[indent:] if len(follow) > indent else "")
        while block and not block[-1].strip():
            block.pop()
        yield idx, "\n".join(block) + "\n"
        idx += 1


def extract_snippets(root: Union[str, Path],
                     min_nodes: int = MIN_NODES,
                     max_nodes: int = MAX_NODES) -> list[Snippet]:
    """One snippet per parsable function under `root`; each immediate
    subdirectory of `root` counts as one repository."""
    root = Path(root)
    snippets: list[Snippet] = []
    skipped = 0
    for path in sorted(root.rglob("*.py")):
        rel = path.relative_to(root)
        repo = rel.parts[0] if len(rel.parts) > 1 else "."
        text = path.read_text(encoding="utf-8")
        for idx, block in iter_function_blocks(text):
            try:
                ast = parse(block)
            except ParseError:
                skipped += 1
                continue
            if not min_nodes <= ast.n <= max_nodes:
                continue
            snippets.append(Snippet(ast, repo, str(rel), idx))
    if skipped:
        log.info("skipped %d unparsable functions", skipped)
    return snippets


# ---------------------------------------------------------------------------
# Split / dedup

def split_by_repo(snippets: list[Snippet], ratios: tuple[float, float, float],
                  seed: int) -> dict[str, list[Snippet]]:
    """Repo-level train/val/test partition via a seeded shuffle of repo ids."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1")
    repos = sorted({s.repo for s in snippets})
    n_parts = sum(1 for r in ratios if r > 0)
    if len(repos) < n_parts:
        raise ValueError(f"need at least {n_parts} repositories, got {len(repos)}")
    rng = random.Random(seed)
    rng.shuffle(repos)
    n = len(repos)
    n_train = round(ratios[0] * n)
    n_val = round(ratios[1] * n)
    assign: dict[str, str] = {}
    for i, repo in enumerate(repos):
        if i < n_train:
            assign[repo] = "train"
        elif i < n_train + n_val:
            assign[repo] = "val"
        else:
            assign[repo] = "test"
    out: dict[str, list[Snippet]] = {"train": [], "val": [], "test": []}
    for s in snippets:
        out[assign[s.repo]].append(s)
    return out


def normalized_lines(source: str) -> list[str]:
    return [ln.strip() for ln in source.splitlines() if ln.strip()]


def shared_line_count(a: str, b: str) -> int:
    """Multiset intersection size of whitespace-normalized non-blank lines."""
    ca = Counter(normalized_lines(a))
    cb = Counter(normalized_lines(b))
    return sum((ca & cb).values())


def dedup_overlap(train: list[Snippet], heldout: list[Snippet],
                  max_shared_lines: int = 5) -> list[Snippet]:
    """Drops training snippets sharing strictly more than max_shared_lines
    normalized lines with any heldout snippet."""
    held = [Counter(normalized_lines(h.source)) for h in heldout]
    kept = []
    for s in train:
        cs = Counter(normalized_lines(s.source))
        if any(sum((cs & ch).values()) > max_shared_lines for ch in held):
            continue
        kept.append(s)
    return kept


# ---------------------------------------------------------------------------
# Real-bug pair classification

@dataclass(frozen=True)
class NotABugFix:
    reason: str


def classify_pair(before: str, after: str):
    """Classifies a before/after source pair as one of the four bug types.

    Returns a bugs.BugRecord (original = after, buggy = before) when the two
    parse and differ by exactly one candidate-shaped edit of a known type;
    otherwise NotABugFix.
    """
    from .bugs import BugRecord  # local import to avoid a module cycle

    try:
        buggy = parse(before)
    except ParseError as e:
        return NotABugFix(f"before side does not parse: {e}")
    try:
        fixed = parse(after)
    except ParseError as e:
        return NotABugFix(f"after side does not parse: {e}")

    diff = ast_diff(buggy, fixed)
    if isinstance(diff, ast_core.Identical):
        return NotABugFix("files are identical")
    if isinstance(diff, ast_core.Complex):
        return NotABugFix("more than one candidate-shaped edit")
    assert isinstance(diff, SingleEdit)
    payload = diff.payload

    if isinstance(payload, ToggleIs):
        bug_type = "IsSwap"
    elif isinstance(payload, SetOperator):
        old = buggy.nodes[diff.location].value
        if old in COMP_REPLACE_OPS and payload.op in COMP_REPLACE_OPS:
            bug_type = "CompReplace"
        else:
            return NotABugFix(f"operator change {old!r} -> {payload.op!r} outside the CompReplace set")
    elif isinstance(payload, SetVariable):
        bound = bound_variables(buggy)
        old = buggy.nodes[diff.location].value
        if old in bound and payload.name in bound:
            bug_type = "VarReplace"
        else:
            return NotABugFix("renamed identifier is not a snippet-bound variable")
    elif isinstance(payload, WrapSelf):
        fn = enclosing_function(buggy, diff.location)
        if is_self_method(buggy, fn):
            bug_type = "ClassMember"
        else:
            return NotABugFix("self accessor added outside a self-method")
    elif isinstance(payload, StripSelf):
        return NotABugFix("fix removes a self accessor; not one of the four bug types")
    else:
        return NotABugFix(f"unrecognized edit {payload!r}")

    return BugRecord(original=fixed, buggy=buggy,
                     bugs=((bug_type, diff.location, payload),))


def classify_pair_directory(pair_dir: Union[str, Path]) -> tuple[list, list[tuple[str, NotABugFix]]]:
    """Reads `<name>.before` / `<name>.after` files; returns (records, rejects)."""
    pair_dir = Path(pair_dir)
    records = []
    rejects: list[tuple[str, NotABugFix]] = []
    for before_path in sorted(pair_dir.glob("*.before")):
        after_path = before_path.with_suffix(".after")
        if not after_path.exists():
            rejects.append((before_path.stem, NotABugFix("missing .after file")))
            continue
        result = classify_pair(before_path.read_text(encoding="utf-8"),
                               after_path.read_text(encoding="utf-8"))
        if isinstance(result, NotABugFix):
            rejects.append((before_path.stem, result))
        else:
            records.append(result)
    return records, rejects


# ---------------------------------------------------------------------------
# JSONL dataset files

def save_snippets(snippets: list[Snippet], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in snippets:
            f.write(json.dumps({
                "repo": s.repo, "path": s.path, "index": s.index,
                "source": s.source, "ast": ast_core.ast_to_json(s.ast),
            }) + "\n")


def load_snippets(path: Union[str, Path]) -> list[Snippet]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            obj = json.loads(line)
            ast = ast_core.ast_from_json(obj["ast"], source=obj["source"])
            out.append(Snippet(ast, obj["repo"], obj["path"], obj.get("index", 0)))
    return out
