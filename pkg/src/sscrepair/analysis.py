"""Nearest-neighbor retrieval over encoder hidden states.

Useful for interpreting what the shared encoder learned: index the hidden
vector of every repair location (or every node) across a corpus, then look
up which contexts the model considers similar.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .ast_core import Ast
from .bugs import generate_instances
from .corpus import Snippet
from .neural.model import Model


@dataclass(frozen=True)
class IndexEntry:
    vector: np.ndarray
    snippet: Snippet
    location: int


@dataclass
class StateIndex:
    """Immutable-after-build store of (hidden vector, snippet, location)."""

    dim: int
    entries: list = field(default_factory=list)

    def add(self, vector: np.ndarray, snippet: Snippet, location: int) -> None:
        v = np.asarray(vector, dtype=np.float64)
        if v.shape != (self.dim,):
            raise ValueError(f"expected dimension {self.dim}, got {v.shape}")
        self.entries.append(IndexEntry(v, snippet, location))

    def __len__(self) -> int:
        return len(self.entries)


def build_index(model: Model, snippets: list[Snippet],
                locations: str = "instances") -> StateIndex:
    """Encodes each snippet and indexes hidden states.

    locations='instances' keeps only repair-instance locations;
    'all' keeps every node.
    """
    if locations not in ("instances", "all"):
        raise ValueError("locations must be 'instances' or 'all'")
    index = StateIndex(dim=model.d)
    for s in snippets:
        H, _ = model.encode(s.ast, training=False)
        if locations == "all":
            ids = range(len(s.ast.nodes))
        else:
            ids = sorted({inst.location for inst in generate_instances(s.ast)})
        for j in ids:
            index.add(H[j].copy(), s, j)
    return index


def encode_query(model: Model, ast: Ast, location: int) -> np.ndarray:
    """Hidden vector of one node, for use as a retrieval query."""
    if not 0 <= location < len(ast.nodes):
        raise ValueError(f"location {location} out of range")
    H, _ = model.encode(ast, training=False)
    return np.asarray(H[location], dtype=np.float64)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between a and b; 0 if either has zero norm."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def nearest_neighbors(index: StateIndex, query: np.ndarray,
                      k: int) -> list[tuple[IndexEntry, float]]:
    """Exact top-k entries by cosine similarity, descending.

    Ties keep insertion order; k larger than the index returns everything.
    The query's own entry, if indexed, is not excluded.
    """
    if not index.entries:
        raise ValueError("empty index")
    if k < 1:
        raise ValueError("k must be >= 1")
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (index.dim,):
        raise ValueError(f"query dimension {q.shape} does not match index {index.dim}")
    sims = [cosine_similarity(q, e.vector) for e in index.entries]
    order = sorted(range(len(sims)), key=lambda i: (-sims[i], i))
    return [(index.entries[i], sims[i]) for i in order[:k]]
