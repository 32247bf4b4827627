"""Repair decoding (single-best and threshold multi-repair) and evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .ast_core import Ast, BUG_TYPES, RepairInstance
from .bugs import BugRecord, generate_instances, total_candidates
from .neural.model import Model

CANDIDATE_BINS = ((1, 50), (51, 100), (101, 150), (151, None))


class NoCandidates(Exception):
    """The snippet offers no non-no-op repair candidates."""


def _scored_candidates(model: Model, ast: Ast,
                       instances: Optional[list[RepairInstance]] = None):
    if instances is None:
        instances = generate_instances(ast)
    probs = model.score_snippet(ast, instances)
    scored = []
    for inst, p in zip(instances, probs):
        for ci, cand in enumerate(inst.candidates):
            if not cand.is_noop:
                scored.append((float(p[ci]), inst, ci))
    return instances, scored


def predict_single(model: Model, ast: Ast,
                   instances: Optional[list[RepairInstance]] = None
                   ) -> tuple[RepairInstance, int, float]:
    """Highest-probability non-no-op candidate across all instances; ties
    broken by lower location id, then lower candidate index."""
    _, scored = _scored_candidates(model, ast, instances)
    if not scored:
        raise NoCandidates("no repair candidates for this snippet")
    best = min(scored, key=lambda s: (-s[0], s[1].location, s[2]))
    return best[1], best[2], best[0]


def predict_multi(model: Model, ast: Ast, delta: Optional[float] = None,
                  instances: Optional[list[RepairInstance]] = None
                  ) -> list[tuple[RepairInstance, int, float]]:
    """All non-no-op candidates with probability > delta; may be empty."""
    if model.norm_mode != "local":
        raise ValueError("multi-repair decoding requires local normalization")
    if delta is None:
        delta = model.hp.delta
    _, scored = _scored_candidates(model, ast, instances)
    out = [(inst, ci, p) for p, inst, ci in scored if p > delta]
    out.sort(key=lambda s: (s[0].location, s[1]))
    return out


# ---------------------------------------------------------------------------
# Metrics

@dataclass
class BinStat:
    label: str
    count: int = 0
    correct: int = 0

    @property
    def accuracy(self) -> Optional[float]:
        return self.correct / self.count if self.count else None


@dataclass
class PrfStat:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    exact: int = 0
    count: int = 0

    @property
    def precision(self) -> Optional[float]:
        d = self.tp + self.fp
        return self.tp / d if d else None

    @property
    def recall(self) -> Optional[float]:
        d = self.tp + self.fn
        return self.tp / d if d else None

    @property
    def f_score(self) -> Optional[float]:
        p, r = self.precision, self.recall
        if p is None or r is None or (p + r) == 0:
            return None
        return 2 * p * r / (p + r)

    @property
    def exact_accuracy(self) -> Optional[float]:
        return self.exact / self.count if self.count else None


@dataclass
class EvalReport:
    mode: str
    count: int = 0
    repair_correct: int = 0
    location_correct: int = 0
    per_type: dict = field(default_factory=dict)
    bins: list = field(default_factory=list)
    multi: dict = field(default_factory=dict)  # bug count ("0".."3", "all") -> PrfStat

    @property
    def repair_accuracy(self) -> Optional[float]:
        return self.repair_correct / self.count if self.count else None

    @property
    def location_accuracy(self) -> Optional[float]:
        return self.location_correct / self.count if self.count else None

    def to_json(self) -> dict:
        out = {
            "mode": self.mode,
            "count": self.count,
            "repair_accuracy": self.repair_accuracy,
            "location_accuracy": self.location_accuracy,
            "per_type": {
                t: {"count": b.count, "accuracy": b.accuracy}
                for t, b in self.per_type.items()
            },
            "candidate_bins": [
                {"bin": b.label, "count": b.count, "accuracy": b.accuracy}
                for b in self.bins
            ],
        }
        if self.mode == "multi":
            out["multi"] = {
                k: {
                    "count": s.count, "precision": s.precision, "recall": s.recall,
                    "f_score": s.f_score, "exact_accuracy": s.exact_accuracy,
                }
                for k, s in self.multi.items()
            }
        return out

    def format_table(self) -> str:
        def pct(x):
            return f"{100 * x:5.1f}%" if x is not None else "    --"
        lines = [f"mode: {self.mode}   snippets: {self.count}"]
        if self.mode == "single":
            lines.append(f"repair accuracy:   {pct(self.repair_accuracy)}")
            lines.append(f"location accuracy: {pct(self.location_accuracy)}")
            for t in BUG_TYPES:
                if t in self.per_type:
                    b = self.per_type[t]
                    lines.append(f"  {t:<12} {pct(b.accuracy)}  (n={b.count})")
        else:
            for k, s in self.multi.items():
                lines.append(
                    f"  bugs={k:<4} F={pct(s.f_score)} exact={pct(s.exact_accuracy)} (n={s.count})"
                )
        for b in self.bins:
            lines.append(f"  candidates {b.label:<8} {pct(b.accuracy)}  (n={b.count})")
        return "\n".join(lines)


def _bin_label(lo: int, hi: Optional[int]) -> str:
    return f"{lo}-{hi}" if hi is not None else f">{lo - 1}"


def _bin_index(n: int) -> int:
    for i, (lo, hi) in enumerate(CANDIDATE_BINS):
        if n >= lo and (hi is None or n <= hi):
            return i
    return 0


def evaluate(model: Model, records: list[BugRecord], mode: str = "single") -> EvalReport:
    """Scores every record and aggregates accuracy metrics.

    single: exactly-one-bug records; repair accuracy = location and payload
    both match the reference repair. multi: per-repair precision/recall/F
    and exact set accuracy per bug count, threshold = model delta.
    """
    if mode not in ("single", "multi"):
        raise ValueError("mode must be 'single' or 'multi'")
    if not records:
        raise ValueError("empty dataset")
    report = EvalReport(mode=mode)
    report.bins = [BinStat(_bin_label(lo, hi)) for lo, hi in CANDIDATE_BINS]
    if mode == "multi":
        report.multi = {k: PrfStat() for k in ("0", "1", "2", "3", "all")}

    for rec in records:
        instances = generate_instances(rec.buggy)
        n_cands = total_candidates(instances)
        b = report.bins[_bin_index(n_cands)]
        report.count += 1
        truth = {(loc, rev) for _, loc, rev in rec.bugs}
        if mode == "single":
            if len(rec.bugs) != 1:
                raise ValueError("single mode needs exactly one bug per record")
            bug_type, loc, rev = rec.bugs[0]
            stat = report.per_type.setdefault(bug_type, BinStat(bug_type))
            stat.count += 1
            b.count += 1
            try:
                inst, ci, _ = predict_single(model, rec.buggy, instances)
            except NoCandidates:
                continue
            if inst.location == loc:
                report.location_correct += 1
            if inst.location == loc and inst.candidates[ci].payload == rev:
                report.repair_correct += 1
                stat.correct += 1
                b.correct += 1
        else:
            emitted = {
                (inst.location, inst.candidates[ci].payload)
                for inst, ci, _ in predict_multi(model, rec.buggy, instances=instances)
            }
            k = str(min(len(rec.bugs), 3))
            for key in (k, "all"):
                s = report.multi[key]
                s.count += 1
                s.tp += len(emitted & truth)
                s.fp += len(emitted - truth)
                s.fn += len(truth - emitted)
                if emitted == truth:
                    s.exact += 1
            b.count += 1
            if emitted == truth:
                b.correct += 1
    return report
