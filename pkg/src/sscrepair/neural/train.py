"""Plain-SGD training loop with gradient clipping and per-epoch bug resampling."""

from __future__ import annotations

import logging
import math
import random
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..bugs import BugRecord, generate_instances, inject_bugs, label_reference
from ..corpus import Snippet, Vocab, build_vocab
from .hyper import Hyperparams
from .model import Model

log = logging.getLogger(__name__)


class TrainingDiverged(Exception):
    def __init__(self, message: str, epoch_log: list):
        super().__init__(message)
        self.epoch_log = epoch_log


@dataclass
class EpochLog:
    epoch: int
    mean_loss: float
    val_accuracy: Optional[float] = None
    seconds: float = 0.0


def global_grad_norm(grads: dict[str, np.ndarray]) -> float:
    total = 0.0
    for g in grads.values():
        total += float(np.sum(np.square(g, dtype=np.float64)))
    return math.sqrt(total)


def sgd_step(model: Model, grads: dict[str, np.ndarray], lr: float, clip: float) -> float:
    """In-place clipped SGD update; returns the pre-clip gradient norm."""
    if lr <= 0 or clip <= 0:
        raise ValueError("lr and clip must be positive")
    norm = global_grad_norm(grads)
    if not math.isfinite(norm):
        raise TrainingDiverged("non-finite gradient; step rejected", [])
    scale = clip / norm if norm > clip else 1.0
    for name, p in model.params.items():
        p -= (lr * scale) * grads[name]
    return norm


def _derive_rng(seed: int, *parts) -> random.Random:
    return random.Random(":".join(str(p) for p in (seed, *parts)))


def make_records(snippets: list[Snippet], seed: int, epoch: int,
                 regime: str) -> list[BugRecord]:
    """Seeded bug injection for one epoch; 'single' puts exactly one bug per
    snippet, 'multi' draws 0-3 uniformly."""
    records = []
    for idx, s in enumerate(snippets):
        rng = _derive_rng(seed, "bugs", epoch, idx)
        nb = 1 if regime == "single" else rng.randrange(4)
        records.append(inject_bugs(s.ast, nb, rng))
    return records


def _labeled(record: BugRecord):
    return record.buggy, label_reference(generate_instances(record.buggy), record)


def single_repair_accuracy(model: Model, records: list[BugRecord]) -> float:
    from ..engine import predict_single  # local import: engine depends on neural
    correct = 0
    for r in records:
        assert len(r.bugs) == 1
        t, loc, rev = r.bugs[0]
        try:
            inst, ci, _ = predict_single(model, r.buggy)
        except Exception:
            continue
        if inst.location == loc and inst.candidates[ci].payload == rev:
            correct += 1
    return correct / len(records) if records else 0.0


def train(snippets: list[Snippet], hp: Hyperparams, norm_mode: str = "local",
          regime: str = "single", resample: bool = True,
          fixed_records: Optional[list[BugRecord]] = None,
          val_records: Optional[list[BugRecord]] = None,
          vocab: Optional[Vocab] = None,
          target_accuracy: Optional[float] = None,
          accuracy_records: Optional[list[BugRecord]] = None) -> tuple[Model, list[EpochLog]]:
    """Trains a fresh model; fully reproducible from (hp.seed, inputs).

    With resample=True, bugs are re-injected with a fresh per-epoch seed;
    otherwise fixed_records are reused every epoch. target_accuracy stops
    early once single-repair accuracy on accuracy_records reaches it.
    """
    if not snippets and not fixed_records:
        raise ValueError("empty corpus")
    if regime not in ("single", "multi"):
        raise ValueError("regime must be 'single' or 'multi'")
    if not resample and fixed_records is None:
        raise ValueError("resample=False requires fixed_records")
    if vocab is None:
        vocab = build_vocab(snippets, hp.vocab_size)
    model = Model(hp, vocab, norm_mode=norm_mode)
    epoch_log: list[EpochLog] = []

    for epoch in range(hp.epochs):
        t0 = time.monotonic()
        if resample:
            records = make_records(snippets, hp.seed, epoch, regime)
        else:
            records = list(fixed_records)  # type: ignore[arg-type]
        if norm_mode == "global":
            records = [r for r in records if len(r.bugs) == 1]
        order = list(range(len(records)))
        _derive_rng(hp.seed, "shuffle", epoch).shuffle(order)
        drop_rng = np.random.default_rng([hp.seed, epoch, 0xD0])
        total_loss = 0.0
        count = 0
        for b0 in range(0, len(order), hp.batch_size):
            batch = order[b0:b0 + hp.batch_size]
            grads = model.zero_grads()
            batch_loss = 0.0
            for idx in batch:
                buggy, labeled = _labeled(records[idx])
                if not labeled:
                    continue
                loss, _ = model.loss_and_gradients(
                    buggy, labeled, training=True, dropout_rng=drop_rng, grads=grads,
                )
                batch_loss += loss
                count += 1
            if not math.isfinite(batch_loss):
                raise TrainingDiverged(f"non-finite loss in epoch {epoch}", epoch_log)
            for g in grads.values():
                g /= max(len(batch), 1)
            sgd_step(model, grads, hp.learning_rate, hp.clip_norm)
            total_loss += batch_loss
        mean_loss = total_loss / max(count, 1)
        val_acc = None
        probe = accuracy_records if accuracy_records is not None else val_records
        if probe:
            val_acc = single_repair_accuracy(model, probe)
        epoch_log.append(EpochLog(epoch, mean_loss, val_acc, time.monotonic() - t0))
        log.info("epoch %d: loss %.4f%s", epoch, mean_loss,
                 f", acc {val_acc:.3f}" if val_acc is not None else "")
        if target_accuracy is not None and val_acc is not None and val_acc >= target_accuracy:
            break
    return model, epoch_log
