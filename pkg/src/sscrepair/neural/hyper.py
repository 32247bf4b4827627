"""Model and training hyperparameters."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..ast_core import FeatureConfig


@dataclass(frozen=True)
class Hyperparams:
    embed_dim: int = 128
    hidden_dim: int = 512       # bidirectional encoder output width d; even
    module_hidden: int = 512    # scoring-module hidden width c
    dropout: float = 0.25
    epochs: int = 30
    learning_rate: float = 0.1
    clip_norm: float = 5.0
    batch_size: int = 32
    seed: int = 0
    vocab_size: int = 5000
    features: FeatureConfig = field(default_factory=FeatureConfig)
    delta: float = 0.5          # multi-repair emission threshold

    def __post_init__(self):
        if self.embed_dim < 1 or self.hidden_dim < 1 or self.module_hidden < 1:
            raise ValueError("dimensions must be >= 1")
        if self.hidden_dim % 2 != 0:
            raise ValueError("hidden_dim must be even (bidirectional concat)")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        self.features.streams  # validates non-empty

    def to_json(self) -> dict:
        return {
            "embed_dim": self.embed_dim, "hidden_dim": self.hidden_dim,
            "module_hidden": self.module_hidden, "dropout": self.dropout,
            "epochs": self.epochs, "learning_rate": self.learning_rate,
            "clip_norm": self.clip_norm, "batch_size": self.batch_size,
            "seed": self.seed, "vocab_size": self.vocab_size,
            "features": self.features.to_json(), "delta": self.delta,
        }

    @staticmethod
    def from_json(obj: dict) -> "Hyperparams":
        obj = dict(obj)
        obj["features"] = FeatureConfig.from_json(obj["features"])
        return Hyperparams(**obj)
