"""Share/Specialize/Compete scoring network on a numpy tensor core.

Share: per-node feature embeddings -> bidirectional LSTM over the preorder
node sequence. Specialize: one MLP module per fixed-label repair type plus
a pooled pointer module for variable replacement. Compete: local (per
instance, no-op included) or global (all non-no-op candidates) softmax.

All gradients are computed by hand-written reverse-mode passes; training
runs in float32, gradient checking in float64.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..ast_core import (
    Ast, FeatureConfig, KINDS, RELATIONS, RepairInstance, node_features,
)
from ..corpus import Vocab
from .hyper import Hyperparams

# Fixed label widths of the MLP-scored repair types.
MLP_TYPES = {"CompReplace": 8, "IsSwap": 2, "ClassMember": 2}

NORM_MODES = ("local", "global")


@dataclass(frozen=True)
class EncodedSnippet:
    """Per-node hidden vectors H, shape (n, d)."""
    H: np.ndarray


class _LstmCache:
    __slots__ = ("X", "I", "F", "G", "O", "C", "TC", "H")

    def __init__(self, X, I, F, G, O, C, TC, H):
        self.X, self.I, self.F, self.G, self.O = X, I, F, G, O
        self.C, self.TC, self.H = C, TC, H


class _EncodeCache:
    __slots__ = ("feature_ids", "X", "fw", "bw", "dropout_mask", "H")

    def __init__(self, feature_ids, X, fw, bw, dropout_mask, H):
        self.feature_ids = feature_ids
        self.X = X
        self.fw = fw
        self.bw = bw
        self.dropout_mask = dropout_mask
        self.H = H


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def softmax64(scores: np.ndarray) -> np.ndarray:
    """Numerically careful softmax in float64 regardless of input dtype."""
    s = np.asarray(scores, dtype=np.float64)
    s = s - s.max()
    e = np.exp(s)
    return e / e.sum()


class Model:
    """A live checkpoint: parameter tensors plus everything needed to score."""

    def __init__(self, hp: Hyperparams, vocab: Vocab, norm_mode: str = "local",
                 dtype=np.float32):
        if norm_mode not in NORM_MODES:
            raise ValueError(f"norm_mode must be one of {NORM_MODES}")
        self.hp = hp
        self.vocab = vocab
        self.norm_mode = norm_mode
        self.dtype = np.dtype(dtype)
        self.params: dict[str, np.ndarray] = {}
        self._init_params()

    # -- parameters ---------------------------------------------------------

    @property
    def d(self) -> int:
        return self.hp.hidden_dim

    @property
    def u(self) -> int:
        return self.hp.hidden_dim // 2

    @property
    def in_dim(self) -> int:
        return self.hp.embed_dim * len(self.hp.features.streams)

    def _stream_rows(self, stream: str) -> int:
        if stream == "position":
            return self.hp.features.position_cap + 1
        if stream == "kind":
            return len(KINDS)
        if stream == "relation":
            return len(RELATIONS)
        if stream == "value":
            return self.vocab.size
        raise ValueError(stream)

    def _init_params(self) -> None:
        rng = np.random.default_rng(self.hp.seed)
        dt = self.dtype

        def glorot(shape):
            s = np.sqrt(6.0 / (shape[0] + shape[1]))
            return rng.uniform(-s, s, size=shape).astype(dt)

        de = self.hp.embed_dim
        for stream in self.hp.features.streams:
            rows = self._stream_rows(stream)
            self.params[f"emb_{stream}"] = rng.uniform(-0.1, 0.1, size=(rows, de)).astype(dt)
        u, c, d = self.u, self.hp.module_hidden, self.d
        for direction in ("fw", "bw"):
            self.params[f"lstm_{direction}_W"] = glorot((4 * u, self.in_dim))
            self.params[f"lstm_{direction}_U"] = glorot((4 * u, u))
            b = np.zeros(4 * u, dtype=dt)
            b[u:2 * u] = 1.0  # forget-gate bias
            self.params[f"lstm_{direction}_b"] = b
        for t, m in MLP_TYPES.items():
            self.params[f"mlp_{t}_W"] = glorot((c, d))
            self.params[f"mlp_{t}_V"] = glorot((m, c))
        self.params["pointer_W"] = glorot((c, d))
        self.params["pointer_V"] = glorot((c, d))

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    def astype(self, dtype) -> "Model":
        """Copy of this model with all parameters cast (for gradient checks)."""
        clone = Model.__new__(Model)
        clone.hp = self.hp
        clone.vocab = self.vocab
        clone.norm_mode = self.norm_mode
        clone.dtype = np.dtype(dtype)
        clone.params = {k: v.astype(dtype) for k, v in self.params.items()}
        return clone

    # -- share: encoder -----------------------------------------------------

    def featurize(self, ast: Ast) -> dict[str, np.ndarray]:
        feats = node_features(ast, self.vocab, self.hp.features)
        return {k: np.asarray(v, dtype=np.int64) for k, v in feats.items()}

    def _lstm_forward(self, X: np.ndarray, direction: str) -> _LstmCache:
        W = self.params[f"lstm_{direction}_W"]
        U = self.params[f"lstm_{direction}_U"]
        b = self.params[f"lstm_{direction}_b"]
        n = X.shape[0]
        u = self.u
        WX = X @ W.T + b
        I = np.empty((n, u), dtype=self.dtype)
        F = np.empty_like(I)
        G = np.empty_like(I)
        O = np.empty_like(I)
        C = np.empty_like(I)
        TC = np.empty_like(I)
        H = np.empty_like(I)
        h = np.zeros(u, dtype=self.dtype)
        cc = np.zeros(u, dtype=self.dtype)
        for t in range(n):
            a = WX[t] + U @ h
            I[t] = _sigmoid(a[:u])
            F[t] = _sigmoid(a[u:2 * u])
            G[t] = np.tanh(a[2 * u:3 * u])
            O[t] = _sigmoid(a[3 * u:])
            cc = F[t] * cc + I[t] * G[t]
            C[t] = cc
            TC[t] = np.tanh(cc)
            h = O[t] * TC[t]
            H[t] = h
        return _LstmCache(X, I, F, G, O, C, TC, H)

    def _lstm_backward(self, cache: _LstmCache, dH_dir: np.ndarray,
                       direction: str, grads: dict[str, np.ndarray]) -> np.ndarray:
        W = self.params[f"lstm_{direction}_W"]
        U = self.params[f"lstm_{direction}_U"]
        n, u = cache.H.shape
        dX = np.zeros_like(cache.X)
        dA = np.empty((n, 4 * u), dtype=self.dtype)
        dh_next = np.zeros(u, dtype=self.dtype)
        dc_next = np.zeros(u, dtype=self.dtype)
        for t in range(n - 1, -1, -1):
            dh = dH_dir[t] + dh_next
            do = dh * cache.TC[t]
            dc = dh * cache.O[t] * (1.0 - cache.TC[t] ** 2) + dc_next
            di = dc * cache.G[t]
            dg = dc * cache.I[t]
            c_prev = cache.C[t - 1] if t > 0 else np.zeros(u, dtype=self.dtype)
            df = dc * c_prev
            dc_next = dc * cache.F[t]
            da = np.empty(4 * u, dtype=self.dtype)
            da[:u] = di * cache.I[t] * (1.0 - cache.I[t])
            da[u:2 * u] = df * cache.F[t] * (1.0 - cache.F[t])
            da[2 * u:3 * u] = dg * (1.0 - cache.G[t] ** 2)
            da[3 * u:] = do * cache.O[t] * (1.0 - cache.O[t])
            dA[t] = da
            dh_next = U.T @ da
        # Accumulate weight grads in bulk.
        grads[f"lstm_{direction}_W"] += dA.T @ cache.X
        H_prev = np.vstack([np.zeros((1, u), dtype=self.dtype), cache.H[:-1]])
        grads[f"lstm_{direction}_U"] += dA.T @ H_prev
        grads[f"lstm_{direction}_b"] += dA.sum(axis=0)
        dX += dA @ W
        return dX

    def encode(self, ast: Ast, training: bool = False,
               dropout_rng: Optional[np.random.Generator] = None) -> tuple[np.ndarray, _EncodeCache]:
        feats = self.featurize(ast)
        cols = [self.params[f"emb_{s}"][feats[s]] for s in self.hp.features.streams]
        X = np.concatenate(cols, axis=1)
        fw = self._lstm_forward(X, "fw")
        bw = self._lstm_forward(X[::-1], "bw")
        H = np.concatenate([fw.H, bw.H[::-1]], axis=1)
        mask = None
        if training and self.hp.dropout > 0.0:
            if dropout_rng is None:
                raise ValueError("training encode needs a dropout rng")
            keep = 1.0 - self.hp.dropout
            mask = (dropout_rng.random(H.shape) < keep).astype(self.dtype) / self.dtype.type(keep)
            H = H * mask
        return H, _EncodeCache(feats, X, fw, bw, mask, H)

    def encode_snippet(self, ast: Ast) -> EncodedSnippet:
        H, _ = self.encode(ast, training=False)
        return EncodedSnippet(H)

    def _encode_backward(self, cache: _EncodeCache, dH: np.ndarray,
                         grads: dict[str, np.ndarray]) -> None:
        if cache.dropout_mask is not None:
            dH = dH * cache.dropout_mask
        u = self.u
        dX = self._lstm_backward(cache.fw, dH[:, :u], "fw", grads)
        dX += self._lstm_backward(cache.bw, dH[::-1, u:], "bw", grads)[::-1]
        de = self.hp.embed_dim
        for i, s in enumerate(self.hp.features.streams):
            ids = cache.feature_ids[s]
            np.add.at(grads[f"emb_{s}"], ids, dX[:, i * de:(i + 1) * de])

    # -- specialize: scoring modules ------------------------------------------

    def score_instance(self, H: np.ndarray, inst: RepairInstance):
        """Un-normalized candidate scores plus the cache for backprop."""
        if inst.bug_type == "VarReplace":
            return self._score_pointer(H, inst)
        return self._score_mlp(H, inst)

    def _score_mlp(self, H: np.ndarray, inst: RepairInstance):
        if inst.bug_type not in MLP_TYPES:
            raise ValueError(f"MLP module cannot score {inst.bug_type}")
        if len(inst.candidates) != MLP_TYPES[inst.bug_type]:
            raise ValueError(
                f"{inst.bug_type} instance must have {MLP_TYPES[inst.bug_type]} candidates"
            )
        W = self.params[f"mlp_{inst.bug_type}_W"]
        V = self.params[f"mlp_{inst.bug_type}_V"]
        q = np.tanh(W @ H[inst.location])
        scores = V @ q
        return scores, ("mlp", inst, q)

    def _score_pointer(self, H: np.ndarray, inst: RepairInstance):
        W = self.params["pointer_W"]
        V = self.params["pointer_V"]
        q = np.tanh(W @ H[inst.location])
        scores = np.empty(len(inst.candidates), dtype=self.dtype)
        caches = []
        for ci, cand in enumerate(inst.candidates):
            if not cand.occurrences:
                raise ValueError("pointer candidate with no occurrences")
            occ = np.asarray(cand.occurrences, dtype=np.int64)
            proj = np.tanh(H[occ] @ V.T)        # (len(occ), c)
            arg = proj.argmax(axis=0)           # ties -> lowest node id
            pooled = proj[arg, np.arange(proj.shape[1])]
            scores[ci] = q @ pooled
            caches.append((occ, proj, arg, pooled))
        return scores, ("pointer", inst, q, caches)

    def _score_backward(self, H: np.ndarray, dscores: np.ndarray, cache,
                        dH: np.ndarray, grads: dict[str, np.ndarray]) -> None:
        kind = cache[0]
        if kind == "mlp":
            _, inst, q = cache
            W = self.params[f"mlp_{inst.bug_type}_W"]
            V = self.params[f"mlp_{inst.bug_type}_V"]
            grads[f"mlp_{inst.bug_type}_V"] += np.outer(dscores, q)
            dq = V.T @ dscores
            da = dq * (1.0 - q ** 2)
            grads[f"mlp_{inst.bug_type}_W"] += np.outer(da, H[inst.location])
            dH[inst.location] += W.T @ da
            return
        _, inst, q, caches = cache
        W = self.params["pointer_W"]
        V = self.params["pointer_V"]
        dq = np.zeros_like(q)
        for ds, (occ, proj, arg, pooled) in zip(dscores, caches):
            if ds == 0.0:
                continue
            dq += ds * pooled
            dpool = ds * q
            dproj = np.zeros_like(proj)
            dproj[arg, np.arange(proj.shape[1])] = dpool
            dpre = dproj * (1.0 - proj ** 2)
            grads["pointer_V"] += dpre.T @ H[occ]
            dH[occ] += dpre @ V
        da = dq * (1.0 - q ** 2)
        grads["pointer_W"] += np.outer(da, H[inst.location])
        dH[inst.location] += W.T @ da

    # -- compete: normalization and loss --------------------------------------

    def instance_probabilities(self, scores_list: list[np.ndarray],
                               instances: list[RepairInstance]) -> list[np.ndarray]:
        """Per-candidate probabilities under this model's normalization mode.

        Local: softmax within each instance. Global: one softmax across all
        non-no-op candidates; no-ops get probability 0.
        """
        if self.norm_mode == "local":
            return [softmax64(s) for s in scores_list]
        flat = []
        slots = []
        for ii, (inst, s) in enumerate(zip(instances, scores_list)):
            for ci, cand in enumerate(inst.candidates):
                if not cand.is_noop:
                    flat.append(s[ci])
                    slots.append((ii, ci))
        probs = [np.zeros(len(inst.candidates), dtype=np.float64) for inst in instances]
        if flat:
            p = softmax64(np.asarray(flat))
            for (ii, ci), pi in zip(slots, p):
                probs[ii][ci] = pi
        return probs

    def loss_and_gradients(self, ast: Ast, instances: list[RepairInstance],
                           training: bool = False,
                           dropout_rng: Optional[np.random.Generator] = None,
                           grads: Optional[dict[str, np.ndarray]] = None):
        """Negative log likelihood of the reference labels plus parameter
        gradients (accumulated into `grads` when given)."""
        if any(inst.reference is None for inst in instances):
            raise ValueError("all instances must carry a reference label")
        if grads is None:
            grads = self.zero_grads()
        H, cache = self.encode(ast, training=training, dropout_rng=dropout_rng)
        dH = np.zeros_like(H)
        loss = 0.0
        if self.norm_mode == "local":
            for inst in instances:
                scores, sc = self.score_instance(H, inst)
                p = softmax64(scores)
                loss -= float(np.log(max(p[inst.reference], 1e-300)))
                ds = p.copy()
                ds[inst.reference] -= 1.0
                self._score_backward(H, ds.astype(self.dtype), sc, dH, grads)
        else:
            true = [
                (ii, inst.reference) for ii, inst in enumerate(instances)
                if inst.reference != inst.noop_index
            ]
            if len(true) != 1:
                raise ValueError(
                    "global normalization needs exactly one non-no-op reference"
                )
            flat_scores = []
            slots = []
            per_inst = []
            for inst in instances:
                scores, sc = self.score_instance(H, inst)
                per_inst.append((inst, scores, sc))
                for ci, cand in enumerate(inst.candidates):
                    if not cand.is_noop:
                        flat_scores.append(scores[ci])
                        slots.append((len(per_inst) - 1, ci))
            p = softmax64(np.asarray(flat_scores))
            true_flat = slots.index(true[0])
            loss -= float(np.log(max(p[true_flat], 1e-300)))
            dflat = p.copy()
            dflat[true_flat] -= 1.0
            ds_per = [np.zeros(len(inst.candidates)) for inst, _, _ in per_inst]
            for (ii, ci), g in zip(slots, dflat):
                ds_per[ii][ci] = g
            for (inst, scores, sc), ds in zip(per_inst, ds_per):
                self._score_backward(H, ds.astype(self.dtype), sc, dH, grads)
        self._encode_backward(cache, dH, grads)
        return loss, grads

    def score_snippet(self, ast: Ast, instances: list[RepairInstance]):
        """Probabilities per instance for inference."""
        H, _ = self.encode(ast, training=False)
        scores_list = [self.score_instance(H, inst)[0] for inst in instances]
        return self.instance_probabilities(scores_list, instances)
