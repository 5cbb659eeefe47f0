"""Gradient boosted regression trees trained with a pairwise ranking loss.

The model scores an encoded architecture; only score differences matter.
For a pair with score gap d = s_left - s_right and label p_bar (1 when the
left member truly outranks the right), the loss is

    (1 - p_bar) * d + log(1 + exp(-d))

whose gradient with respect to s_left is sigmoid(d) - p_bar and whose
hessian is sigmoid(d) * (1 - sigmoid(d)); the right member takes the
negated gradient and the same hessian. Each boosting round accumulates
these per architecture across all its pairs and fits one regression tree
to the negative gradients with Newton leaf values -G / (H + lambda).

Trees grow leaf-wise: the frontier leaf with the highest exact-greedy gain
splits first. Split gain follows the standard second-order formula

    G_L^2/(H_L + lambda) + G_R^2/(H_R + lambda) - G^2/(H + lambda)

with thresholds at midpoints between consecutive distinct observed values.
Equal gains resolve to the lowest feature cell, then the lowest threshold,
then the earliest-created frontier leaf, so training is fully
deterministic.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from .errors import (
    EmptyPairSet,
    FormatVersionMismatch,
    ModelKindMismatch,
    RankerError,
    ShapeMismatch,
)
from .oracle import write_text_atomic
from .pairs import PairExample
from .space import EncodedMatrix

FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    max_leaves: int = 30
    max_depth: int = 6
    early_stopping_rounds: int = 5
    max_rounds: int = 500
    l2_lambda: float = 1.0
    min_samples_per_leaf: int = 5
    seed: int = 0

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise RankerError("learning_rate must be positive")
        if self.max_leaves < 1 or self.max_depth < 0:
            raise RankerError("max_leaves must be >= 1 and max_depth >= 0")
        if self.max_rounds < 1 or self.early_stopping_rounds < 1:
            raise RankerError("max_rounds and early_stopping_rounds must be >= 1")
        if self.l2_lambda < 0 or self.min_samples_per_leaf < 1:
            raise RankerError("l2_lambda must be >= 0 and min_samples_per_leaf >= 1")


# --- pairwise loss ------------------------------------------------------------


def sigmoid(x):
    """Numerically safe logistic function; accepts scalars or arrays."""
    scalar = np.ndim(x) == 0
    v = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return float(out[0]) if scalar else out


def _softplus(x):
    v = np.asarray(x, dtype=np.float64)
    return np.maximum(v, 0.0) + np.log1p(np.exp(-np.abs(v)))


def pair_prob(score_left, score_right):
    """Modelled probability that the left architecture outranks the right."""
    return sigmoid(np.asarray(score_left, dtype=np.float64) - score_right)


def pair_loss(score_left, score_right, label):
    """Pairwise cross entropy in its overflow-safe algebraic form."""
    scalar = np.ndim(score_left) == 0 and np.ndim(score_right) == 0
    d = np.asarray(score_left, dtype=np.float64) - score_right
    out = (1.0 - np.asarray(label, dtype=np.float64)) * d + _softplus(-d)
    return float(out) if scalar else out


def pair_grad_hess(score_left, score_right, label):
    """(gradient, hessian) of pair_loss with respect to the left score.

    The right score takes the negated gradient and an identical hessian.
    """
    scalar = np.ndim(score_left) == 0 and np.ndim(score_right) == 0
    d = np.asarray(score_left, dtype=np.float64) - score_right
    p = sigmoid(d)
    g = p - np.asarray(label, dtype=np.float64)
    h = p * (1.0 - p)
    if scalar:
        return float(g), float(h)
    return g, h


# --- regression tree -----------------------------------------------------------


@dataclass
class RegressionTree:
    """Flat node arrays; feature -1 marks a leaf holding a value."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        idx = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[idx]
            active = np.nonzero(feat >= 0)[0]
            if active.size == 0:
                return self.value[idx]
            at = idx[active]
            go_left = X[active, self.feature[at]] <= self.threshold[at]
            idx[active] = np.where(go_left, self.left[at], self.right[at])

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))


@dataclass
class _Split:
    gain: float
    cell: int
    threshold: float
    left_rows: np.ndarray
    right_rows: np.ndarray


def _leaf_value(g_sum: float, h_sum: float, lam: float) -> float:
    return 0.0 + (-g_sum / (h_sum + lam))


def _best_split(
    X: np.ndarray,
    g: np.ndarray,
    h: np.ndarray,
    rows: np.ndarray,
    lam: float,
    min_leaf: int,
) -> _Split | None:
    m = rows.size
    if m < 2 * min_leaf:
        return None
    G = g[rows].sum()
    H = h[rows].sum()
    parent = G * G / (H + lam)

    best: _Split | None = None
    for cell in range(X.shape[1]):
        v = X[rows, cell]
        order = np.argsort(v, kind="stable")
        vs = v[order]
        if vs[0] == vs[-1]:
            continue
        cg = np.cumsum(g[rows][order])
        ch = np.cumsum(h[rows][order])
        cuts = np.nonzero(np.diff(vs))[0] + 1  # left side sizes at value boundaries
        cuts = cuts[(cuts >= min_leaf) & (m - cuts >= min_leaf)]
        if cuts.size == 0:
            continue
        GL = cg[cuts - 1]
        HL = ch[cuts - 1]
        gains = GL * GL / (HL + lam) + (G - GL) ** 2 / (H - HL + lam) - parent
        k = int(np.argmax(gains))  # first maximum: lowest threshold wins ties
        if best is None or gains[k] > best.gain:
            cut = int(cuts[k])
            thr = (vs[cut - 1] + vs[cut]) / 2.0
            mask = v <= thr
            best = _Split(
                gain=float(gains[k]),
                cell=cell,
                threshold=float(thr),
                left_rows=rows[mask],
                right_rows=rows[~mask],
            )
    return best


def fit_tree(
    encodings: np.ndarray,
    grads: np.ndarray,
    hessians: np.ndarray,
    config: TrainConfig,
    rng: np.random.Generator | None = None,
) -> RegressionTree:
    """Fit one regression tree to negative gradients by exact greedy search.

    ``encodings`` is (n_samples, n_cells). The rng parameter is accepted for
    interface stability; exact greedy growth uses no randomness.
    """
    del rng
    X = np.asarray(encodings, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeMismatch(f"expected a 2-d design matrix, got shape {X.shape}")
    g = np.asarray(grads, dtype=np.float64)
    h = np.asarray(hessians, dtype=np.float64)
    if g.shape != (X.shape[0],) or h.shape != (X.shape[0],):
        raise ShapeMismatch("gradients and hessians must align with encodings")
    lam = config.l2_lambda

    feature = [-1]
    threshold = [0.0]
    left = [-1]
    right = [-1]
    value = [_leaf_value(g.sum(), h.sum(), lam)]
    depth = [0]

    heap: list[tuple[float, int, _Split]] = []
    all_rows = np.arange(X.shape[0])
    if config.max_depth > 0 and config.max_leaves > 1:
        root_split = _best_split(X, g, h, all_rows, lam, config.min_samples_per_leaf)
        if root_split is not None and root_split.gain > 0:
            heapq.heappush(heap, (-root_split.gain, 0, root_split))

    n_leaves = 1
    while heap and n_leaves < config.max_leaves:
        _, node, split = heapq.heappop(heap)
        for rows in (split.left_rows, split.right_rows):
            child = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(_leaf_value(g[rows].sum(), h[rows].sum(), lam))
            depth.append(depth[node] + 1)
            if depth[child] < config.max_depth:
                cand = _best_split(X, g, h, rows, lam, config.min_samples_per_leaf)
                if cand is not None and cand.gain > 0:
                    heapq.heappush(heap, (-cand.gain, child, cand))
        feature[node] = split.cell
        threshold[node] = split.threshold
        left[node] = len(feature) - 2
        right[node] = len(feature) - 1
        value[node] = 0.0
        n_leaves += 1

    return RegressionTree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        value=np.asarray(value, dtype=np.float64),
    )


# --- boosted model ---------------------------------------------------------------


@dataclass
class RankerModel:
    """A sum of shrunken regression trees over flattened encodings."""

    trees: list[RegressionTree]
    learning_rate: float
    base_score: float
    feature_shape: tuple[int, int]
    config: TrainConfig
    meta: dict = field(default_factory=dict)

    @property
    def n_cells(self) -> int:
        return self.feature_shape[0] * self.feature_shape[1]

    def _flatten(self, encodings) -> np.ndarray:
        if isinstance(encodings, EncodedMatrix):
            X = encodings.data.reshape(1, -1)
        elif isinstance(encodings, (list, tuple)):
            X = np.stack([e.data if isinstance(e, EncodedMatrix) else np.asarray(e) for e in encodings])
            X = X.reshape(X.shape[0], -1)
        else:
            X = np.asarray(encodings, dtype=np.float64)
            if X.ndim == 3:
                X = X.reshape(X.shape[0], -1)
            elif X.ndim == 2 and X.shape == self.feature_shape:
                X = X.reshape(1, -1)
        if X.ndim != 2 or X.shape[1] != self.n_cells:
            raise ShapeMismatch(
                f"encoding has {X.shape} cells, model expects shape {self.feature_shape}"
            )
        return np.asarray(X, dtype=np.float64)

    def predict(self, encodings) -> np.ndarray:
        X = self._flatten(encodings)
        out = np.full(X.shape[0], self.base_score, dtype=np.float64)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out

    def score(self, encoding) -> float:
        return float(self.predict(encoding)[0])


def _accuracy(scores: np.ndarray, li: np.ndarray, ri: np.ndarray, y: np.ndarray) -> float:
    d = scores[li] - scores[ri]
    correct = ((d > 0) & (y == 1)) | ((d < 0) & (y == 0))
    return float(np.mean(correct))


def train(
    train_pairs: Sequence[PairExample],
    val_pairs: Sequence[PairExample],
    encodings,
    config: TrainConfig = TrainConfig(),
) -> RankerModel:
    """Boost trees on training pairs, early-stopping on validation accuracy.

    ``encodings`` holds every architecture either side of a pair may
    reference, as (n, features, slots) or a list of EncodedMatrix. The
    returned model is the prefix of rounds that scored best on validation.
    """
    config.validate()
    if not train_pairs:
        raise EmptyPairSet("no training pairs")
    if not val_pairs:
        raise EmptyPairSet("no validation pairs")

    if isinstance(encodings, (list, tuple)):
        X3 = np.stack([e.data if isinstance(e, EncodedMatrix) else np.asarray(e) for e in encodings])
    else:
        X3 = np.asarray(encodings, dtype=np.float64)
    if X3.ndim != 3:
        raise ShapeMismatch(f"expected (n, features, slots) encodings, got {X3.shape}")
    n, rows, width = X3.shape
    X = X3.reshape(n, rows * width)

    tl = np.asarray([p.left for p in train_pairs], dtype=np.int64)
    tr = np.asarray([p.right for p in train_pairs], dtype=np.int64)
    ty = np.asarray([p.label for p in train_pairs], dtype=np.float64)
    vl = np.asarray([p.left for p in val_pairs], dtype=np.int64)
    vr = np.asarray([p.right for p in val_pairs], dtype=np.int64)
    vy = np.asarray([p.label for p in val_pairs], dtype=np.float64)
    hi = max(tl.max(), tr.max(), vl.max(), vr.max())
    if hi >= n:
        raise ShapeMismatch(f"pair references row {hi} but only {n} encodings given")

    referenced = np.unique(np.concatenate([tl, tr]))
    scores = np.zeros(n, dtype=np.float64)
    trees: list[RegressionTree] = []
    train_curve: list[float] = []
    val_curve: list[float] = []
    best_acc = -1.0
    best_round = 0
    stall = 0

    for _ in range(config.max_rounds):
        d = scores[tl] - scores[tr]
        p = sigmoid(d)
        g_pair = p - ty
        h_pair = p * (1.0 - p)
        g = np.zeros(n, dtype=np.float64)
        h = np.zeros(n, dtype=np.float64)
        np.add.at(g, tl, g_pair)
        np.add.at(g, tr, -g_pair)
        np.add.at(h, tl, h_pair)
        np.add.at(h, tr, h_pair)

        tree = fit_tree(X[referenced], g[referenced], h[referenced], config)
        trees.append(tree)
        scores += config.learning_rate * tree.predict(X)

        train_curve.append(float(np.sum(pair_loss(scores[tl], scores[tr], ty))))
        acc = _accuracy(scores, vl, vr, vy)
        val_curve.append(acc)
        if acc > best_acc:
            best_acc = acc
            best_round = len(trees)
            stall = 0
        else:
            stall += 1
            if stall >= config.early_stopping_rounds:
                break

    return RankerModel(
        trees=trees[:best_round],
        learning_rate=config.learning_rate,
        base_score=0.0,
        feature_shape=(rows, width),
        config=config,
        meta={
            "rounds_used": best_round,
            "rounds_grown": len(trees),
            "best_val_accuracy": best_acc,
            "train_loss_curve": train_curve,
            "val_accuracy_curve": val_curve,
        },
    )


# --- serialization -----------------------------------------------------------------


def _tree_to_json(tree: RegressionTree) -> dict:
    is_leaf = tree.feature < 0
    return {
        "feature": tree.feature.tolist(),
        "threshold": [None if leaf else t for t, leaf in zip(tree.threshold.tolist(), is_leaf)],
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": tree.value.tolist(),
    }


def _tree_from_json(obj: dict) -> RegressionTree:
    threshold = [0.0 if t is None else float(t) for t in obj["threshold"]]
    return RegressionTree(
        feature=np.asarray(obj["feature"], dtype=np.int32),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(obj["left"], dtype=np.int32),
        right=np.asarray(obj["right"], dtype=np.int32),
        value=np.asarray(obj["value"], dtype=np.float64),
    )


def model_to_json(model: RankerModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "model_kind": "pairwise_ranker",
        "config": asdict(model.config),
        "feature_shape": list(model.feature_shape),
        "base_score": model.base_score,
        "learning_rate": model.learning_rate,
        "trees": [_tree_to_json(t) for t in model.trees],
        "meta": model.meta,
    }


def model_from_json(obj: dict) -> RankerModel:
    version = obj.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatVersionMismatch(
            f"model format {version!r} not supported (expected {FORMAT_VERSION})"
        )
    kind = obj.get("model_kind", "pairwise_ranker")
    if kind != "pairwise_ranker":
        raise ModelKindMismatch(f"expected a pairwise_ranker model file, got {kind!r}")
    shape = obj["feature_shape"]
    return RankerModel(
        trees=[_tree_from_json(t) for t in obj["trees"]],
        learning_rate=float(obj["learning_rate"]),
        base_score=float(obj["base_score"]),
        feature_shape=(int(shape[0]), int(shape[1])),
        config=TrainConfig(**obj["config"]),
        meta=dict(obj.get("meta", {})),
    )


def save_model(path: str, model: RankerModel) -> None:
    write_text_atomic(path, json.dumps(model_to_json(model), sort_keys=True, indent=2) + "\n")


def load_model(path: str) -> RankerModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_json(json.load(fh))
