"""Rank agreement metrics.

These compare a model's predicted ordering against measured values. Both
correlation coefficients are tie-aware: kendall_tau is the tie-corrected
variant and spearman_rho assigns tied values their average rank.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DegenerateInput, EmptyPairSet, ShapeMismatch
from .pairs import PairExample


def _as_pair(predicted: Sequence[float], actual: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(predicted, dtype=np.float64)
    y = np.asarray(actual, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise ShapeMismatch("predicted and actual must be 1-d and the same length")
    if x.size < 2:
        raise DegenerateInput("need at least two points to correlate")
    return x, y


def kendall_tau(predicted: Sequence[float], actual: Sequence[float]) -> float:
    """Tie-corrected rank correlation in [-1, 1].

    Counts concordant minus discordant pairs, normalized by the geometric
    mean of the non-tied pair counts on each side. Raises DegenerateInput
    when either list is entirely tied.
    """
    x, y = _as_pair(predicted, actual)
    n = x.size
    iu = np.triu_indices(n, 1)
    sx = np.sign(x[:, None] - x[None, :])[iu]
    sy = np.sign(y[:, None] - y[None, :])[iu]
    n0 = n * (n - 1) // 2
    tied_x = int(np.sum(sx == 0))
    tied_y = int(np.sum(sy == 0))
    if tied_x == n0 or tied_y == n0:
        raise DegenerateInput("all values tied; rank correlation undefined")
    concordant_minus_discordant = float(np.sum(sx * sy))
    return concordant_minus_discordant / float(np.sqrt((n0 - tied_x) * (n0 - tied_y)))


def _average_ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=np.float64)
    xs = x[order]
    i = 0
    while i < x.size:
        j = i
        while j < x.size and xs[j] == xs[i]:
            j += 1
        ranks[order[i:j]] = (i + 1 + j) / 2.0  # mean of ranks i+1 .. j
        i = j
    return ranks


def spearman_rho(predicted: Sequence[float], actual: Sequence[float]) -> float:
    """Pearson correlation of average ranks, in [-1, 1]."""
    x, y = _as_pair(predicted, actual)
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    sx = rx - rx.mean()
    sy = ry - ry.mean()
    denom = float(np.sqrt(np.sum(sx * sx) * np.sum(sy * sy)))
    if denom == 0.0:
        raise DegenerateInput("all values tied; rank correlation undefined")
    return float(np.sum(sx * sy)) / denom


def pair_accuracy(model, pairs: Sequence[PairExample], encodings) -> float:
    """Fraction of pairs whose score order matches the label.

    An exact score tie can never reproduce a strict ordering, so it counts
    as incorrect.
    """
    if not pairs:
        raise EmptyPairSet("no pairs to score")
    scores = model.predict(encodings)
    li = np.asarray([p.left for p in pairs], dtype=np.int64)
    ri = np.asarray([p.right for p in pairs], dtype=np.int64)
    y = np.asarray([p.label for p in pairs], dtype=np.int64)
    d = scores[li] - scores[ri]
    correct = ((d > 0) & (y == 1)) | ((d < 0) & (y == 0))
    return float(np.mean(correct))
