"""Permutation-style feature importance and search space pruning.

A feature matters to a trained ranker if scrambling it hurts: importance is
the ratio of the model's total pairwise loss after randomizing that
feature's cells to its loss on clean encodings. Scores hover near 1 for
features the model ignores and grow with reliance. Features below a chosen
threshold get pinned to the values of an anchor architecture, shrinking the
space the search phase has to cover.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ImportanceError
from .oracle import EvalRecord
from .pairs import Direction, build_pairs
from .ranker import RankerModel, pair_loss
from .seeding import substream
from .space import (
    Architecture,
    Scope,
    SearchSpace,
    SlotKey,
    Value,
    assignment_to_json,
    encode_batch,
    encoded_value,
    fix_slots,
)

logger = logging.getLogger(__name__)

DEFAULT_REPETITIONS = 5


def total_error(model: RankerModel, pairs, encodings) -> float:
    """Summed pairwise loss of a model over labelled pairs."""
    if not pairs:
        raise ImportanceError("no pairs to evaluate")
    scores = model.predict(encodings)
    li = np.asarray([p.left for p in pairs], dtype=np.int64)
    ri = np.asarray([p.right for p in pairs], dtype=np.int64)
    y = np.asarray([p.label for p in pairs], dtype=np.float64)
    return float(np.sum(pair_loss(scores[li], scores[ri], y)))


def randomize_feature(
    encodings: np.ndarray,
    space: SearchSpace,
    feature: str,
    rng: np.random.Generator,
) -> np.ndarray:
    """Return a copy of (n, features, slots) encodings with one feature's
    cells resampled uniformly from its domain.

    Per-layer cells are resampled independently per active slot; inactive
    (zero) cells stay untouched, as does every other feature row.
    """
    fd = space.feature(feature)
    row = space.feature_row(feature)
    X = np.array(encodings, dtype=np.float64, copy=True)
    if X.ndim != 3:
        raise ImportanceError(f"expected (n, features, slots) encodings, got {X.shape}")
    codes = np.asarray([encoded_value(fd, v) for v in fd.domain], dtype=np.float64)
    for i in range(X.shape[0]):
        active = np.nonzero(X[i, row] != 0.0)[0]
        if active.size:
            draws = rng.integers(len(codes), size=active.size)
            X[i, row, active] = codes[draws]
    return X


def feature_importance(
    model: RankerModel,
    sample_records: Sequence[EvalRecord],
    space: SearchSpace,
    feature: str,
    rng: np.random.Generator,
    metric: str = "quality_loss",
    direction: Direction = Direction.LOWER_IS_BETTER,
    repetitions: int = DEFAULT_REPETITIONS,
) -> float:
    """Importance of one feature as a randomized-to-clean loss ratio.

    The sample records supply both the encodings and the true pair labels.
    A score of exactly 1 means randomizing changed nothing (always the case
    for singleton domains); materially above 1 means the model leans on the
    feature.
    """
    pairs = build_pairs(sample_records, metric=metric, direction=direction)
    if not pairs:
        raise ImportanceError("every sampled record ties on the metric")
    if len(space.feature(feature).domain) == 1:
        # Resampling a one-value domain reproduces the input bit for bit, so
        # the ratio is 1 by construction. Returning it directly keeps the
        # guarantee exact instead of leaving it to x*reps/reps rounding.
        return 1.0
    enc = encode_batch(space, [r.arch for r in sample_records])
    l_total = total_error(model, pairs, enc)
    perturbed_sum = 0.0
    for _ in range(repetitions):
        shuffled = randomize_feature(enc, space, feature, rng)
        perturbed_sum += total_error(model, pairs, shuffled)
    return (perturbed_sum / repetitions) / l_total


@dataclass(frozen=True)
class ImportanceReport:
    """Per-feature scores plus enough context to reproduce and act on them."""

    per_feature: Mapping[str, float]
    sample_size: int
    l_total: float
    seed: int
    metric: str
    direction: Direction
    repetitions: int
    anchor: Mapping[str, object]  # assignment of the best sampled architecture


def build_report(
    model: RankerModel,
    sample_records: Sequence[EvalRecord],
    space: SearchSpace,
    seed: int,
    metric: str = "quality_loss",
    direction: Direction = Direction.LOWER_IS_BETTER,
    repetitions: int = DEFAULT_REPETITIONS,
) -> ImportanceReport:
    """Score every feature with its own derived random stream.

    Streams are keyed by feature name, so scores do not depend on the order
    features are processed in and per-feature work could run concurrently.
    """
    pairs = build_pairs(sample_records, metric=metric, direction=direction)
    if not pairs:
        raise ImportanceError("every sampled record ties on the metric")
    enc = encode_batch(space, [r.arch for r in sample_records])
    l_total = total_error(model, pairs, enc)

    per_feature: dict[str, float] = {}
    for fd in space.features:
        if len(fd.domain) == 1:
            # Resampling a one-value domain reproduces the input bit for
            # bit; report the ratio as exactly 1 rather than leaving it to
            # x*reps/reps rounding.
            per_feature[fd.name] = 1.0
            continue
        rng = substream(seed, "importance", fd.name)
        perturbed_sum = 0.0
        for _ in range(repetitions):
            shuffled = randomize_feature(enc, space, fd.name, rng)
            perturbed_sum += total_error(model, pairs, shuffled)
        per_feature[fd.name] = (perturbed_sum / repetitions) / l_total

    best = _best_record(sample_records, metric, direction)
    return ImportanceReport(
        per_feature=per_feature,
        sample_size=len(sample_records),
        l_total=l_total,
        seed=seed,
        metric=metric,
        direction=direction,
        repetitions=repetitions,
        anchor=assignment_to_json(best.arch),
    )


def _best_record(records: Sequence[EvalRecord], metric: str, direction: Direction) -> EvalRecord:
    lower = direction == Direction.LOWER_IS_BETTER
    best = records[0]
    for r in records[1:]:
        if (r.metric(metric) < best.metric(metric)) == lower and r.metric(metric) != best.metric(metric):
            best = r
    return best


def select_features(report: ImportanceReport, threshold: float) -> list[str]:
    """Feature names whose score reaches the threshold, in report order.

    An empty result is legal but suspicious, so it logs a warning instead
    of failing.
    """
    kept = [name for name, score in report.per_feature.items() if score >= threshold]
    if not kept:
        logger.warning(
            "no feature reached importance threshold %.3f; pruning would pin every feature",
            threshold,
        )
    return kept


def prune_space(space: SearchSpace, kept: Sequence[str], anchor: Architecture) -> SearchSpace:
    """Pin every feature not in ``kept`` to the anchor's values.

    Per-layer features are pinned slot by slot; slots deeper than the
    anchor's active depth inherit its deepest layer's value so the pinned
    feature contributes exactly one choice at any depth the search may
    visit.
    """
    keep = set(kept)
    pins: dict[SlotKey, Value] = {}
    for fd in space.features:
        if fd.name in keep:
            continue
        if fd.scope == Scope.GLOBAL:
            pins[(fd.name, None)] = anchor.value(fd.name)
            continue
        anchor_depth = anchor.active_layers(fd.scope)
        if anchor_depth == 0:
            continue
        for slot in range(space.max_layers_for(fd.scope)):
            pins[(fd.name, slot)] = anchor.value(fd.name, min(slot, anchor_depth - 1))
    return fix_slots(space, pins)


def render_report(report: ImportanceReport, threshold: float | None = None) -> str:
    """Fixed-width text table, highest scores first."""
    rows = sorted(report.per_feature.items(), key=lambda kv: (-kv[1], kv[0]))
    name_w = max(len("feature"), max((len(n) for n, _ in rows), default=0))
    lines = [f"{'feature'.ljust(name_w)}  {'importance':>10}  kept"]
    for name, score in rows:
        mark = ""
        if threshold is not None:
            mark = "yes" if score >= threshold else "no"
        lines.append(f"{name.ljust(name_w)}  {score:>10.4f}  {mark}")
    return "\n".join(lines)


def report_to_json(report: ImportanceReport) -> dict:
    return {
        "per_feature": dict(report.per_feature),
        "sample_size": report.sample_size,
        "l_total": report.l_total,
        "seed": report.seed,
        "metric": report.metric,
        "direction": report.direction.value,
        "repetitions": report.repetitions,
        "anchor": dict(report.anchor),
    }


def report_from_json(obj: Mapping) -> ImportanceReport:
    return ImportanceReport(
        per_feature={str(k): float(v) for k, v in obj["per_feature"].items()},
        sample_size=int(obj["sample_size"]),
        l_total=float(obj["l_total"]),
        seed=int(obj["seed"]),
        metric=str(obj["metric"]),
        direction=Direction(obj["direction"]),
        repetitions=int(obj["repetitions"]),
        anchor=dict(obj["anchor"]),
    )
