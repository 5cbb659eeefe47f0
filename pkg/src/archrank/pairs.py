"""Turning evaluation records into ranked training pairs.

A ranker never sees absolute metric values, only ordered pairs. Pair
construction normalizes direction (the better architecture always carries
label 1 in first position) and splitting happens at the architecture level
so no architecture can leak between train and validation through its pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import DegenerateSplit, MissingMetric, PairError, TooFewRecords
from .oracle import EvalRecord
from .space import arch_hash


class Direction(str, Enum):
    LOWER_IS_BETTER = "lower"
    HIGHER_IS_BETTER = "higher"


@dataclass(frozen=True)
class PairExample:
    """Indices into a record list; label 1 means `left` outranks `right`."""

    left: int
    right: int
    label: int


def build_pairs(
    records: Sequence[EvalRecord],
    metric: str = "quality_loss",
    direction: Direction = Direction.LOWER_IS_BETTER,
    max_pairs: int | None = None,
    rng: np.random.Generator | None = None,
) -> list[PairExample]:
    """Build labelled pairs from every unordered record pair with a strict
    metric difference.

    Both orderings are emitted for each eligible pair: (better, worse, 1)
    and (worse, better, 0). Exact metric ties produce nothing. When
    ``max_pairs`` caps the count, that many unordered pairs are drawn
    uniformly without replacement before mirroring.
    """
    if len(records) < 2:
        raise TooFewRecords(f"need at least 2 records, got {len(records)}")
    values = [r.metric(metric) for r in records]  # raises MissingMetric

    eligible: list[tuple[int, int]] = []
    for i in range(len(records)):
        for j in range(i + 1, len(records)):
            if values[i] != values[j]:
                eligible.append((i, j))

    if max_pairs is not None and max_pairs < len(eligible):
        if rng is None:
            raise PairError("an rng is required when max_pairs subsamples")
        chosen = rng.choice(len(eligible), size=max_pairs, replace=False)
        eligible = [eligible[k] for k in sorted(chosen)]

    lower_wins = direction == Direction.LOWER_IS_BETTER
    out: list[PairExample] = []
    for i, j in eligible:
        i_better = (values[i] < values[j]) == lower_wins
        better, worse = (i, j) if i_better else (j, i)
        out.append(PairExample(left=better, right=worse, label=1))
        out.append(PairExample(left=worse, right=better, label=0))
    return out


def split_by_architecture(
    records: Sequence[EvalRecord],
    val_fraction: float,
    rng: np.random.Generator,
) -> tuple[list[EvalRecord], list[EvalRecord]]:
    """Partition records into train and validation by architecture.

    All records of one architecture land on the same side, so pairs built
    later can never straddle the split. Raises DegenerateSplit when fewer
    than two distinct architectures exist or a side would come out empty.
    """
    if not (0.0 < val_fraction < 1.0):
        raise DegenerateSplit(f"val_fraction must be in (0, 1), got {val_fraction}")
    order: list[str] = []
    seen: set[str] = set()
    for r in records:
        h = arch_hash(r.arch)
        if h not in seen:
            seen.add(h)
            order.append(h)
    if len(order) < 2:
        raise DegenerateSplit("need at least two distinct architectures to split")

    perm = rng.permutation(len(order))
    n_val = int(round(len(order) * val_fraction))
    n_val = min(max(n_val, 1), len(order) - 1)
    val_hashes = {order[k] for k in perm[:n_val]}

    train = [r for r in records if arch_hash(r.arch) not in val_hashes]
    val = [r for r in records if arch_hash(r.arch) in val_hashes]
    return train, val


def save_pairs(path: str, pairs: Sequence[PairExample], records: Sequence[EvalRecord]) -> None:
    """Write pairs as JSON lines keyed by architecture hash."""
    from .oracle import write_text_atomic

    hashes = [arch_hash(r.arch) for r in records]
    lines = [
        json.dumps(
            {"left": hashes[p.left], "right": hashes[p.right], "label": p.label},
            sort_keys=True,
            separators=(",", ":"),
        )
        for p in pairs
    ]
    write_text_atomic(path, "".join(line + "\n" for line in lines))


def load_pairs(path: str, records: Sequence[EvalRecord]) -> list[PairExample]:
    by_hash: dict[str, int] = {}
    for idx, r in enumerate(records):
        by_hash.setdefault(arch_hash(r.arch), idx)
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            try:
                out.append(
                    PairExample(
                        left=by_hash[obj["left"]],
                        right=by_hash[obj["right"]],
                        label=int(obj["label"]),
                    )
                )
            except KeyError as exc:
                raise PairError(f"pair references unknown architecture {exc}") from None
    return out
