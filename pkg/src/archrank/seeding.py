"""Deterministic random streams.

One top-level seed drives every stage. Each stage derives its own
independent generator from (seed, stream name), so adding a draw in one
stage never shifts the randomness seen by another.
"""

from __future__ import annotations

import hashlib

import numpy as np


def get_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)


def substream(seed: int, *path: str | int) -> np.random.Generator:
    """Generator for the sub-stream named by ``path`` under ``seed``.

    The path is hashed into the spawn key of a SeedSequence, which keeps
    sibling streams statistically independent and stable across runs.
    """
    key: list[int] = []
    for part in path:
        digest = hashlib.blake2b(str(part).encode("utf-8"), digest_size=8).digest()
        key.append(int.from_bytes(digest[:4], "big"))
        key.append(int.from_bytes(digest[4:], "big"))
    seq = np.random.SeedSequence(entropy=seed, spawn_key=tuple(key))
    return np.random.default_rng(seq)
