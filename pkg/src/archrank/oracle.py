"""Evaluation oracles and the analytic cost model.

Three ways to put numbers on an architecture: a synthetic quality function
with known structure (for tests and desk-scale experiments), an analytic
Transformer cost model (parameters, FLOPs, latency under a hardware
profile), and a tabular lookup over previously stored records. Every oracle
is deterministic given (oracle_id, seed, architecture).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import (
    BadTrimFraction,
    EmptyInput,
    MissingDimensionFeature,
    UnknownArchitecture,
    UnknownProfile,
    UnknownWeightedFeature,
)
from .seeding import substream
from .space import (
    Architecture,
    Scope,
    SearchSpace,
    arch_hash,
    architecture_from_json,
    assignment_to_json,
)


# --- measurement aggregation -------------------------------------------------


def trimmed_mean(samples: Sequence[float], trim_fraction: float = 0.1) -> float:
    """Mean after dropping the lowest and highest floor(n * fraction) values.

    This is the aggregation used when a latency number comes from repeated
    noisy measurements: outliers at both ends are discarded before
    averaging.
    """
    if not (0.0 <= trim_fraction < 0.5):
        raise BadTrimFraction(f"trim_fraction must lie in [0, 0.5), got {trim_fraction}")
    xs = sorted(float(x) for x in samples)
    if not xs:
        raise EmptyInput("no samples to aggregate")
    k = math.floor(len(xs) * trim_fraction)
    kept = xs[k : len(xs) - k]
    if not kept:
        raise EmptyInput("trimming removed every sample")
    return math.fsum(kept) / len(kept)


# --- synthetic quality ---------------------------------------------------------


@dataclass(frozen=True)
class SyntheticOracleConfig:
    """Ground-truth structure for the synthetic quality function.

    Quality loss is a weighted sum of 0-based domain indexes of the
    ``relevant_weights`` features, plus optional pairwise index products,
    plus Gaussian noise keyed by (seed, architecture). Features listed in
    ``null_features`` carry no signal by construction; the split is recorded
    so tests can check that importance scoring separates the two groups.
    """

    seed: int = 0
    relevant_weights: Mapping[str, float] = field(default_factory=dict)
    null_features: frozenset[str] = frozenset()
    interaction_pairs: tuple[tuple[str, str, float], ...] = ()
    noise_sigma: float = 0.0


def _index_level(arch: Architecture, name: str) -> float:
    """Mean 0-based domain index of a feature over its active slots."""
    fd = arch.space.feature(name)
    values = arch.values_for(name)
    if not values:
        return 0.0  # stack inactive, nothing to contribute
    return sum(fd.domain_index(v) for v in values) / len(values)


def synthetic_quality(cfg: SyntheticOracleConfig, arch: Architecture) -> float:
    space = arch.space
    for name in list(cfg.relevant_weights) + [a for pair in cfg.interaction_pairs for a in pair[:2]]:
        if not space.has_feature(name):
            raise UnknownWeightedFeature(f"weighted feature {name!r} not in space")
    for name in cfg.null_features:
        if not space.has_feature(name):
            raise UnknownWeightedFeature(f"null feature {name!r} not in space")

    loss = 0.0
    for name, weight in cfg.relevant_weights.items():
        loss += weight * _index_level(arch, name)
    for a, b, weight in cfg.interaction_pairs:
        loss += weight * _index_level(arch, a) * _index_level(arch, b)
    if cfg.noise_sigma > 0.0:
        rng = substream(cfg.seed, "synthetic-noise", arch_hash(arch))
        loss += cfg.noise_sigma * float(rng.standard_normal())
    return loss


# Ordering matters for how cleanly a permutation probe can recover the
# planted signal. Depth features sit last: layer count is readable off the
# active-slot pattern of every per-layer row, so randomizing the depth cell
# alone underestimates a signal routed through depth. Head counts sit late
# for a related reason: a binary per-layer feature enters the target as a
# mean over active slots, which dilutes each individual cell's share of the
# signal. Wide or global carriers make the best synthetic ground truth.
_RELEVANT_PRIORITY = (
    "Dec Emb Dim",
    "Enc Emb Dim",
    "Dec FFN Dim",
    "Enc FFN Dim",
    "Dec RPR Len",
    "Enc RPR Len",
    "Dec Head Num",
    "Enc Head Num",
    "Dec Layer Num",
    "Enc Layer Num",
)


def default_synthetic_config(
    space: SearchSpace, seed: int = 0, noise_sigma: float = 0.0
) -> SyntheticOracleConfig:
    """Pick three relevant features for a space and leave the rest null.

    Dimension-like features are preferred as signal carriers; features with
    singleton domains cannot carry signal and are never picked. Weights
    descend (1.0, 0.9, 0.9) and the two strongest features interact with
    weight 0.25. The weights are deliberately close together: a much weaker
    third feature decides so few pair orderings that its permutation score
    becomes indistinguishable from a null's.
    """
    usable = [fd.name for fd in space.features if len(fd.domain) >= 2]
    ranked = [n for n in _RELEVANT_PRIORITY if n in usable]
    ranked += [n for n in usable if n not in ranked]
    picked = ranked[:3]

    weights = {name: w for name, w in zip(picked, (1.0, 0.9, 0.9))}
    interactions: tuple[tuple[str, str, float], ...] = ()
    if len(picked) >= 2:
        interactions = ((picked[0], picked[1], 0.25),)
    nulls = frozenset(fd.name for fd in space.features if fd.name not in weights)
    return SyntheticOracleConfig(
        seed=seed,
        relevant_weights=weights,
        null_features=nulls,
        interaction_pairs=interactions,
        noise_sigma=noise_sigma,
    )


# --- analytic transformer cost model ---------------------------------------------

DEFAULT_VOCAB = 10000
DEFAULT_SRC_LEN = 30
DEFAULT_TGT_LEN = 30


def _stack_dims(arch: Architecture, prefix: str) -> tuple[int, int]:
    """(layers, embedding width) for one stack; width 0 when stack is empty."""
    layers = arch.encoder_layers if prefix == "Enc" else arch.decoder_layers
    if layers == 0:
        return 0, 0
    name = f"{prefix} Emb Dim"
    if not arch.space.has_feature(name):
        raise MissingDimensionFeature(
            f"space has {prefix.lower()} layers but no {name!r} feature"
        )
    return layers, int(arch.value(name))  # type: ignore[arg-type]


def _layer_value(arch: Architecture, name: str, slot: int, default: int | None) -> int:
    space = arch.space
    if not space.has_feature(name):
        if default is None:
            raise MissingDimensionFeature(f"feature {name!r} required but absent")
        return default
    fd = space.feature(name)
    if fd.scope == Scope.GLOBAL:
        return int(arch.value(name))  # type: ignore[arg-type]
    return int(arch.value(name, slot))  # type: ignore[arg-type]


def _rpr_table(r: int, d: int, heads: int) -> int:
    if r <= 0:
        return 0
    head_dim = max(1, d // max(1, heads))
    return 2 * (2 * r + 1) * head_dim  # one key and one value table, shared by heads


def analytic_params(
    arch: Architecture,
    vocab_src: int = DEFAULT_VOCAB,
    vocab_tgt: int = DEFAULT_VOCAB,
    shared_embeddings: bool = True,
) -> int:
    """Trainable parameter count of the Transformer an architecture denotes.

    Counts weight matrices, embedding tables, layer-norm affine terms and
    relative-position tables. Linear biases are not modelled. The output
    projection is tied to the target embedding. When encoder and decoder
    widths differ, the encoder output passes through one bias-free bridge
    projection and the cross-attention key/value projections absorb the
    width change.
    """
    enc_layers, enc_dim = _stack_dims(arch, "Enc")
    dec_layers, dec_dim = _stack_dims(arch, "Dec")

    total = 0
    if enc_layers > 0 and dec_layers > 0 and shared_embeddings and enc_dim == dec_dim:
        total += vocab_src * enc_dim  # one joint table; output projection tied
    else:
        if enc_layers > 0:
            total += vocab_src * enc_dim
        if dec_layers > 0:
            total += vocab_tgt * dec_dim

    for slot in range(enc_layers):
        ffn = _layer_value(arch, "Enc FFN Dim", slot, None)
        heads = _layer_value(arch, "Enc Head Num", slot, 8)
        rpr = _layer_value(arch, "Enc RPR Len", slot, 0)
        total += 4 * enc_dim * enc_dim          # q, k, v, o projections
        total += 2 * enc_dim * ffn              # position-wise feed forward
        total += 2 * (2 * enc_dim)              # two layer norms
        total += _rpr_table(rpr, enc_dim, heads)
    if enc_layers > 0:
        total += 2 * enc_dim                    # final encoder norm

    for slot in range(dec_layers):
        ffn = _layer_value(arch, "Dec FFN Dim", slot, None)
        heads = _layer_value(arch, "Dec Head Num", slot, 8)
        rpr = _layer_value(arch, "Dec RPR Len", slot, 0)
        total += 4 * dec_dim * dec_dim          # masked self attention
        total += 2 * dec_dim * ffn
        total += _rpr_table(rpr, dec_dim, heads)
        if enc_layers > 0:
            total += 2 * dec_dim * dec_dim      # cross attention q, o
            total += 2 * enc_dim * dec_dim      # cross attention k, v
            total += 3 * (2 * dec_dim)
        else:
            total += 2 * (2 * dec_dim)
    if dec_layers > 0:
        total += 2 * dec_dim                    # final decoder norm

    if enc_layers > 0 and dec_layers > 0 and enc_dim != dec_dim:
        total += enc_dim * dec_dim              # bias-free bridge projection

    return total


def analytic_flops(
    arch: Architecture,
    seq_src: int = DEFAULT_SRC_LEN,
    seq_tgt: int = DEFAULT_TGT_LEN,
    vocab_tgt: int = DEFAULT_VOCAB,
) -> float:
    """Forward-pass FLOPs for one sentence, decoding incrementally.

    Multiply-accumulate counts as two operations. Head count does not move
    the total because projection widths are unchanged by the split.
    """
    enc_layers, enc_dim = _stack_dims(arch, "Enc")
    dec_layers, dec_dim = _stack_dims(arch, "Dec")

    fl = 0.0
    for slot in range(enc_layers):
        ffn = _layer_value(arch, "Enc FFN Dim", slot, None)
        fl += seq_src * (8.0 * enc_dim * enc_dim)        # q, k, v, o
        fl += 4.0 * seq_src * seq_src * enc_dim          # scores and mix
        fl += seq_src * (4.0 * enc_dim * ffn)

    for slot in range(dec_layers):
        ffn = _layer_value(arch, "Dec FFN Dim", slot, None)
        fl += seq_tgt * (8.0 * dec_dim * dec_dim)        # self attention projections
        fl += 2.0 * seq_tgt * (seq_tgt + 1) * dec_dim    # incremental masked attention
        fl += seq_tgt * (4.0 * dec_dim * ffn)
        if enc_layers > 0:
            arity = _layer_value(arch, "Enc-Dec Attn", slot, 1)
            memory = arity * seq_src
            fl += 4.0 * memory * enc_dim * dec_dim       # k, v over attended memory
            fl += seq_tgt * (4.0 * dec_dim * dec_dim)    # cross attention q, o
            fl += seq_tgt * (4.0 * memory * dec_dim)     # scores and mix
    if dec_layers > 0:
        fl += seq_tgt * (2.0 * dec_dim * vocab_tgt)      # output projection

    return fl


@dataclass(frozen=True)
class HardwareProfile:
    """Coefficients mapping an architecture to single-sentence latency.

    ``flops`` mode is compute-bound: affine in total FLOPs. ``steps`` mode
    is dispatch-bound: affine in sequential decoding work, indifferent to
    feed-forward width until ``ffn_saturation``.
    """

    name: str
    mode: str
    base_ms: float
    ms_per_gflop: float = 0.0
    decode_step_ms: float = 0.0
    encode_layer_ms: float = 0.0
    attn_step_ms: float = 0.0
    ffn_saturation: int = 0
    ffn_over_ms: float = 0.0


CPU_LIKE = HardwareProfile(name="cpu_like", mode="flops", base_ms=40.0, ms_per_gflop=9.0)
GPU_LIKE = HardwareProfile(
    name="gpu_like",
    mode="steps",
    base_ms=18.0,
    decode_step_ms=0.65,
    encode_layer_ms=0.4,
    attn_step_ms=0.12,
    ffn_saturation=8192,
    ffn_over_ms=0.002,
)

PROFILES = {p.name: p for p in (CPU_LIKE, GPU_LIKE)}


def get_profile(profile: str | HardwareProfile) -> HardwareProfile:
    if isinstance(profile, HardwareProfile):
        return profile
    try:
        return PROFILES[profile]
    except KeyError:
        raise UnknownProfile(
            f"unknown hardware profile {profile!r}; expected one of {sorted(PROFILES)}"
        ) from None


def analytic_latency(
    arch: Architecture,
    profile: str | HardwareProfile = "cpu_like",
    seq_src: int = DEFAULT_SRC_LEN,
    seq_tgt: int = DEFAULT_TGT_LEN,
    vocab_tgt: int = DEFAULT_VOCAB,
) -> float:
    """Latency in milliseconds under a hardware profile.

    An architecture with no layers costs exactly the profile's base
    overhead.
    """
    prof = get_profile(profile)
    enc_layers = arch.encoder_layers
    dec_layers = arch.decoder_layers

    if prof.mode == "flops":
        if enc_layers == 0 and dec_layers == 0:
            return prof.base_ms
        fl = analytic_flops(arch, seq_src=seq_src, seq_tgt=seq_tgt, vocab_tgt=vocab_tgt)
        return prof.base_ms + prof.ms_per_gflop * fl / 1e9

    total_arity = 0
    ffn_over = 0
    for slot in range(dec_layers):
        if enc_layers > 0:
            total_arity += _layer_value(arch, "Enc-Dec Attn", slot, 1)
        if arch.space.has_feature("Dec FFN Dim"):
            ffn_over += max(0, _layer_value(arch, "Dec FFN Dim", slot, 0) - prof.ffn_saturation)
    for slot in range(enc_layers):
        if arch.space.has_feature("Enc FFN Dim"):
            ffn_over += max(0, _layer_value(arch, "Enc FFN Dim", slot, 0) - prof.ffn_saturation)

    return (
        prof.base_ms
        + prof.decode_step_ms * dec_layers * seq_tgt
        + prof.encode_layer_ms * enc_layers
        + prof.attn_step_ms * total_arity * seq_tgt
        + prof.ffn_over_ms * ffn_over
    )


# --- records ------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalRecord:
    """One architecture's measured numbers under one oracle and seed."""

    arch: Architecture
    quality_loss: float
    latency_ms: float
    params: int
    flops: float
    oracle_id: str
    seed: int

    def metric(self, name: str) -> float:
        from .errors import MissingMetric

        if name not in ("quality_loss", "latency_ms", "params", "flops"):
            raise MissingMetric(f"records carry no metric named {name!r}")
        return float(getattr(self, name))

    def key(self) -> tuple[str, int, str]:
        return (self.oracle_id, self.seed, arch_hash(self.arch))


def record_to_json(record: EvalRecord) -> dict:
    return {
        "arch": assignment_to_json(record.arch),
        "quality_loss": record.quality_loss,
        "latency_ms": record.latency_ms,
        "params": record.params,
        "flops": record.flops,
        "oracle_id": record.oracle_id,
        "seed": record.seed,
    }


def record_from_json(space: SearchSpace, obj: Mapping) -> EvalRecord:
    return EvalRecord(
        arch=architecture_from_json(space, obj["arch"]),
        quality_loss=float(obj["quality_loss"]),
        latency_ms=float(obj["latency_ms"]),
        params=int(obj["params"]),
        flops=float(obj["flops"]),
        oracle_id=str(obj["oracle_id"]),
        seed=int(obj["seed"]),
    )


class Oracle:
    """Base evaluator: deterministic, with per-architecture memoisation."""

    def __init__(self, oracle_id: str, seed: int):
        self.oracle_id = oracle_id
        self.seed = seed
        self._cache: dict[str, EvalRecord] = {}

    def evaluate(self, arch: Architecture) -> EvalRecord:
        key = arch_hash(arch)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._evaluate(arch)
            self._cache[key] = hit
        return hit

    def batch(self, archs: Iterable[Architecture]) -> list[EvalRecord]:
        return [self.evaluate(a) for a in archs]

    def _evaluate(self, arch: Architecture) -> EvalRecord:
        raise NotImplementedError


class SyntheticOracle(Oracle):
    """Synthetic quality plus analytic cost numbers.

    Cost fields fall back to zero when the space carries no dimension
    features at all, so purely abstract spaces still evaluate.
    """

    def __init__(
        self,
        config: SyntheticOracleConfig,
        profile: str | HardwareProfile = "cpu_like",
        vocab: int = DEFAULT_VOCAB,
        seq_src: int = DEFAULT_SRC_LEN,
        seq_tgt: int = DEFAULT_TGT_LEN,
    ):
        digest = _config_digest(config)
        super().__init__(oracle_id=f"synthetic-{digest}", seed=config.seed)
        self.config = config
        self.profile = get_profile(profile)
        self.vocab = vocab
        self.seq_src = seq_src
        self.seq_tgt = seq_tgt

    def _evaluate(self, arch: Architecture) -> EvalRecord:
        quality = synthetic_quality(self.config, arch)
        try:
            params = analytic_params(arch, vocab_src=self.vocab, vocab_tgt=self.vocab)
            flops = analytic_flops(
                arch, seq_src=self.seq_src, seq_tgt=self.seq_tgt, vocab_tgt=self.vocab
            )
            latency = analytic_latency(
                arch,
                self.profile,
                seq_src=self.seq_src,
                seq_tgt=self.seq_tgt,
                vocab_tgt=self.vocab,
            )
        except MissingDimensionFeature:
            params, flops, latency = 0, 0.0, 0.0
        return EvalRecord(
            arch=arch,
            quality_loss=quality,
            latency_ms=latency,
            params=params,
            flops=flops,
            oracle_id=self.oracle_id,
            seed=self.seed,
        )


class TabularOracle(Oracle):
    """Replays stored records; unknown architectures are an error."""

    def __init__(self, records: Sequence[EvalRecord], oracle_id: str = "tabular", seed: int = 0):
        super().__init__(oracle_id=oracle_id, seed=seed)
        self._table = {arch_hash(r.arch): r for r in records}

    def _evaluate(self, arch: Architecture) -> EvalRecord:
        key = arch_hash(arch)
        if key not in self._table:
            raise UnknownArchitecture(f"no stored record for architecture {key}")
        return self._table[key]


def _config_digest(config: SyntheticOracleConfig) -> str:
    import hashlib

    payload = json.dumps(
        {
            "seed": config.seed,
            "weights": dict(sorted(config.relevant_weights.items())),
            "nulls": sorted(config.null_features),
            "interactions": sorted(config.interaction_pairs),
            "noise_sigma": config.noise_sigma,
        },
        sort_keys=True,
    )
    return hashlib.blake2b(payload.encode("utf-8"), digest_size=4).hexdigest()


# --- record files ---------------------------------------------------------------------


def write_text_atomic(path: str, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see halves."""
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def save_records(path: str, records: Sequence[EvalRecord]) -> None:
    lines = [
        json.dumps(record_to_json(r), sort_keys=True, separators=(",", ":"))
        for r in records
    ]
    write_text_atomic(path, "".join(line + "\n" for line in lines))


def load_records(path: str, space: SearchSpace) -> list[EvalRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(record_from_json(space, json.loads(line)))
    return records


def append_records(
    path: str,
    records: Sequence[EvalRecord],
    space: SearchSpace,
    allow_dup: bool = False,
) -> int:
    """Merge new records into a store file; returns how many were added.

    Without ``allow_dup``, a record whose (oracle_id, seed, architecture)
    key already exists in the file is dropped.
    """
    existing = load_records(path, space) if os.path.exists(path) else []
    if allow_dup:
        merged = existing + list(records)
        added = len(records)
    else:
        seen = {r.key() for r in existing}
        fresh = []
        for r in records:
            if r.key() not in seen:
                seen.add(r.key())
                fresh.append(r)
        merged = existing + fresh
        added = len(fresh)
    save_records(path, merged)
    return added
