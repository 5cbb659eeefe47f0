"""Search strategies over a space, driven by trained rankers.

All strategies only ever compare ranker scores, so any strictly increasing
transformation of the scores leaves the selected architectures unchanged.
Ties between equal scores resolve by canonical encoding order, which keeps
every run reproducible.

The hardware-aware path runs in two stages: a latency model filters
candidates against a millisecond budget, then a quality model ranks the
survivors. Latency predictions come from a pairwise ranker whose scores
are mapped back to milliseconds by an isotonic calibration fitted on the
training sample.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    FormatVersionMismatch,
    KExceedsCandidates,
    NoFeasibleCandidate,
    SearchError,
)
from .oracle import EvalRecord, write_text_atomic
from .pairs import Direction, build_pairs, split_by_architecture
from .ranker import (
    RankerModel,
    TrainConfig,
    model_from_json,
    model_to_json,
    train,
)
from .space import (
    Architecture,
    Scope,
    SearchSpace,
    SlotKey,
    Value,
    arch_hash,
    build_architecture,
    encode,
    encode_batch,
    sample_uniform,
    DECODER_DEPTH_FEATURE,
    ENCODER_DEPTH_FEATURE,
)

# Called once per scored candidate: (iteration, arch hash, scores, best so far).
TraceSink = Callable[[int, str, dict, float], None]


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 125
    parent_count: int = 25
    mutation_prob: float = 0.3
    max_iterations: int = 30

    def validate(self) -> None:
        if self.population_size < 1:
            raise SearchError("population_size must be >= 1")
        if not (1 <= self.parent_count <= self.population_size):
            raise SearchError("parent_count must be in [1, population_size]")
        if not (0.0 <= self.mutation_prob <= 1.0):
            raise SearchError("mutation_prob must be in [0, 1]")
        if self.max_iterations < 1:
            raise SearchError("max_iterations must be >= 1")


@dataclass
class SearchResult:
    best: Architecture
    best_score: float
    trace: list[tuple[int, float]]
    evaluated_count: int


def _encoding_key(space: SearchSpace, arch: Architecture) -> tuple:
    return tuple(encode(space, arch).flat().tolist())


def random_search(
    space: SearchSpace,
    model: RankerModel,
    rng: np.random.Generator,
    epoch_size: int = 100,
    stall_epochs: int = 3,
    trace_sink: TraceSink | None = None,
) -> SearchResult:
    """Sample uniformly in epochs until the leader stops moving.

    Stops once the best-so-far architecture survives ``stall_epochs``
    consecutive epochs unchanged. Ties never displace the incumbent.
    """
    if epoch_size < 1:
        raise SearchError("epoch_size must be >= 1")
    best: Architecture | None = None
    best_score = -np.inf
    trace: list[tuple[int, float]] = []
    evaluated = 0
    epoch = 0
    stall = 0
    while stall < stall_epochs:
        epoch += 1
        archs = [sample_uniform(space, rng) for _ in range(epoch_size)]
        scores = model.predict(encode_batch(space, archs))
        evaluated += len(archs)
        improved = False
        for arch, score in zip(archs, scores):
            if score > best_score:
                best, best_score = arch, float(score)
                improved = True
            if trace_sink is not None:
                trace_sink(epoch, arch_hash(arch), {"score": float(score)}, best_score)
        trace.append((epoch, best_score))
        stall = 0 if improved else stall + 1
    assert best is not None
    return SearchResult(best=best, best_score=best_score, trace=trace, evaluated_count=evaluated)


# --- evolution ----------------------------------------------------------------


def _crossover(
    space: SearchSpace,
    pa: Architecture,
    pb: Architecture,
    rng: np.random.Generator,
) -> dict[SlotKey, Value]:
    """Uniform per-slot mix of two parents.

    Depth comes from one parent drawn uniformly (per stack); layer slots
    beyond the donor parents' depth are sampled fresh from the domain.
    """
    assignment: dict[SlotKey, Value] = {}
    depths: dict[Scope, int] = {}
    for scope, name in (
        (Scope.PER_ENCODER_LAYER, ENCODER_DEPTH_FEATURE),
        (Scope.PER_DECODER_LAYER, DECODER_DEPTH_FEATURE),
    ):
        if space.has_feature(name):
            donor = pa if rng.integers(2) == 0 else pb
            v = donor.assignment[(name, None)]
            assignment[(name, None)] = v
            depths[scope] = int(v)
        else:
            depths[scope] = space.max_layers_for(scope)

    for fd in space.features:
        if fd.name in (ENCODER_DEPTH_FEATURE, DECODER_DEPTH_FEATURE):
            continue
        if fd.scope == Scope.GLOBAL:
            donor = pa if rng.integers(2) == 0 else pb
            assignment[(fd.name, None)] = donor.assignment[(fd.name, None)]
            continue
        depth = depths[fd.scope]
        for slot in range(depth):
            have_a = slot < pa.active_layers(fd.scope)
            have_b = slot < pb.active_layers(fd.scope)
            if have_a and have_b:
                donor = pa if rng.integers(2) == 0 else pb
                assignment[(fd.name, slot)] = donor.assignment[(fd.name, slot)]
            elif have_a or have_b:
                donor = pa if have_a else pb
                assignment[(fd.name, slot)] = donor.assignment[(fd.name, slot)]
            else:
                choices = space.slot_choices(fd, slot)
                assignment[(fd.name, slot)] = choices[int(rng.integers(len(choices)))]
    return assignment


def _mutate(
    space: SearchSpace,
    assignment: dict[SlotKey, Value],
    rng: np.random.Generator,
    prob: float,
) -> dict[SlotKey, Value]:
    """Per-slot resampling; depth mutations resample newly active slots."""
    out = dict(assignment)
    depths: dict[Scope, int] = {}
    for scope, name in (
        (Scope.PER_ENCODER_LAYER, ENCODER_DEPTH_FEATURE),
        (Scope.PER_DECODER_LAYER, DECODER_DEPTH_FEATURE),
    ):
        if not space.has_feature(name):
            depths[scope] = space.max_layers_for(scope)
            continue
        fd = space.feature(name)
        old = int(out[(name, None)])
        new = old
        choices = space.slot_choices(fd, None)
        if len(choices) > 1 and rng.random() < prob:
            new = int(choices[int(rng.integers(len(choices)))])
            out[(name, None)] = new
        depths[scope] = new
        if new != old:
            for other in space.features:
                if other.scope != scope:
                    continue
                for slot in range(old, new):  # grew: fill fresh slots
                    sc = space.slot_choices(other, slot)
                    out[(other.name, slot)] = sc[int(rng.integers(len(sc)))]
                for slot in range(new, old):  # shrank: drop stale slots
                    out.pop((other.name, slot), None)

    for fd in space.features:
        if fd.name in (ENCODER_DEPTH_FEATURE, DECODER_DEPTH_FEATURE):
            continue
        slots: Sequence[int | None]
        if fd.scope == Scope.GLOBAL:
            slots = [None]
        else:
            slots = list(range(depths[fd.scope]))
        for slot in slots:
            choices = space.slot_choices(fd, slot)
            if len(choices) > 1 and rng.random() < prob:
                out[(fd.name, slot)] = choices[int(rng.integers(len(choices)))]
    return out


def _ea_generations(
    space: SearchSpace,
    model: RankerModel,
    rng: np.random.Generator,
    config: EvolutionConfig,
):
    """Yield (iteration, population, scores) for each scored generation."""
    population = [sample_uniform(space, rng) for _ in range(config.population_size)]
    for iteration in range(1, config.max_iterations + 1):
        scores = model.predict(encode_batch(space, population))
        yield iteration, population, scores
        if iteration == config.max_iterations:
            break
        ranked = sorted(
            range(len(population)),
            key=lambda i: (-scores[i], _encoding_key(space, population[i])),
        )
        parents = [population[i] for i in ranked[: config.parent_count]]
        population = []
        for _ in range(config.population_size):
            pa = parents[int(rng.integers(len(parents)))]
            pb = parents[int(rng.integers(len(parents)))]
            child = _mutate(space, _crossover(space, pa, pb, rng), rng, config.mutation_prob)
            population.append(build_architecture(space, child))


def evolutionary_search(
    space: SearchSpace,
    model: RankerModel,
    rng: np.random.Generator,
    config: EvolutionConfig = EvolutionConfig(),
    trace_sink: TraceSink | None = None,
) -> SearchResult:
    """Score a population, breed the top slice, repeat.

    Each iteration replaces the whole population with offspring of the top
    ``parent_count`` members (uniform crossover then per-slot mutation).
    The best architecture ever scored is returned, so a lucky early sample
    cannot be lost to later drift.
    """
    config.validate()
    best: Architecture | None = None
    best_score = -np.inf
    trace: list[tuple[int, float]] = []
    evaluated = 0

    for iteration, population, scores in _ea_generations(space, model, rng, config):
        evaluated += len(population)
        for arch, score in zip(population, scores):
            if score > best_score:
                best, best_score = arch, float(score)
            if trace_sink is not None:
                trace_sink(iteration, arch_hash(arch), {"score": float(score)}, best_score)
        trace.append((iteration, best_score))

    assert best is not None
    return SearchResult(best=best, best_score=best_score, trace=trace, evaluated_count=evaluated)


def top_k(
    candidates: Sequence[Architecture] | SearchSpace,
    model: RankerModel,
    k: int,
    rng: np.random.Generator | None = None,
    sample_size: int | None = None,
) -> list[tuple[Architecture, float]]:
    """The k best-scoring candidates, descending, ties in encoding order.

    Pass either an explicit candidate list or a space to sample from (then
    ``rng`` and ``sample_size`` are required).
    """
    if isinstance(candidates, SearchSpace):
        if rng is None or sample_size is None:
            raise SearchError("sampling from a space needs rng and sample_size")
        pool = [sample_uniform(candidates, rng) for _ in range(sample_size)]
        space = candidates
    else:
        pool = list(candidates)
        if not pool:
            raise KExceedsCandidates("no candidates given")
        space = pool[0].space
    if k > len(pool):
        raise KExceedsCandidates(f"asked for top {k} of {len(pool)} candidates")
    scores = model.predict(encode_batch(space, pool))
    ranked = sorted(
        range(len(pool)), key=lambda i: (-scores[i], _encoding_key(space, pool[i]))
    )
    return [(pool[i], float(scores[i])) for i in ranked[:k]]


# --- latency calibration ---------------------------------------------------------


@dataclass(frozen=True)
class IsotonicCalibration:
    """Monotone non-decreasing piecewise-linear map fitted by pooled means."""

    x: tuple[float, ...]
    y: tuple[float, ...]

    @classmethod
    def fit(cls, x: Sequence[float], y: Sequence[float]) -> "IsotonicCalibration":
        xs = np.asarray(x, dtype=np.float64)
        ys = np.asarray(y, dtype=np.float64)
        if xs.size == 0 or xs.shape != ys.shape:
            raise SearchError("calibration needs matching non-empty x and y")
        order = np.lexsort((ys, xs))
        xs, ys = xs[order], ys[order]

        # pool adjacent violators, weighting by sample count
        bx: list[float] = []
        by: list[float] = []
        bw: list[int] = []
        for xi, yi in zip(xs, ys):
            bx.append(float(xi))
            by.append(float(yi))
            bw.append(1)
            while len(by) > 1 and by[-2] >= by[-1]:
                w = bw[-2] + bw[-1]
                merged_y = (by[-2] * bw[-2] + by[-1] * bw[-1]) / w
                merged_x = (bx[-2] * bw[-2] + bx[-1] * bw[-1]) / w
                bx[-2:] = [merged_x]
                by[-2:] = [merged_y]
                bw[-2:] = [w]
        return cls(x=tuple(bx), y=tuple(by))

    def predict(self, x) -> np.ndarray:
        scalar = np.ndim(x) == 0
        v = np.atleast_1d(np.asarray(x, dtype=np.float64))
        out = np.interp(v, self.x, self.y)  # clips to end blocks outside the range
        return np.asarray([float(out[0])]) if scalar else out


@dataclass
class LatencyPredictor:
    """Pairwise latency ranker plus a score-to-milliseconds calibration.

    The ranker is trained with lower-is-better orientation, so higher
    scores mean faster architectures and the calibration map is fitted on
    negated scores to make it non-decreasing.
    """

    model: RankerModel
    calibration: IsotonicCalibration

    def predict_ms(self, encodings) -> np.ndarray:
        return self.calibration.predict(-self.model.predict(encodings))


def fit_latency_predictor(
    records: Sequence[EvalRecord],
    space: SearchSpace,
    config: TrainConfig,
    rng: np.random.Generator,
    val_fraction: float = 0.2,
    max_pairs: int | None = None,
) -> LatencyPredictor:
    """Train a latency ranker on records and calibrate it on all of them."""
    train_recs, val_recs = split_by_architecture(records, val_fraction, rng)
    merged = list(train_recs) + list(val_recs)
    encodings = encode_batch(space, [r.arch for r in merged])
    n_train = len(train_recs)
    tp = build_pairs(train_recs, metric="latency_ms", direction=Direction.LOWER_IS_BETTER,
                     max_pairs=max_pairs, rng=rng)
    vp_local = build_pairs(val_recs, metric="latency_ms", direction=Direction.LOWER_IS_BETTER)
    vp = [type(p)(left=p.left + n_train, right=p.right + n_train, label=p.label) for p in vp_local]
    model = train(tp, vp, encodings, config)
    scores = model.predict(encodings)
    latencies = np.asarray([r.latency_ms for r in merged], dtype=np.float64)
    calibration = IsotonicCalibration.fit(-scores, latencies)
    return LatencyPredictor(model=model, calibration=calibration)


def latency_model_to_json(pred: LatencyPredictor) -> dict:
    return {
        "format_version": 1,
        "model_kind": "latency_predictor",
        "ranker": model_to_json(pred.model),
        "calibration": {"x": list(pred.calibration.x), "y": list(pred.calibration.y)},
    }


def latency_model_from_json(obj: dict) -> LatencyPredictor:
    if obj.get("format_version") != 1 or obj.get("model_kind") != "latency_predictor":
        raise FormatVersionMismatch("not a latency predictor file")
    calib = obj["calibration"]
    return LatencyPredictor(
        model=model_from_json(obj["ranker"]),
        calibration=IsotonicCalibration(x=tuple(calib["x"]), y=tuple(calib["y"])),
    )


def save_latency_model(path: str, pred: LatencyPredictor) -> None:
    write_text_atomic(path, json.dumps(latency_model_to_json(pred), sort_keys=True, indent=2) + "\n")


def load_latency_model(path: str) -> LatencyPredictor:
    with open(path, "r", encoding="utf-8") as fh:
        return latency_model_from_json(json.load(fh))


# --- two-stage hardware aware selection ---------------------------------------------


def hardware_aware_select(
    space: SearchSpace,
    latency_model: LatencyPredictor,
    quality_model: RankerModel,
    max_latency_ms: float,
    rng: np.random.Generator,
    candidate_count: int = 3000,
    strategy: str = "uniform",
    trace_sink: TraceSink | None = None,
) -> SearchResult:
    """Filter candidates by predicted latency, then rank survivors by quality.

    The returned architecture always satisfies the constraint under the
    latency model's own predictions. Raises NoFeasibleCandidate when the
    filter leaves nothing.
    """
    if candidate_count < 1:
        raise SearchError("candidate_count must be >= 1")
    if strategy == "uniform":
        candidates = [sample_uniform(space, rng) for _ in range(candidate_count)]
    elif strategy == "evolutionary":
        # pool every generation the quality-guided EA visits until the
        # candidate budget is met; diversity comes from the EA itself
        per_gen = EvolutionConfig().population_size
        cfg = EvolutionConfig(max_iterations=max(1, -(-candidate_count // per_gen)))
        candidates = []
        for _, population, _scores in _ea_generations(space, quality_model, rng, cfg):
            candidates.extend(population)
            if len(candidates) >= candidate_count:
                break
        candidates = candidates[:candidate_count]
    else:
        raise SearchError(f"unknown strategy {strategy!r}")

    X = encode_batch(space, candidates)
    predicted_ms = latency_model.predict_ms(X)
    feasible = np.nonzero(predicted_ms <= max_latency_ms)[0]
    if feasible.size == 0:
        raise NoFeasibleCandidate(
            f"no candidate predicted under {max_latency_ms} ms out of {candidate_count}"
        )
    quality = quality_model.predict(X)

    best_i = min(
        feasible,
        key=lambda i: (-quality[i], _encoding_key(space, candidates[i])),
    )
    if trace_sink is not None:
        for i in range(len(candidates)):
            trace_sink(
                1,
                arch_hash(candidates[i]),
                {
                    "score": float(quality[i]),
                    "predicted_latency_ms": float(predicted_ms[i]),
                    "feasible": bool(predicted_ms[i] <= max_latency_ms),
                },
                float(quality[best_i]),
            )
    return SearchResult(
        best=candidates[best_i],
        best_score=float(quality[best_i]),
        trace=[(1, float(quality[best_i]))],
        evaluated_count=len(candidates),
    )
