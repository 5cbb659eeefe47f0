"""HTTP facade over the ranking and search library.

Every endpoint is stateless: spaces, records, and models travel inside the
request and response bodies, so callers own persistence. Library errors map
to structured 400 responses carrying the error class name and its category,
which clients translate into their own failure conventions (the bundled CLI
turns categories into exit codes).
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ArchRankError
from ..importance import (
    build_report,
    prune_space,
    render_report,
    report_from_json,
    report_to_json,
    select_features,
)
from ..metrics import kendall_tau, pair_accuracy, spearman_rho
from ..oracle import (
    EvalRecord,
    SyntheticOracle,
    SyntheticOracleConfig,
    default_synthetic_config,
    record_from_json,
    record_to_json,
)
from ..pairs import Direction, PairExample, build_pairs, split_by_architecture
from ..ranker import TrainConfig, model_from_json, model_to_json, train
from ..search import (
    EvolutionConfig,
    evolutionary_search,
    fit_latency_predictor,
    hardware_aware_select,
    latency_model_from_json,
    latency_model_to_json,
    random_search,
)
from ..seeding import substream
from ..space import (
    PRESETS,
    SearchSpace,
    architecture_from_json,
    assignment_to_json,
    cardinality,
    encode_batch,
    resolve_space,
    sample_uniform,
    space_from_json,
    space_to_json,
    validate_space,
)
from . import schemas


def _space(ref: schemas.SpaceRef) -> SearchSpace:
    from ..errors import SpaceError

    if ref.preset is not None:
        return resolve_space(ref.preset)
    if ref.definition is not None:
        space = space_from_json(ref.definition)
        validate_space(space)
        return space
    raise SpaceError("space reference needs either a preset name or a definition")


def _oracle(spec: schemas.OracleSpec, space: SearchSpace, seed: int) -> SyntheticOracle:
    oracle_seed = spec.seed if spec.seed is not None else seed
    if spec.relevant_weights is None:
        config = default_synthetic_config(space, seed=oracle_seed, noise_sigma=spec.noise_sigma)
    else:
        config = SyntheticOracleConfig(
            seed=oracle_seed,
            relevant_weights=dict(spec.relevant_weights),
            null_features=frozenset(spec.null_features or ()),
            interaction_pairs=tuple(
                (a, b, float(w)) for a, b, w in (spec.interaction_pairs or ())
            ),
            noise_sigma=spec.noise_sigma,
        )
    return SyntheticOracle(config, profile=spec.profile)


def _records(space: SearchSpace, rows: list[dict]) -> list[EvalRecord]:
    return [record_from_json(space, row) for row in rows]


def _train_on_records(
    space: SearchSpace,
    records: list[EvalRecord],
    metric: str,
    direction: Direction,
    config: TrainConfig,
    seed: int,
    val_fraction: float,
    max_pairs: int | None,
):
    train_recs, val_recs = split_by_architecture(records, val_fraction, substream(seed, "split"))
    encodings = encode_batch(space, [r.arch for r in train_recs + val_recs])
    pair_rng = substream(seed, "pair-sampling")
    train_pairs = build_pairs(train_recs, metric, direction, max_pairs=max_pairs, rng=pair_rng)
    offset = len(train_recs)
    val_pairs = [
        PairExample(p.left + offset, p.right + offset, p.label)
        for p in build_pairs(val_recs, metric, direction)
    ]
    model = train(train_pairs, val_pairs, encodings, config)
    return model, train_pairs, val_pairs, encodings


def create_app() -> FastAPI:
    app = FastAPI(title="archrank", version=__version__)

    @app.exception_handler(ArchRankError)
    async def archrank_error(_req: Request, exc: ArchRankError) -> JSONResponse:
        body = schemas.ErrorResponse(
            error=schemas.ErrorBody(
                name=type(exc).__name__, category=exc.category, detail=str(exc)
            )
        )
        return JSONResponse(status_code=400, content=body.model_dump())

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.get("/presets", response_model=schemas.PresetsResponse)
    def presets() -> schemas.PresetsResponse:
        return schemas.PresetsResponse(presets=sorted(PRESETS))

    @app.post("/space/show", response_model=schemas.SpaceShowResponse)
    def space_show(ref: schemas.SpaceRef) -> schemas.SpaceShowResponse:
        return schemas.SpaceShowResponse(space=space_to_json(_space(ref)))

    @app.post("/space/validate", response_model=schemas.SpaceValidateResponse)
    def space_validate(ref: schemas.SpaceRef) -> schemas.SpaceValidateResponse:
        _space(ref)
        return schemas.SpaceValidateResponse(ok=True)

    @app.post("/space/count", response_model=schemas.SpaceCountResponse)
    def space_count(ref: schemas.SpaceRef) -> schemas.SpaceCountResponse:
        return schemas.SpaceCountResponse(cardinality=cardinality(_space(ref)))

    @app.post("/space/sample", response_model=schemas.SpaceSampleResponse)
    def space_sample(req: schemas.SpaceSampleRequest) -> schemas.SpaceSampleResponse:
        space = _space(req.space)
        rng = substream(req.seed, "sampling")
        archs = [assignment_to_json(sample_uniform(space, rng)) for _ in range(req.n)]
        return schemas.SpaceSampleResponse(architectures=archs)

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate(req: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
        space = _space(req.space)
        oracle = _oracle(req.oracle, space, req.seed)
        rng = substream(req.seed, "sampling")
        seen: dict[str, object] = {}
        attempts = 0
        # distinct architectures; a small space may not hold n of them, so
        # cap the resampling effort instead of spinning forever
        limit = max(10_000, 100 * req.n)
        from ..space import arch_hash

        while len(seen) < req.n and attempts < limit:
            arch = sample_uniform(space, rng)
            seen.setdefault(arch_hash(arch), arch)
            attempts += 1
        records = oracle.batch(list(seen.values()))
        return schemas.EvaluateResponse(
            records=[record_to_json(r) for r in records], oracle_id=oracle.oracle_id
        )

    @app.post("/train", response_model=schemas.TrainResponse)
    def train_endpoint(req: schemas.TrainRequest) -> schemas.TrainResponse:
        space = _space(req.space)
        records = _records(space, req.records)
        direction = Direction(req.direction)
        config = TrainConfig(seed=req.seed, **req.config.model_dump())
        if req.metric == "latency_ms":
            predictor = fit_latency_predictor(
                records,
                space,
                config,
                substream(req.seed, "split"),
                val_fraction=req.val_fraction,
                max_pairs=req.max_pairs,
            )
            meta = dict(predictor.model.meta)
            return schemas.TrainResponse(
                model=latency_model_to_json(predictor),
                kind="latency_predictor",
                report=_train_report(meta, req.metric),
            )
        model, _, _, _ = _train_on_records(
            space, records, req.metric, direction, config, req.seed, req.val_fraction, req.max_pairs
        )
        return schemas.TrainResponse(
            model=model_to_json(model), kind="ranker", report=_train_report(dict(model.meta), req.metric)
        )

    @app.post("/importance", response_model=schemas.ImportanceResponse)
    def importance(req: schemas.ImportanceRequest) -> schemas.ImportanceResponse:
        space = _space(req.space)
        records = _records(space, req.records)
        model = model_from_json(req.model)
        report = build_report(
            model,
            records,
            space,
            seed=req.seed,
            metric=req.metric,
            direction=Direction(req.direction),
            repetitions=req.repetitions,
        )
        kept = select_features(report, threshold=req.theta)
        payload = report_to_json(report)
        payload["theta"] = req.theta
        payload["kept"] = kept
        return schemas.ImportanceResponse(
            report=payload, kept=kept, table=render_report(report, threshold=req.theta)
        )

    @app.post("/search", response_model=schemas.SearchResponse)
    def search(req: schemas.SearchRequest) -> schemas.SearchResponse:
        space = _space(req.space)
        model = model_from_json(req.model)
        pruned_cardinality = None
        if req.importance_report is not None:
            payload = dict(req.importance_report)
            theta = float(payload.pop("theta", req.theta))
            payload.pop("kept", None)
            report = report_from_json(payload)
            kept = select_features(report, threshold=theta)
            anchor = architecture_from_json(space, report.anchor)
            space = prune_space(space, kept=kept, anchor=anchor)
            pruned_cardinality = cardinality(space)
        rng = substream(req.seed, "search")
        if req.latency_model is not None or req.max_latency_ms is not None:
            from ..errors import SearchError

            if req.latency_model is None or req.max_latency_ms is None:
                raise SearchError(
                    "hardware-aware selection needs both a latency model and a latency budget"
                )
            predictor = latency_model_from_json(req.latency_model)
            strategy = "evolutionary" if req.strategy == "evolutionary" else "uniform"
            result = hardware_aware_select(
                space,
                predictor,
                model,
                max_latency_ms=req.max_latency_ms,
                rng=rng,
                candidate_count=req.candidate_count,
                strategy=strategy,
            )
        elif req.strategy == "random":
            result = random_search(
                space, model, rng, epoch_size=req.epoch_size, stall_epochs=req.stall_epochs
            )
        else:
            config = EvolutionConfig(**req.evolution.model_dump())
            result = evolutionary_search(space, model, rng, config=config)
        return schemas.SearchResponse(
            best=assignment_to_json(result.best),
            best_score=result.best_score,
            evaluated_count=result.evaluated_count,
            trace=[(int(i), float(s)) for i, s in result.trace],
            pruned_cardinality=pruned_cardinality,
        )

    @app.post("/report", response_model=schemas.ReportResponse)
    def report(req: schemas.ReportRequest) -> schemas.ReportResponse:
        space = _space(req.space)
        records = _records(space, req.records)
        model = model_from_json(req.model)
        encodings = encode_batch(space, [r.arch for r in records])
        direction = Direction(req.direction)
        predicted = model.predict(encodings)
        sign = 1.0 if direction == Direction.HIGHER_IS_BETTER else -1.0
        actual = np.array([sign * r.metric(req.metric) for r in records], dtype=np.float64)
        pairs = build_pairs(records, req.metric, direction)
        metrics = {
            "kendall_tau": kendall_tau(predicted, actual),
            "spearman_rho": spearman_rho(predicted, actual),
            "pair_accuracy": pair_accuracy(model, pairs, encodings),
            "n_records": len(records),
            "n_pairs": len(pairs),
        }
        rows = [f"{'metric'.ljust(14)}  value"]
        for name in ("kendall_tau", "spearman_rho", "pair_accuracy"):
            rows.append(f"{name.ljust(14)}  {metrics[name]:.4f}")
        rows.append(f"{'n_records'.ljust(14)}  {len(records)}")
        rows.append(f"{'n_pairs'.ljust(14)}  {len(pairs)}")
        return schemas.ReportResponse(metrics=metrics, table="\n".join(rows))

    return app


def _train_report(meta: dict, metric: str) -> dict:
    keep = ("rounds_used", "rounds_grown", "best_val_accuracy")
    out = {k: meta[k] for k in keep if k in meta}
    out["metric"] = metric
    curve = meta.get("train_loss_curve") or []
    out["final_train_loss"] = curve[-1] if curve else None
    return out


app = create_app()
