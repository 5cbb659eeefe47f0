"""Command line front end.

Each subcommand is a thin client over the HTTP service: it loads input
files, posts one request, and writes the response to disk. By default the
service runs in-process (no socket, nothing to start); pass ``--server``
to talk to a remote instance instead. File handling stays on this side so
the service can remain stateless.

Exit codes: 0 ok, 2 config, 3 oracle, 4 training, 5 importance, 6 search.
"""

from __future__ import annotations

import json
import os
import sys

import click
import httpx

from .errors import EXIT_CODES

_SEED_REQUIRED = "a seed is required (pass --seed or put \"seed\" in the config file)"


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    # No server given: mount the app in-process. TestClient is the sync
    # bridge starlette ships for ASGI apps; there is no socket involved.
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    from .service import app

    return TestClient(app, base_url="http://archrank.internal")


def _call(ctx: click.Context, method: str, path: str, payload: dict | None = None) -> dict:
    client = _client(ctx.obj.get("server"))
    try:
        response = client.request(method, path, json=payload)
    except httpx.HTTPError as exc:
        _fail(f"cannot reach service: {exc}", EXIT_CODES["config"])
    finally:
        client.close()
    if response.status_code >= 400:
        try:
            error = response.json()["error"]
            code = EXIT_CODES.get(error.get("category", "config"), EXIT_CODES["config"])
            _fail(f"{error['name']}: {error['detail']}", code)
        except (KeyError, ValueError):
            _fail(f"service returned HTTP {response.status_code}: {response.text}",
                  EXIT_CODES["config"])
    return response.json()


def _space_ref(spec: str) -> dict:
    """Interpret --space as a preset name or a path to a space JSON file."""
    if os.path.exists(spec):
        return {"definition": _read_json(spec)}
    return {"preset": spec}


def _read_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        _fail(f"file not found: {path}", EXIT_CODES["config"])
    except json.JSONDecodeError as exc:
        _fail(f"{path} is not valid JSON: {exc}", EXIT_CODES["config"])


def _read_jsonl(path: str) -> list[dict]:
    rows = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append(json.loads(line))
    except FileNotFoundError:
        _fail(f"file not found: {path}", EXIT_CODES["config"])
    except json.JSONDecodeError as exc:
        _fail(f"{path} is not valid JSON-lines: {exc}", EXIT_CODES["config"])
    return rows


def _write_text(path: str, text: str) -> None:
    from .oracle import write_text_atomic

    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    write_text_atomic(path, text)


def _write_json(path: str, obj: dict) -> None:
    _write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _resolve_out(ctx: click.Context, path: str) -> str:
    out_dir = ctx.obj.get("output_dir")
    if out_dir and not os.path.isabs(path):
        return os.path.join(out_dir, path)
    return path


def _cfg(ctx: click.Context, section: str) -> dict:
    value = ctx.obj.get("config", {}).get(section, {})
    return dict(value) if isinstance(value, dict) else {}


def _seed(ctx: click.Context, override: int | None) -> int:
    if override is not None:
        return override
    seed = ctx.obj.get("seed")
    if seed is None:
        _fail(_SEED_REQUIRED, EXIT_CODES["config"])
    return int(seed)


def _echo(ctx: click.Context, text: str) -> None:
    if not ctx.obj.get("quiet"):
        click.echo(text)


@click.group()
@click.option("--seed", type=int, default=None, help="Top-level seed; all randomness derives from it.")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="JSON run config; flags override its values.")
@click.option("--quiet", is_flag=True, default=False, help="Suppress informational output.")
@click.option("--server", default=None, metavar="URL",
              help="Base URL of a running service; default runs it in-process.")
@click.pass_context
def main(ctx: click.Context, seed: int | None, config_path: str | None, quiet: bool, server: str | None) -> None:
    """Architecture ranking and search pipeline."""
    ctx.ensure_object(dict)
    config = _read_json(config_path) if config_path else {}
    ctx.obj["config"] = config
    ctx.obj["seed"] = seed if seed is not None else config.get("seed")
    ctx.obj["quiet"] = quiet
    ctx.obj["server"] = server
    ctx.obj["output_dir"] = config.get("output_dir")


@main.group()
def space() -> None:
    """Inspect and sample search spaces."""


@space.command("show")
@click.option("--space", "space_spec", required=True, help="Preset name or space JSON path.")
@click.pass_context
def space_show(ctx: click.Context, space_spec: str) -> None:
    out = _call(ctx, "POST", "/space/show", _space_ref(space_spec))
    click.echo(json.dumps(out["space"], sort_keys=True, indent=2))


@space.command("count")
@click.option("--space", "space_spec", required=True)
@click.pass_context
def space_count(ctx: click.Context, space_spec: str) -> None:
    out = _call(ctx, "POST", "/space/count", _space_ref(space_spec))
    click.echo(str(out["cardinality"]))


@space.command("sample")
@click.option("--space", "space_spec", required=True)
@click.option("--n", type=int, default=1, show_default=True)
@click.option("--seed", "seed_override", type=int, default=None)
@click.option("--out", "out_path", default=None, help="Write JSON-lines here instead of stdout.")
@click.pass_context
def space_sample(ctx: click.Context, space_spec: str, n: int, seed_override: int | None,
                 out_path: str | None) -> None:
    seed = _seed(ctx, seed_override)
    out = _call(ctx, "POST", "/space/sample",
                {"space": _space_ref(space_spec), "n": n, "seed": seed})
    lines = [_dump_line(a) for a in out["architectures"]]
    if out_path:
        _write_text(_resolve_out(ctx, out_path), "".join(line + "\n" for line in lines))
        _echo(ctx, f"wrote {len(lines)} architectures to {out_path}")
    else:
        for line in lines:
            click.echo(line)


@main.command()
@click.option("--space", "space_spec", required=True)
@click.option("--oracle", "oracle_kind", default="synthetic", show_default=True,
              type=click.Choice(["synthetic"]))
@click.option("--n", type=int, required=True, help="How many distinct architectures to evaluate.")
@click.option("--seed", "seed_override", type=int, default=None)
@click.option("--noise-sigma", type=float, default=None)
@click.option("--profile", default=None, help="Hardware profile for the latency numbers.")
@click.option("--out", "out_path", required=True, help="Record store (JSON-lines), appended to.")
@click.option("--allow-dup", is_flag=True, default=False,
              help="Append even records whose key already exists in the store.")
@click.pass_context
def evaluate(ctx: click.Context, space_spec: str, oracle_kind: str, n: int,
             seed_override: int | None, noise_sigma: float | None, profile: str | None,
             out_path: str, allow_dup: bool) -> None:
    """Sample architectures and record their measured numbers."""
    seed = _seed(ctx, seed_override)
    oracle_cfg = _cfg(ctx, "oracle")
    oracle_cfg["kind"] = oracle_kind
    if noise_sigma is not None:
        oracle_cfg["noise_sigma"] = noise_sigma
    if profile is not None:
        oracle_cfg["profile"] = profile
    out = _call(ctx, "POST", "/evaluate",
                {"space": _space_ref(space_spec), "oracle": oracle_cfg, "n": n, "seed": seed})
    path = _resolve_out(ctx, out_path)
    existing = _read_jsonl(path) if os.path.exists(path) else []

    def key(row: dict) -> tuple:
        return (row.get("oracle_id"), row.get("seed"), _dump_line(row.get("arch", {})))

    merged = list(existing)
    seen = {key(row) for row in existing}
    added = 0
    for row in out["records"]:
        if allow_dup or key(row) not in seen:
            merged.append(row)
            seen.add(key(row))
            added += 1
    _write_text(path, "".join(_dump_line(row) + "\n" for row in merged))
    _echo(ctx, f"evaluated {len(out['records'])} architectures; {added} new records in {out_path}")


@main.command()
@click.option("--space", "space_spec", required=True)
@click.option("--records", "records_path", required=True)
@click.option("--metric", default="quality_loss", show_default=True)
@click.option("--direction", default="lower", show_default=True,
              type=click.Choice(["lower", "higher"]))
@click.option("--seed", "seed_override", type=int, default=None)
@click.option("--out", "out_path", required=True, help="Model file (JSON).")
@click.pass_context
def train(ctx: click.Context, space_spec: str, records_path: str, metric: str,
          direction: str, seed_override: int | None, out_path: str) -> None:
    """Fit the pairwise ranker (or the latency predictor for latency_ms)."""
    seed = _seed(ctx, seed_override)
    payload = {
        "space": _space_ref(space_spec),
        "records": _read_jsonl(records_path),
        "metric": metric,
        "direction": direction,
        "seed": seed,
    }
    ranker_cfg = _cfg(ctx, "ranker")
    if ranker_cfg:
        payload["config"] = ranker_cfg
    out = _call(ctx, "POST", "/train", payload)
    _write_json(_resolve_out(ctx, out_path), out["model"])
    _echo(ctx, json.dumps({"kind": out["kind"], **out["report"]}, sort_keys=True))


@main.command()
@click.option("--space", "space_spec", required=True)
@click.option("--records", "records_path", required=True)
@click.option("--model", "model_path", required=True)
@click.option("--theta", type=float, default=None, help="Keep threshold (default 1.25).")
@click.option("--repetitions", type=int, default=None)
@click.option("--metric", default="quality_loss", show_default=True)
@click.option("--direction", default="lower", show_default=True,
              type=click.Choice(["lower", "higher"]))
@click.option("--seed", "seed_override", type=int, default=None)
@click.option("--out", "out_path", required=True, help="Importance report (JSON).")
@click.pass_context
def importance(ctx: click.Context, space_spec: str, records_path: str, model_path: str,
               theta: float | None, repetitions: int | None, metric: str, direction: str,
               seed_override: int | None, out_path: str) -> None:
    """Score each feature by randomization damage and pick the keep set."""
    seed = _seed(ctx, seed_override)
    imp_cfg = _cfg(ctx, "importance")
    payload = {
        "space": _space_ref(space_spec),
        "records": _read_jsonl(records_path),
        "model": _read_json(model_path),
        "seed": seed,
        "metric": metric,
        "direction": direction,
        "theta": theta if theta is not None else float(imp_cfg.get("theta", 1.25)),
    }
    reps = repetitions if repetitions is not None else imp_cfg.get("repetitions")
    if reps is not None:
        payload["repetitions"] = int(reps)
    out = _call(ctx, "POST", "/importance", payload)
    _write_json(_resolve_out(ctx, out_path), out["report"])
    _echo(ctx, out["table"])


@main.command()
@click.option("--space", "space_spec", required=True)
@click.option("--model", "model_path", required=True, help="Quality ranker model file.")
@click.option("--strategy", default="evolutionary", show_default=True,
              type=click.Choice(["random", "evolutionary"]))
@click.option("--importance-report", "report_path", default=None,
              help="Prune the space with this report before searching.")
@click.option("--latency-model", "latency_path", default=None)
@click.option("--max-latency-ms", type=float, default=None)
@click.option("--candidate-count", type=int, default=None)
@click.option("--seed", "seed_override", type=int, default=None)
@click.option("--out", "out_path", required=True, help="Search result (JSON).")
@click.pass_context
def search(ctx: click.Context, space_spec: str, model_path: str, strategy: str,
           report_path: str | None, latency_path: str | None, max_latency_ms: float | None,
           candidate_count: int | None, seed_override: int | None, out_path: str) -> None:
    """Search the (optionally pruned) space for the best-ranked architecture."""
    seed = _seed(ctx, seed_override)
    search_cfg = _cfg(ctx, "search")
    constraint = _cfg(ctx, "constraint")
    payload = {
        "space": _space_ref(space_spec),
        "model": _read_json(model_path),
        "seed": seed,
        "strategy": strategy,
    }
    for field in ("epoch_size", "stall_epochs", "evolution", "candidate_count"):
        if field in search_cfg:
            payload[field] = search_cfg[field]
    if report_path:
        payload["importance_report"] = _read_json(report_path)
    if latency_path:
        payload["latency_model"] = _read_json(latency_path)
    budget = max_latency_ms if max_latency_ms is not None else constraint.get("max_latency_ms")
    if budget is not None:
        payload["max_latency_ms"] = float(budget)
    if candidate_count is not None:
        payload["candidate_count"] = candidate_count
    out = _call(ctx, "POST", "/search", payload)
    _write_json(_resolve_out(ctx, out_path), out)
    _echo(ctx, json.dumps({"best": out["best"], "best_score": out["best_score"],
                           "evaluated_count": out["evaluated_count"]}, sort_keys=True))


@main.command()
@click.option("--space", "space_spec", required=True)
@click.option("--records", "records_path", required=True)
@click.option("--model", "model_path", required=True)
@click.option("--metric", default="quality_loss", show_default=True)
@click.option("--direction", default="lower", show_default=True,
              type=click.Choice(["lower", "higher"]))
@click.option("--out", "out_path", default=None, help="Also write the metrics JSON here.")
@click.pass_context
def report(ctx: click.Context, space_spec: str, records_path: str, model_path: str,
           metric: str, direction: str, out_path: str | None) -> None:
    """Rank-correlation report of a model against recorded ground truth."""
    payload = {
        "space": _space_ref(space_spec),
        "records": _read_jsonl(records_path),
        "model": _read_json(model_path),
        "metric": metric,
        "direction": direction,
    }
    out = _call(ctx, "POST", "/report", payload)
    if out_path:
        _write_json(_resolve_out(ctx, out_path), out["metrics"])
    _echo(ctx, out["table"])


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
