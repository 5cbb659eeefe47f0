"""Command-line interface, exercised in-process through click's runner."""

import json

import pytest
from click.testing import CliRunner

from archrank.cli import main

SMALL = "synthetic-small"


def _out(result):
    text = result.output
    try:
        text += result.stderr
    except ValueError:
        pass  # stderr not captured separately by this click version
    return text


def run(*args, expect=0):
    result = CliRunner().invoke(main, [str(a) for a in args])
    if result.exit_code != expect:
        raise AssertionError(
            f"exit {result.exit_code}, wanted {expect}\nargs: {args}\n{_out(result)}"
        )
    return result


@pytest.fixture(scope="module")
def ws(tmp_path_factory):
    """A workspace holding a full pipeline run: records, model, report, search."""
    root = tmp_path_factory.mktemp("cli")
    paths = {
        "records": root / "records.jsonl",
        "model": root / "model.json",
        "latency": root / "latency.json",
        "importance": root / "importance.json",
        "search": root / "search.json",
        "config": root / "config.json",
    }
    paths["config"].write_text(
        json.dumps({"seed": 5, "ranker": {"max_rounds": 60}}) + "\n"
    )
    run(
        "--seed", 5, "evaluate", "--space", SMALL, "--n", 50,
        "--noise-sigma", 0.05, "--out", paths["records"],
    )
    run(
        "--config", paths["config"], "train", "--space", SMALL,
        "--records", paths["records"], "--out", paths["model"],
    )
    run(
        "--config", paths["config"], "train", "--space", SMALL,
        "--records", paths["records"], "--metric", "latency_ms",
        "--out", paths["latency"],
    )
    run(
        "--seed", 5, "importance", "--space", SMALL, "--records", paths["records"],
        "--model", paths["model"], "--out", paths["importance"],
    )
    run(
        "--seed", 7, "search", "--space", SMALL, "--model", paths["model"],
        "--strategy", "random", "--out", paths["search"],
    )
    return paths


def test_space_count_prints_the_cardinality():
    result = run("space", "count", "--space", SMALL)
    assert result.output.strip() == "3096"


def test_space_show_prints_the_definition():
    obj = json.loads(run("space", "show", "--space", SMALL).output)
    assert {f["name"] for f in obj["features"]} >= {"Dec Emb Dim", "Dec Layer Num"}


def test_space_sample_stdout_and_file_agree(tmp_path):
    printed = run("--seed", 3, "space", "sample", "--space", SMALL, "--n", 4).output
    out = tmp_path / "archs.jsonl"
    run("--seed", 3, "space", "sample", "--space", SMALL, "--n", 4, "--out", out)
    assert out.read_text().splitlines() == printed.strip().splitlines()
    for line in printed.strip().splitlines():
        assert "Dec Emb Dim" in json.loads(line)


def test_missing_seed_exits_with_config_code(tmp_path):
    result = CliRunner().invoke(
        main, ["space", "sample", "--space", SMALL, "--n", "1"]
    )
    assert result.exit_code == 2
    assert "seed" in _out(result)


def test_unknown_preset_exits_with_config_code(tmp_path):
    result = CliRunner().invoke(main, ["space", "count", "--space", "no-such-space"])
    assert result.exit_code == 2
    assert "no-such-space" in _out(result)


def test_evaluate_dedupes_reruns(ws, tmp_path):
    store = tmp_path / "records.jsonl"
    args = ("--seed", 5, "evaluate", "--space", SMALL, "--n", 10, "--out", store)
    run(*args)
    first = store.read_bytes()
    assert len(first.splitlines()) == 10

    result = run(*args)
    assert store.read_bytes() == first
    assert "0 new records" in result.output

    run(*args, "--allow-dup")
    assert len(store.read_bytes().splitlines()) == 20


def test_train_is_byte_identical_across_runs(ws, tmp_path):
    clone = tmp_path / "model.json"
    run(
        "--config", ws["config"], "train", "--space", SMALL,
        "--records", ws["records"], "--out", clone,
    )
    assert clone.read_bytes() == ws["model"].read_bytes()


def test_train_echoes_a_report_line(ws, tmp_path):
    result = run(
        "--config", ws["config"], "train", "--space", SMALL,
        "--records", ws["records"], "--out", tmp_path / "m.json",
    )
    line = json.loads(result.output.strip().splitlines()[-1])
    assert line["kind"] == "ranker"
    assert line["rounds_used"] >= 1
    assert 0.0 <= line["best_val_accuracy"] <= 1.0


def test_latency_metric_trains_a_latency_predictor(ws):
    model = json.loads(ws["latency"].read_text())
    assert model["model_kind"] == "latency_predictor"


def test_too_few_records_exit_with_training_code(ws, tmp_path):
    shard = tmp_path / "one.jsonl"
    shard.write_text(ws["records"].read_text().splitlines()[0] + "\n")
    result = CliRunner().invoke(
        main,
        ["--seed", "5", "train", "--space", SMALL, "--records", str(shard),
         "--out", str(tmp_path / "m.json")],
    )
    assert result.exit_code == 4


def test_wrong_model_kind_exits_with_training_code(ws, tmp_path):
    result = CliRunner().invoke(
        main,
        ["--seed", "7", "search", "--space", SMALL, "--model", str(ws["latency"]),
         "--out", str(tmp_path / "s.json")],
    )
    assert result.exit_code == 4
    assert "latency_predictor" in _out(result)


def test_importance_writes_report_and_prints_table(ws):
    report = json.loads(ws["importance"].read_text())
    assert set(report) >= {"per_feature", "theta", "kept", "anchor", "l_total"}
    assert report["theta"] == 1.25
    assert set(report["kept"]) <= set(report["per_feature"])

    result = run(
        "--seed", 5, "importance", "--space", SMALL, "--records", ws["records"],
        "--model", ws["model"], "--out", ws["importance"],
    )
    for name in report["per_feature"]:
        assert name in result.output


def test_search_writes_result_and_echoes_summary(ws):
    saved = json.loads(ws["search"].read_text())
    assert set(saved) >= {"best", "best_score", "evaluated_count", "trace"}
    assert saved["pruned_cardinality"] is None

    result = run(
        "--seed", 7, "search", "--space", SMALL, "--model", ws["model"],
        "--strategy", "random", "--out", ws["search"],
    )
    assert json.loads(ws["search"].read_text()) == saved  # reruns are stable
    echoed = json.loads(result.output.strip().splitlines()[-1])
    assert echoed["best"] == saved["best"]
    assert echoed["evaluated_count"] == saved["evaluated_count"]


def test_search_with_importance_report_prunes_the_space(ws, tmp_path):
    out = tmp_path / "pruned.json"
    run(
        "--seed", 7, "search", "--space", SMALL, "--model", ws["model"],
        "--importance-report", ws["importance"], "--strategy", "random", "--out", out,
    )
    saved = json.loads(out.read_text())
    assert saved["pruned_cardinality"] is not None
    assert 1 <= saved["pruned_cardinality"] <= 3096


def test_hardware_search_takes_budget_from_config(ws, tmp_path):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({
        "seed": 7,
        "constraint": {"max_latency_ms": 1e9},
        "search": {"candidate_count": 80},
    }))
    out = tmp_path / "hw.json"
    run(
        "--config", cfg, "search", "--space", SMALL, "--model", ws["model"],
        "--latency-model", ws["latency"], "--out", out,
    )
    assert json.loads(out.read_text())["evaluated_count"] == 80


def test_infeasible_budget_exits_with_search_code(ws, tmp_path):
    result = CliRunner().invoke(
        main,
        ["--seed", "7", "search", "--space", SMALL, "--model", str(ws["model"]),
         "--latency-model", str(ws["latency"]), "--max-latency-ms", "0.0",
         "--candidate-count", "50", "--out", str(tmp_path / "hw.json")],
    )
    assert result.exit_code == 6


def test_report_prints_metrics_table(ws, tmp_path):
    metrics_path = tmp_path / "metrics.json"
    result = run(
        "report", "--space", SMALL, "--records", ws["records"],
        "--model", ws["model"], "--out", metrics_path,
    )
    assert "kendall_tau" in result.output
    metrics = json.loads(metrics_path.read_text())
    assert metrics["n_records"] == 50
    assert -1.0 <= metrics["kendall_tau"] <= 1.0


def test_quiet_silences_informational_output(tmp_path):
    result = run(
        "--quiet", "--seed", 4, "evaluate", "--space", SMALL, "--n", 5,
        "--out", tmp_path / "r.jsonl",
    )
    assert result.output == ""


def test_output_dir_from_config_resolves_relative_paths(tmp_path):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({"seed": 1, "output_dir": str(tmp_path / "runs")}))
    run("--config", cfg, "space", "sample", "--space", SMALL, "--n", 2, "--out", "s.jsonl")
    assert (tmp_path / "runs" / "s.jsonl").exists()


def test_missing_records_file_exits_with_config_code(tmp_path):
    result = CliRunner().invoke(
        main,
        ["--seed", "1", "train", "--space", SMALL,
         "--records", str(tmp_path / "absent.jsonl"), "--out", str(tmp_path / "m.json")],
    )
    assert result.exit_code == 2
