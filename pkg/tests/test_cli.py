"""
CLI de punta a punta con un corpus y un modelo pequeños.
"""

import json

import pytest

from latentroute.engine.replanner import read_trace
from latentroute.main import run


SMALL = [
    "--seed", "3",
    "--set", "DATASET_COUNT=600",
    "--set", "EPOCHS=2",
    "--set", "HIDDEN_SIZES=16,8",
    "--set", "BATCH_SIZE=64",
    "--set", "GRID_RESOLUTION=12",
    "--set", "METRICS_BINS=100,200",
]

TRIVIAL_SCENARIO = """\
# Inicio y meta coinciden: el ejecutivo termina en el primer tick.
[scenario]
id = quieto
category = trivial
description = Start equals goal
start = 0.0 -0.3 0.0 -2.2 0.0 2.0 0.7853981633974483
goal = 0.0 -0.3 0.0 -2.2 0.0 2.0 0.7853981633974483
"""


def cli(output, *args):
    return run(["--output", str(output), *SMALL, *args])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    output = tmp_path_factory.mktemp("corrida")
    assert cli(output, "generate") == 0
    assert cli(output, "train") == 0
    assert cli(output, "build-graph") == 0
    return output


def test_pipeline_artifacts(pipeline):
    for name in ("dataset.csv", "dataset.meta", "model.pt", "train_report.json", "roadmap.json",
                 "build_report.json", "latent_points.csv", "embedding_report.jsonl", "embedding_summary.csv"):
        assert (pipeline / name).is_file(), name
    report = json.loads((pipeline / "build_report.json").read_text())
    assert report["nodes"] > 0
    assert report["connectivity"]["components_after"] == 1
    assert len(report["config_hash"]) == 64
    methods = [json.loads(line)["method"] for line in (pipeline / "embedding_report.jsonl").read_text().splitlines()]
    assert methods == ["vae", "vae", "isomap"]


def test_generate_is_deterministic(pipeline, tmp_path):
    assert cli(tmp_path, "generate") == 0
    assert (tmp_path / "dataset.csv").read_bytes() == (pipeline / "dataset.csv").read_bytes()


def test_trivial_scenario_and_verify(pipeline, tmp_path, capsys):
    scenario = tmp_path / "quieto.scn"
    scenario.write_text(TRIVIAL_SCENARIO)
    assert cli(pipeline, "simulate", str(scenario)) == 0
    trace = pipeline / "trace_quieto.jsonl"
    summary = json.loads((pipeline / "summary_quieto.json").read_text())
    assert summary["status"] == "reached"
    assert summary["ticks"] == 1
    assert (pipeline / "scenario_quieto.scn").is_file()

    assert cli(pipeline, "verify", str(trace), "--scenario", str(scenario)) == 0
    report = json.loads((pipeline / "verify_trace_quieto.json").read_text())
    assert report["mismatches"] == []

    header, records = read_trace(trace)
    tampered = tmp_path / "tampered.jsonl"
    bad = records[0].model_copy(update={"ee_pos": [records[0].ee_pos[0] + 0.01, *records[0].ee_pos[1:]]})
    tampered.write_text("\n".join([header.model_dump_json(), bad.model_dump_json()]) + "\n")
    capsys.readouterr()
    assert cli(pipeline, "verify", str(tampered), "--scenario", str(scenario)) == 5
    assert "error [verification]" in capsys.readouterr().err


def test_trapped_scenario_exits_with_planning_failure(pipeline):
    assert cli(pipeline, "simulate", "trapped") == 4
    summary = json.loads((pipeline / "summary_trapped.json").read_text())
    assert summary["status"] == "failed"
    assert summary["reason"] == "trapped"


@pytest.mark.slow
def test_builtin_scenario_trace_verifies(pipeline):
    code = cli(pipeline, "simulate", "static_blocker", "--max-ticks", "300")
    assert code in (0, 4)
    trace = pipeline / "trace_static_blocker.jsonl"
    assert cli(pipeline, "verify", str(trace), "--scenario", "static_blocker") == 0


def test_invalid_configuration(tmp_path):
    assert run(["--output", str(tmp_path), "--set", "KNN_K=0", "generate"]) == 2
    assert run(["--output", str(tmp_path), "--set", "NO_EXISTE=1", "generate"]) == 2
    assert run(["--output", str(tmp_path), "--set", "KNN_K", "generate"]) == 2


def test_argument_errors(tmp_path):
    assert run(["--output", str(tmp_path), "despegar"]) == 2
    assert run(["--output", str(tmp_path), "verify", "trace.jsonl"]) == 2
    assert run(["--version"]) == 0


def test_missing_inputs(tmp_path, capsys):
    assert cli(tmp_path, "train") == 3
    assert cli(tmp_path, "simulate", "static_blocker") == 3
    assert cli(tmp_path, "verify", str(tmp_path / "nada.jsonl"), "--scenario", "static_blocker") == 3
    assert "error [input]" in capsys.readouterr().err


def test_unknown_builtin_scenario(pipeline):
    assert cli(pipeline, "simulate", "no_existe") == 3
