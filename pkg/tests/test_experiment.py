import io
import json

import numpy as np
import pytest

from cole.cli import main
from cole.experiment import ConfigError, ExperimentConfig, cmd_analyze, cmd_resume, cmd_run, cmd_solve
from cole.graph import (
    PayoffMatrix,
    build_preference_graph,
    centrality_history,
    history_from_csv,
    history_to_csv,
    weighted_pagerank,
)
from cole.shapley import solve


def write_config(path, **kw):
    path.write_text(json.dumps(kw))
    return path


def write_payoff(path, w):
    path.write_text(PayoffMatrix(np.asarray(w, dtype=float)).to_csv())
    return path


def run_quiet(*args, **kw):
    return cmd_run(*args, stream=io.StringIO(), **kw)


def test_run_dominant_writes_outputs(tmp_path):
    cfg = write_config(tmp_path / "c.json", game="dominant", game_actions=4, generations=5)
    out = tmp_path / "run"
    stream = io.StringIO()
    assert cmd_run(cfg, out=str(out), stream=stream) == 0
    for name in ("config.json", "generations.jsonl", "checkpoint.json", "payoff.csv", "eta_history.csv"):
        assert (out / name).exists()
    hist = history_from_csv((out / "eta_history.csv").read_text())
    assert 0.0 in hist[-1].tolist()
    lines = stream.getvalue().splitlines()
    assert len(lines) == 5 and all("eta_new=" in ln and "accepted=" in ln for ln in lines)
    records = [json.loads(ln) for ln in (out / "generations.jsonl").read_text().splitlines()]
    assert [r["generation"] for r in records] == [1, 2, 3, 4, 5]
    assert set(records[0]["oracle"]) >= {"strategy", "objective_value", "eta_new", "rank", "accepted", "trace"}
    # config copy has every knob spelled out
    assert json.loads((out / "config.json").read_text()) == ExperimentConfig.load(cfg).to_dict() | {
        "out": str(out)
    }


def test_rerun_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path / "c.json", game="convention", oracle="local", a=1, b=3, generations=6, seed=9)
    assert run_quiet(cfg, out=str(tmp_path / "a")) == 0
    assert run_quiet(cfg, out=str(tmp_path / "b")) == 0
    for name in ("generations.jsonl", "payoff.csv", "eta_history.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


@pytest.mark.parametrize(
    "text",
    ['{"game": "chess"}', '{"generations": "ten"}', '{"a": 0, "b": 0}', "not json", '{"surprise": 1}', "[1, 2]"],
)
def test_bad_config_exit_1(tmp_path, text, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(text)
    assert run_quiet(cfg, out=str(tmp_path / "o")) == 1
    assert "config error" in capsys.readouterr().err


def test_missing_config_exit_1(tmp_path):
    assert run_quiet(tmp_path / "nope.json") == 1


def test_config_round_trip(tmp_path):
    config = ExperimentConfig(game="convention", game_blocks=3, alpha=0.5, oracle="local", ties="highest")
    assert ExperimentConfig.from_dict(json.loads(config.to_json())) == config
    with pytest.raises(ConfigError):
        ExperimentConfig(cap=1)


def test_analyze_two_by_two(tmp_path):
    csv = write_payoff(tmp_path / "p.csv", [[1.0, 0.5], [0.5, 1.0]])
    assert cmd_analyze(csv, out=str(tmp_path), stream=io.StringIO()) == 0
    rows = (tmp_path / "eta_history.csv").read_text().splitlines()
    assert rows[1:] == ["2,0.0,0.0"]
    assert (tmp_path / "preference_edges.csv").read_text().splitlines()[1:] == ["0,1,0.5", "1,0,0.5"]


def test_analyze_stagnation_columns(tmp_path):
    w = [[1.0, 3.0, 2.0, 2.0], [3.0, 1.0, 2.0, 2.0], [2.0, 2.0, 6.0, 1.5], [2.0, 2.0, 1.5, 8.0]]
    assert cmd_analyze(write_payoff(tmp_path / "p.csv", w), out=str(tmp_path), stream=io.StringIO()) == 0
    hist = history_from_csv((tmp_path / "eta_history.csv").read_text())
    # rows are prefixes of size 3 and 4; columns are strategies 3 and 4
    assert hist[1, 2] == 1.0
    assert hist[2, 2] == hist[2, 3] == 1.0


def test_analyze_matches_library(tmp_path):
    m = PayoffMatrix(np.random.default_rng(6).normal(size=(10, 10)))
    csv = tmp_path / "p.csv"
    csv.write_text(m.to_csv())
    assert cmd_analyze(csv, out=str(tmp_path), stream=io.StringIO()) == 0
    hist = history_from_csv((tmp_path / "eta_history.csv").read_text())
    assert np.array_equal(hist, centrality_history(m), equal_nan=True)
    edges = [ln.split(",") for ln in (tmp_path / "preference_edges.csv").read_text().splitlines()[1:]]
    assert [int(e[1]) for e in edges] == build_preference_graph(m).out_edge.tolist()
    wpg = [ln.split(",") for ln in (tmp_path / "wpg.csv").read_text().splitlines()[1:]]
    pr = weighted_pagerank(m).pr
    assert [float(r[1]) for r in wpg] == pr.tolist()
    assert [float(r[2]) for r in wpg] == (1.0 / pr).tolist()


@pytest.mark.parametrize("text", ["", "n=2\n1,2\n", "n=3\n1,2,3\n4,5,6\n7,8,nan\n", "n=1\n1\n"])
def test_malformed_csv_exit_1(tmp_path, text):
    csv = tmp_path / "p.csv"
    csv.write_text(text)
    assert cmd_analyze(csv, out=str(tmp_path), stream=io.StringIO()) == 1
    assert cmd_solve(csv, out=str(tmp_path), stream=io.StringIO()) == 1


def test_solve_symmetric_two(tmp_path):
    csv = write_payoff(tmp_path / "p.csv", [[1.0, 2.0], [2.0, 1.0]])
    assert cmd_solve(csv, out=str(tmp_path), stream=io.StringIO()) == 0
    obj = json.loads((tmp_path / "shapley.json").read_text())
    assert obj["phi"] == [0.5, 0.5]
    assert obj["method"] == "exact" and obj["seed"] == 0


def test_solve_exact_prints_efficiency(tmp_path):
    w = np.random.default_rng(0).uniform(size=(6, 6))
    csv = write_payoff(tmp_path / "p.csv", w)
    stream = io.StringIO()
    assert cmd_solve(csv, out=str(tmp_path), stream=stream) == 0
    assert "efficiency" in stream.getvalue() and "[pass]" in stream.getvalue()
    obj = json.loads((tmp_path / "shapley.json").read_text())
    assert obj["efficiency_gap"] <= 1e-9
    shap, phi = solve(PayoffMatrix(w))
    assert obj["sv"] == shap.sv.tolist() and obj["phi"] == phi.phi.tolist()


def test_solve_monte_carlo_for_large_n(tmp_path):
    csv = write_payoff(tmp_path / "p.csv", np.random.default_rng(1).uniform(size=(12, 12)))
    assert cmd_solve(csv, mc_samples=300, seed=4, out=str(tmp_path), stream=io.StringIO()) == 0
    obj = json.loads((tmp_path / "shapley.json").read_text())
    assert (obj["method"], obj["samples"], obj["seed"]) == ("monte_carlo", 300, 4)


def test_run_then_resume_matches_uninterrupted(tmp_path):
    base = dict(game="convention", cap=4, evict_window=2, oracle="local", seed=3)
    full = write_config(tmp_path / "full.json", generations=10, **base)
    part = write_config(tmp_path / "part.json", generations=6, **base)
    assert run_quiet(full, out=str(tmp_path / "full")) == 0
    assert run_quiet(part, out=str(tmp_path / "part")) == 0
    log = (tmp_path / "part" / "generations.jsonl").read_text()
    assert any(json.loads(ln)["evicted"] is not None for ln in log.splitlines())
    assert cmd_resume(tmp_path / "part" / "checkpoint.json", 4, stream=io.StringIO()) == 0
    for name in ("generations.jsonl", "payoff.csv", "eta_history.csv"):
        assert (tmp_path / "part" / name).read_bytes() == (tmp_path / "full" / name).read_bytes(), name
    # the output directory is the only field allowed to differ
    a = json.loads((tmp_path / "part" / "checkpoint.json").read_text())
    b = json.loads((tmp_path / "full" / "checkpoint.json").read_text())
    assert a["experiment"].pop("out") != b["experiment"].pop("out")
    assert a == b
    a = json.loads((tmp_path / "part" / "config.json").read_text())
    b = json.loads((tmp_path / "full" / "config.json").read_text())
    a.pop("out"), b.pop("out")
    assert a == b


def test_resume_zero_is_noop(tmp_path):
    cfg = write_config(tmp_path / "c.json", generations=2)
    assert run_quiet(cfg, out=str(tmp_path / "r")) == 0
    ckpt = tmp_path / "r" / "checkpoint.json"
    before = ckpt.read_bytes()
    log_before = (tmp_path / "r" / "generations.jsonl").read_bytes()
    assert cmd_resume(ckpt, 0, stream=io.StringIO()) == 0
    assert ckpt.read_bytes() == before
    assert (tmp_path / "r" / "generations.jsonl").read_bytes() == log_before


def test_resume_rejects_other_version(tmp_path):
    cfg = write_config(tmp_path / "c.json", generations=1)
    assert run_quiet(cfg, out=str(tmp_path / "r")) == 0
    ckpt = tmp_path / "r" / "checkpoint.json"
    obj = json.loads(ckpt.read_text())
    obj["format_version"] = 2
    ckpt.write_text(json.dumps(obj))
    assert cmd_resume(ckpt, 3, stream=io.StringIO()) == 1


def test_analyze_of_run_payoff_reproduces_eta_history(tmp_path):
    cfg = write_config(tmp_path / "c.json", game="convention", generations=7, seed=2)
    assert run_quiet(cfg, out=str(tmp_path / "r")) == 0
    assert cmd_analyze(tmp_path / "r" / "payoff.csv", out=str(tmp_path / "a"), stream=io.StringIO()) == 0
    assert (tmp_path / "a" / "eta_history.csv").read_bytes() == (tmp_path / "r" / "eta_history.csv").read_bytes()


def test_cli_main_dispatch(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", generations=2)
    out = tmp_path / "r"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--seed", "5", "--ties", "highest"]) == 0
    saved = json.loads((out / "config.json").read_text())
    assert (saved["seed"], saved["ties"]) == (5, "highest")
    assert main(["analyze", str(out / "payoff.csv"), "--out", str(tmp_path / "a")]) == 0
    assert main(["solve", str(out / "payoff.csv"), "--mc-samples", "50", "--out", str(tmp_path / "s")]) == 0
    assert main(["resume", str(out / "checkpoint.json"), "--generations", "1"]) == 0
    assert len((out / "generations.jsonl").read_text().splitlines()) == 3
    with pytest.raises(SystemExit):
        main(["bogus"])
    capsys.readouterr()


def test_history_csv_is_shortest_repr(tmp_path):
    m = PayoffMatrix(np.random.default_rng(3).normal(size=(5, 5)))
    text = history_to_csv(centrality_history(m))
    for row in text.splitlines()[1:]:
        for cell in row.split(",")[1:]:
            if cell:
                assert repr(float(cell)) == cell
