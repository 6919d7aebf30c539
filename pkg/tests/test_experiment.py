from __future__ import annotations

import json

import pytest

from amlsi.benchmarks import fixture_path
from amlsi.experiment import (
    ExperimentConfig,
    RunReport,
    emit_report,
    render_ablation,
    render_csv,
    render_markdown,
    run_ablation,
    run_experiment,
)

SMALL = dict(domain="gripper", n_pos=5, n_test=5, n_problems=2, seeds=(1, 2), tabu_iterations=10)


@pytest.fixture(scope="module")
def report():
    return run_experiment(ExperimentConfig(**SMALL))


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(domain="gripper", seeds=())
    with pytest.raises(ValueError):
        ExperimentConfig(domain="gripper", variant="nope")
    with pytest.raises(ValueError):
        ExperimentConfig(domain="some/file.pddl")
    with pytest.raises(ValueError):
        ExperimentConfig(domain="gripper", noise_rate=1.5)
    with pytest.raises(ValueError):
        ExperimentConfig(domain="gripper", n_pos=0)
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"domain": "gripper", "sedes": [1]})


def test_config_json_round_trip(tmp_path):
    cfg = ExperimentConfig(**SMALL)
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    assert ExperimentConfig.from_file(path) == cfg
    assert ExperimentConfig.from_dict(json.loads(cfg.to_json())).seeds == (1, 2)


def test_file_domains_load():
    cfg = ExperimentConfig(fixture_path("gripper", "domain.pddl"),
                           problem_files=[fixture_path("gripper", "p01.pddl")], seeds=[1])
    domain, problems = cfg.load()
    assert domain.name == "gripper" and [p.name for p in problems] == ["gripper-p01"]


def test_grid_has_one_cell_per_problem_and_seed(report):
    assert len(report.cells) == 6 and report.failures == 0
    assert {(c.problem, c.seed) for c in report.cells} == {
        (f"gripper-p0{i}", s) for i in (1, 2, 3) for s in (1, 2)
    }
    mean = report.mean()
    assert set(mean) == {"e_rho", "e_eps", "e_sigma", "solved", "acc"}
    assert report.dataset_stats()["n_actions"] == 10
    assert report.automaton_stats()["compression"] > 0


def test_report_json_round_trip(report):
    again = RunReport.from_dict(json.loads(json.dumps(report.to_dict())))
    assert again == report


def test_reports_are_byte_deterministic(report, tmp_path):
    second = run_experiment(ExperimentConfig(**SMALL))
    a = emit_report(report, tmp_path / "a")
    b = emit_report(second, tmp_path / "b")
    assert [p.name for p in a] == ["report.csv", "report.json", "report.md"]
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()
    with pytest.raises(ValueError):
        emit_report(report, tmp_path, ["xml"])


def test_rendered_columns(report):
    md = render_markdown(report)
    header = next(line for line in md.splitlines() if line.startswith("| E_rho"))
    assert [h.strip() for h in header.strip("|").split("|")] == [
        "E_rho (%)", "E_eps (%)", "E_sigma (%)", "Solved (%)", "Acc (%)"
    ]
    assert "Compression" in md
    csv = render_csv(report).splitlines()
    assert csv[0] == "problem,seed,e_rho,e_eps,e_sigma,solved,acc,error"
    assert len(csv) == 8 and csv[-1].startswith("mean,,")


def test_failing_cells_are_recorded(monkeypatch):
    import amlsi.experiment as experiment

    def boom(*args, **kwargs):
        raise RuntimeError("no luck")

    monkeypatch.setattr(experiment, "learn", boom)
    r = run_experiment(ExperimentConfig(**{**SMALL, "seeds": (1,)}))
    assert r.failures == 3 and r.mean() == {}
    assert r.cells[0].error == "RuntimeError: no luck"
    assert "n/a" in render_markdown(r)


def test_ablation_table():
    reports = run_ablation(ExperimentConfig(**{**SMALL, "seeds": (1,)}), ["generation_only", "tabu_alone"])
    table = render_ablation(reports)
    assert [line.split("|")[1].strip() for line in table.splitlines()[2:]] == ["generation_only", "tabu_alone"]
