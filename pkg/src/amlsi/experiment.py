"""Experiment grids: one learning run per (initial state, seed) cell, averaged.

Every cell draws its randomness from streams named after the seed, the
initial-state index and the purpose (training data, test traces, test
problems), so a configuration always reproduces the same reports.
"""

from __future__ import annotations

import json
import logging
import random
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

from .benchmarks import BENCHMARKS, load_benchmark
from .dataset import generate
from .evaluation import MetricsReport, evaluate, generate_problems, sample_traces
from .learner import VARIANTS, LearnConfig, learn
from .oracle import ObservationConfig, Oracle
from .pddl import Domain, Problem, parse_domain, parse_problem

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    """``domain`` is a bundled benchmark name or a PDDL file path; in the
    latter case ``problem_files`` lists the initial-state problems."""

    domain: str
    problem_files: tuple[str, ...] = ()
    n_pos: int = 30
    train_len_range: tuple[int, int] = (10, 20)
    n_test: int = 100
    test_len_range: tuple[int, int] = (1, 100)
    n_problems: int = 20
    observe_fraction: float = 1.0
    noise_rate: float = 0.0
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)
    variant: str = "full"
    tabu_iterations: int = 200
    tabu_tenure: int = 10
    max_rounds: int = 10
    planner_timeout: float = 60.0
    sigma_per_slot: bool = False

    def __post_init__(self):
        # accept lists from JSON and the command line
        for name in ("problem_files", "train_len_range", "test_len_range", "seeds"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.seeds:
            raise ValueError("seeds must not be empty")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.domain not in BENCHMARKS and not self.problem_files:
            raise ValueError("a domain file needs at least one problem file")
        ObservationConfig(self.observe_fraction, self.noise_rate)  # range checks
        for name in ("n_pos", "n_test", "n_problems", "tabu_iterations"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str | Path) -> ExperimentConfig:
        return cls.from_dict(json.loads(Path(path).read_text()))

    def load(self) -> tuple[Domain, list[Problem]]:
        if not self.problem_files:
            return load_benchmark(self.domain)
        domain = parse_domain(Path(self.domain).read_text())
        return domain, [parse_problem(Path(p).read_text()) for p in self.problem_files]


@dataclass
class CellResult:
    problem: str
    seed: int
    metrics: MetricsReport | None
    dataset: dict[str, float] = field(default_factory=dict)
    automaton: dict[str, float] = field(default_factory=dict)
    error: str | None = None


def _mean(rows: Sequence[dict[str, float]]) -> dict[str, float]:
    if not rows:
        return {}
    return {k: sum(r[k] for r in rows) / len(rows) for k in rows[0]}


@dataclass
class RunReport:
    config: ExperimentConfig
    cells: list[CellResult]
    wall_clock: float | None = field(default=None, compare=False)

    @property
    def succeeded(self) -> list[CellResult]:
        return [c for c in self.cells if c.metrics is not None]

    @property
    def failures(self) -> int:
        return len(self.cells) - len(self.succeeded)

    def mean(self) -> dict[str, float]:
        return _mean([{c: getattr(cell.metrics, c) for c in MetricsReport.COLUMNS} for cell in self.succeeded])

    def dataset_stats(self) -> dict[str, float]:
        return _mean([c.dataset for c in self.succeeded])

    def automaton_stats(self) -> dict[str, float]:
        return _mean([c.automaton for c in self.succeeded])

    # ---------------------------------------------------------- serialization

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "cells": [asdict(c) for c in self.cells],
            "mean": self.mean(),
            "failures": self.failures,
            "dataset": self.dataset_stats(),
            "automaton": self.automaton_stats(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> RunReport:
        cells = []
        for c in data["cells"]:
            m = c["metrics"]
            cells.append(CellResult(
                c["problem"], c["seed"], MetricsReport(**m) if m is not None else None,
                c["dataset"], c["automaton"], c["error"],
            ))
        return cls(ExperimentConfig.from_dict(data["config"]), cells)


def _stream(seed: int, cell: int, purpose: str) -> random.Random:
    return random.Random(f"{seed}:{cell}:{purpose}")


def run_cell(cfg: ExperimentConfig, truth: Domain, problem: Problem, index: int, seed: int) -> CellResult:
    oracle = Oracle.from_pddl(truth, problem)
    obs = ObservationConfig(cfg.observe_fraction, cfg.noise_rate, seed)
    ds = generate(oracle, oracle.initial_state, cfg.n_pos, cfg.train_len_range, _stream(seed, index, "train"), obs)
    result = learn(ds, LearnConfig(cfg.variant, cfg.tabu_iterations, cfg.tabu_tenure, cfg.max_rounds), truth)
    traces, _ = sample_traces(oracle, cfg.n_test, cfg.test_len_range, _stream(seed, index, "test"))
    problems = generate_problems(truth, problem, cfg.n_problems, _stream(seed, index, "problems"))
    metrics = evaluate(result.domain, truth, traces, problems, cfg.planner_timeout, cfg.sigma_per_slot)
    induction = next(t for t in result.trace if t["stage"] == "induction")
    stats = ds.stats()
    return CellResult(
        problem.name,
        seed,
        metrics,
        dataset={k: float(stats[k]) for k in ("n_actions", "n_propositions", "n_pos", "n_neg", "mean_pos_len", "mean_neg_len")},
        automaton={k: float(induction[k]) for k in ("states", "nodes", "transitions", "compression")},
    )


def run_experiment(cfg: ExperimentConfig) -> RunReport:
    """Learn and evaluate on every (initial state, seed) cell.  A failing cell
    is recorded with its error and left out of the averages."""
    start = time.perf_counter()
    truth, problems = cfg.load()
    cells = []
    for index, problem in enumerate(problems):
        for seed in cfg.seeds:
            try:
                cell = run_cell(cfg, truth, problem, index, seed)
            except Exception as exc:  # recorded per cell, see docstring
                log.exception("cell %s/%s failed", problem.name, seed)
                cell = CellResult(problem.name, seed, None, error=f"{type(exc).__name__}: {exc}")
            cells.append(cell)
    return RunReport(cfg, cells, time.perf_counter() - start)


def run_ablation(cfg: ExperimentConfig, variants: Sequence[str] = VARIANTS) -> dict[str, RunReport]:
    out = {}
    for v in variants:
        data = asdict(cfg)
        data["variant"] = v
        out[v] = run_experiment(ExperimentConfig.from_dict(data))
    return out


# ------------------------------------------------------------------ output

_HEADERS = {"e_rho": "E_rho (%)", "e_eps": "E_eps (%)", "e_sigma": "E_sigma (%)", "solved": "Solved (%)", "acc": "Acc (%)"}
FORMATS = ("csv", "json", "markdown")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def render_csv(r: RunReport) -> str:
    lines = ["problem,seed," + ",".join(MetricsReport.COLUMNS) + ",error"]
    for c in r.cells:
        values = c.metrics.csv_row() if c.metrics else ",".join("" for _ in MetricsReport.COLUMNS)
        lines.append(f"{c.problem},{c.seed},{values},{(c.error or '').replace(',', ';')}")
    mean = r.mean()
    if mean:
        lines.append("mean,," + ",".join(_fmt(mean[k]) for k in MetricsReport.COLUMNS) + f",failures={r.failures}")
    return "\n".join(lines) + "\n"


def render_json(r: RunReport) -> str:
    return json.dumps(r.to_dict(), indent=2, sort_keys=True) + "\n"


def render_markdown(r: RunReport, title: str | None = None) -> str:
    cfg = r.config
    mean = r.mean()
    out = [f"## {title or cfg.domain}: {cfg.variant}, observed {cfg.observe_fraction:g}, noise {cfg.noise_rate:g}", ""]
    out.append("| " + " | ".join(_HEADERS.values()) + " |")
    out.append("|" + "---|" * len(_HEADERS))
    out.append("| " + " | ".join(_fmt(mean[k]) if mean else "n/a" for k in _HEADERS) + " |")
    out += ["", f"Cells: {len(r.cells)}, failures: {r.failures}", ""]
    ds, au = r.dataset_stats(), r.automaton_stats()
    if ds:
        out += ["| #Actions | #Propositions | I+ | I- | mean len I+ | mean len I- |", "|---|---|---|---|---|---|"]
        out.append("| " + " | ".join(_fmt(ds[k]) for k in ("n_actions", "n_propositions", "n_pos", "n_neg", "mean_pos_len", "mean_neg_len")) + " |")
        out.append("")
    if au:
        out += ["| #States | #Nodes | #Transitions | Compression |", "|---|---|---|---|"]
        out.append("| " + " | ".join(_fmt(au[k]) for k in ("states", "nodes", "transitions", "compression")) + " |")
        out.append("")
    return "\n".join(out)


def render_ablation(reports: dict[str, RunReport]) -> str:
    out = ["| Variant | " + " | ".join(_HEADERS.values()) + " | Failures |", "|---|" + "---|" * (len(_HEADERS) + 1)]
    for v, r in reports.items():
        mean = r.mean()
        out.append(f"| {v} | " + " | ".join(_fmt(mean[k]) if mean else "n/a" for k in _HEADERS) + f" | {r.failures} |")
    return "\n".join(out) + "\n"


def emit_report(r: RunReport, out_dir: str | Path, formats: Sequence[str] = FORMATS, stem: str = "report") -> list[Path]:
    """Write the report in each format.  The run time is left out so equal
    configurations give byte-identical files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    renderers = {"csv": (render_csv, ".csv"), "json": (render_json, ".json"), "markdown": (render_markdown, ".md")}
    written = []
    for f in formats:
        if f not in renderers:
            raise ValueError(f"unknown format {f!r}; expected one of {FORMATS}")
        render, suffix = renderers[f]
        path = out_dir / f"{stem}{suffix}"
        path.write_text(render(r))
        written.append(path)
    return written
