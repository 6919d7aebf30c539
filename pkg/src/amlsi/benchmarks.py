"""Bundled ground-truth domains with three initial states each."""

from __future__ import annotations

from importlib import resources

from .pddl import Domain, Problem, parse_domain, parse_problem

BENCHMARKS = ("gripper", "blocksworld", "peg_solitaire", "neg_elevator")


def _read(name: str, filename: str) -> str:
    return (resources.files("amlsi") / "fixtures" / name / filename).read_text()


def load_domain(name: str) -> Domain:
    if name not in BENCHMARKS:
        raise KeyError(f"unknown benchmark {name!r}; choose from {', '.join(BENCHMARKS)}")
    return parse_domain(_read(name, "domain.pddl"))


def load_problem(name: str, filename: str) -> Problem:
    return parse_problem(_read(name, filename))


def load_benchmark(name: str) -> tuple[Domain, list[Problem]]:
    """The domain and its three initial-state problems ``p01``..``p03``."""
    domain = load_domain(name)
    return domain, [load_problem(name, f"p0{i}.pddl") for i in (1, 2, 3)]


def fixture_path(name: str, filename: str) -> str:
    return str(resources.files("amlsi") / "fixtures" / name / filename)
