from __future__ import annotations

import random

import pytest

from amlsi.benchmarks import load_benchmark
from amlsi.dataset import generate
from amlsi.oracle import ObservationConfig, Oracle
from amlsi.pddl import parse_domain, parse_problem

# One operator over three locations; the true model also requires the
# target to be empty, so it explains every always-true literal.
MOVE_DOMAIN = """
(define (domain hop)
  (:requirements :strips :typing :negative-preconditions)
  (:types loc)
  (:predicates (at ?l - loc))
  (:action hop
    :parameters (?x ?y - loc)
    :precondition (and (at ?x) (not (at ?y)))
    :effect (and (at ?y) (not (at ?x)))))
"""

MOVE_PROBLEM = """
(define (problem hop-3)
  (:domain hop)
  (:objects l1 l2 l3 - loc)
  (:init (at l1))
  (:goal (and (at l3))))
"""


@pytest.fixture
def hop():
    return parse_domain(MOVE_DOMAIN), parse_problem(MOVE_PROBLEM)


def make_dataset(domain, problem, seed=1, n_pos=30, lengths=(10, 20), observe=1.0, noise=0.0):
    oracle = Oracle.from_pddl(domain, problem)
    cfg = ObservationConfig(observe, noise, seed)
    return generate(oracle, oracle.initial_state, n_pos, lengths, random.Random(seed), cfg)


def benchmark_dataset(name, problem_index=0, **kwargs):
    domain, problems = load_benchmark(name)
    return domain, make_dataset(domain, problems[problem_index], **kwargs)
