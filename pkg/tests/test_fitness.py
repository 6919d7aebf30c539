from __future__ import annotations

import itertools
import random
from dataclasses import replace

import pytest

from amlsi.dataset import Dataset, NegativeSample, PositiveSample
from amlsi.encoding import Encoding
from amlsi.fitness import SLOTS, FitnessEvaluator, FitnessScore, fitness
from amlsi.oracle import Observation, ObservationConfig, Oracle
from amlsi.pddl import ActionSchema, Atom, Literal

from conftest import benchmark_dataset, make_dataset

AT = lambda l: Atom("at", (l,))
X, Y = Atom("at", ("?x",)), Atom("at", ("?y",))


def _evaluator(domain, ds):
    return FitnessEvaluator(ds, Encoding(domain.signature(), ds.actions, ds.propositions))


def _tiny(domain, problem):
    """One observed step l1 -> l2 and one rejected continuation."""
    oracle = Oracle.from_pddl(domain, problem)
    step, bad = oracle.action("hop", "l1", "l2"), oracle.action("hop", "l1", "l3")
    full = lambda *true: Observation({AT(l): l in true for l in ("l1", "l2", "l3")})
    return Dataset(
        positives=(PositiveSample((step,), (full("l1"), full("l2"))),),
        negatives=(NegativeSample((step, bad)),),
        initial_state=oracle.initial_state,
        obs_config=ObservationConfig(),
        actions=oracle.actions,
        propositions=oracle.propositions,
        signature=domain.signature(),
    )


def test_hand_computed_scores(hop):
    domain, problem = hop
    ds = _tiny(domain, problem)
    # two satisfied preconditions, six matching values, one executable
    # sample of length one, one rejected negative
    assert fitness(domain, ds) == FitnessScore(2, 6, 1, 1)
    # without effects the second state keeps l1 and misses l2: 3 + (1 - 2)
    empty = domain.signature()
    assert fitness(empty, ds) == FitnessScore(0, 2, 1, 0)
    ev = _evaluator(domain, ds)
    assert ev.score(domain) == FitnessScore(2, 6, 1, 1)
    assert ev.score(empty) == FitnessScore(0, 2, 1, 0)


def test_empty_dataset_scores_zero(hop):
    domain, problem = hop
    ds = replace(_tiny(domain, problem), positives=(), negatives=())
    assert fitness(domain, ds).total == 0
    assert _evaluator(domain, ds).score(domain).total == 0


def _random_domain(signature, enc, rng):
    schemas = []
    for s in signature.schemas:
        cands = enc.ops[s.name].candidates
        pre, add, dele = set(), set(), set()
        for c in cands:
            r = rng.random()
            if r < 0.25:
                pre.add(Literal(c, True))
            elif r < 0.4:
                pre.add(Literal(c, False))
            r = rng.random()
            if r < 0.15:
                add.add(c)
            elif r < 0.3:
                dele.add(c)
        schemas.append(ActionSchema(s.name, s.params, frozenset(pre), frozenset(add), frozenset(dele)))
    return signature.with_schemas(schemas)


@pytest.mark.parametrize("name", ["gripper", "blocksworld", "peg_solitaire", "neg_elevator"])
@pytest.mark.parametrize("observe,noise", [(1.0, 0.0), (0.25, 0.2)])
@pytest.mark.parametrize("anchored", [True, False])
def test_compiled_route_matches_reference(name, observe, noise, anchored):
    truth, ds = benchmark_dataset(name, seed=5, n_pos=8, observe=observe, noise=noise)
    enc = Encoding(truth.signature(), ds.actions, ds.propositions)
    ev = FitnessEvaluator(ds, enc, anchored=anchored)
    rng = random.Random(name)
    for d in [truth, truth.signature()] + [_random_domain(truth.signature(), enc, rng) for _ in range(6)]:
        assert ev.score(d) == fitness(d, ds, anchored=anchored)


def test_truth_executes_every_sample():
    truth, ds = benchmark_dataset("gripper", seed=1)
    score = fitness(truth, ds)
    assert score.j_plus == sum(len(s) for s in ds.positives)
    assert score.j_minus == len(ds.negatives)
    assert score.j_rho > 0


def test_missing_precondition_scores_lower(hop):
    domain, problem = hop
    ds = make_dataset(domain, problem, seed=2)
    hop_ = domain.schema("hop")
    weaker = domain.with_schemas([ActionSchema("hop", hop_.params, frozenset({Literal(X)}), hop_.add, hop_.delete)])
    assert fitness(weaker, ds).total < fitness(domain, ds).total


def neighbours(domain, enc):
    """Every domain one legal toggle away."""
    exclusive = {0: 1, 1: 0, 2: 3, 3: 2}
    s = domain.schema("hop")
    slots = [{l.atom for l in s.pre if l.positive}, {l.atom for l in s.pre if not l.positive}, set(s.add), set(s.delete)]
    for slot, cand in itertools.product(range(len(SLOTS)), enc.ops["hop"].candidates):
        if cand in slots[exclusive[slot]]:
            continue
        new = [set(x) for x in slots]
        new[slot] ^= {cand}
        pre = frozenset([Literal(a) for a in new[0]] + [Literal(a, False) for a in new[1]])
        yield domain.with_schemas([ActionSchema("hop", s.params, pre, frozenset(new[2]), frozenset(new[3]))])


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_truth_is_a_local_optimum_on_the_toy(hop, seed):
    domain, problem = hop
    ds = make_dataset(domain, problem, seed=seed)
    enc = Encoding(domain.signature(), ds.actions, ds.propositions)
    best = fitness(domain, ds).total
    others = list(neighbours(domain, enc))
    assert len(others) == 4
    assert all(fitness(d, ds).total < best for d in others)
