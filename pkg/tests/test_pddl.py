from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amlsi.benchmarks import BENCHMARKS, load_benchmark
from amlsi.pddl import (
    ActionSchema,
    Atom,
    Literal,
    PDDLError,
    PDDLSyntaxError,
    UnknownTypeError,
    UnsupportedRequirementError,
    ground,
    ground_problem,
    parse_domain,
    parse_problem,
    serialize_domain,
    serialize_problem,
)


def test_benchmarks_round_trip():
    for name in BENCHMARKS:
        domain, problems = load_benchmark(name)
        assert parse_domain(serialize_domain(domain)) == domain
        for p in problems:
            assert parse_problem(serialize_problem(p)) == p


def test_table_one_grounding_counts():
    # action and proposition counts per initial state reported for the benchmarks
    expected = {"gripper": (10, 8), "blocksworld": (18, 16)}
    for name, (n_actions, n_props) in expected.items():
        domain, problems = load_benchmark(name)
        for p in problems:
            task = ground_problem(domain, p)
            assert (len(task.actions), len(task.propositions)) == (n_actions, n_props)


def test_fixture_sizes_for_other_benchmarks():
    # peg board: 16 begin/continue jumps each plus 9 end-moves; 3 x 9 fluents,
    # move-ended and 16 in-line facts.  Elevator: 2 passengers, 3 floors.
    peg, problems = load_benchmark("peg_solitaire")
    task = ground_problem(peg, problems[0])
    assert (len(task.actions), len(task.propositions)) == (41, 44)
    elevator, problems = load_benchmark("neg_elevator")
    task = ground_problem(elevator, problems[0])
    assert (len(task.actions), len(task.propositions)) == (10, 14)


def test_grounding_uses_distinct_objects():
    domain, problems = load_benchmark("gripper")
    actions, _ = ground(domain, problems[0].objects)
    assert all(len(set(a.args)) == len(a.args) for a in actions)
    assert not any(a.name == "move" and a.args[0] == a.args[1] for a in actions)


def test_ground_action_sets():
    domain, _ = load_benchmark("gripper")
    g = domain.schema("pick").ground(("b", "r1", "left"))
    assert g.pre_pos == {Atom("at", ("b", "r1")), Atom("at-robby", ("r1",)), Atom("free", ("left",))}
    assert g.add == {Atom("carry", ("b", "left"))}
    assert str(g) == "pick(b,r1,left)"
    assert g.to_pddl() == "(pick b r1 left)"


def test_negative_preconditions_parse():
    domain, _ = load_benchmark("neg_elevator")
    board = domain.schema("board")
    assert Literal(Atom("boarded", ("?p",)), False) in board.pre
    assert ":negative-preconditions" in domain.requirements


def test_syntax_error_has_position():
    with pytest.raises(PDDLSyntaxError) as err:
        parse_domain("(define (domain x)\n  (:predicates (p)\n")
    assert err.value.line >= 1


def test_unsupported_requirement():
    with pytest.raises(UnsupportedRequirementError):
        parse_domain("(define (domain x) (:requirements :conditional-effects) (:predicates (p)))")


def test_unknown_type():
    with pytest.raises(UnknownTypeError):
        parse_domain(
            "(define (domain x) (:requirements :strips :typing) (:types a)"
            " (:predicates (p ?x - b)))"
        )


def test_schema_rejects_unscoped_and_overlapping():
    with pytest.raises(PDDLError):
        ActionSchema("a", (("?x", "object"),), frozenset({Literal(Atom("p", ("?y",)))}))
    with pytest.raises(PDDLError):
        ActionSchema("a", (("?x", "object"),), add=frozenset({Atom("p", ("?x",))}), delete=frozenset({Atom("p", ("?x",))}))


def test_static_pruning_drops_unusable_actions():
    domain, problems = load_benchmark("neg_elevator")
    task = ground_problem(domain, problems[0])
    for a in task.actions:
        if a.name in ("up", "down"):
            static = [p for p in a.pre_pos if p.predicate == "above"]
            assert all(p in task.init for p in static)


_names = st.sampled_from(["p", "q", "r"])


@settings(max_examples=50, deadline=None)
@given(
    pre=st.sets(st.tuples(_names, st.booleans()), max_size=3),
    add=st.sets(_names, max_size=3),
    delete=st.sets(_names, max_size=3),
)
def test_serialization_round_trip_property(pre, add, delete):
    # drop contradictions so that the schema is well formed
    pre = {(n, s) for n, s in pre if (n, not s) not in pre}
    delete -= add
    atom = lambda n: Atom(n, ("?x",))
    schema = ActionSchema(
        "act",
        (("?x", "thing"),),
        frozenset(Literal(atom(n), s) for n, s in pre),
        frozenset(map(atom, add)),
        frozenset(map(atom, delete)),
    )
    base = parse_domain(
        "(define (domain d) (:requirements :strips :typing) (:types thing)"
        " (:predicates (p ?x - thing) (q ?x - thing) (r ?x - thing)))"
    )
    domain = base.with_schemas([schema])
    assert parse_domain(serialize_domain(domain)) == domain
