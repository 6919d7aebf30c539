"""Quality metrics for learned domains.

* ``syntactical_error``: distance between learned and true schemas.
* ``precondition_error`` / ``effect_error``: how often learned preconditions
  and effects disagree with true states along noiseless test traces.
* ``accuracy``: share of test problems solved with the learned domain whose
  plan also holds under the true domain.

The planner is a greedy best-first search with the additive heuristic; the
validator replays a plan with the true semantics.
"""

from __future__ import annotations

import heapq
import itertools
import json
import random
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .dataset import generate
from .encoding import candidate_atoms
from .oracle import ObservationConfig, Oracle, apply
from .pddl import Atom, Domain, GroundAction, Literal, Problem, ground_problem

# ------------------------------------------------------------------ syntax


def syntactical_error(learned: Domain, truth: Domain, per_slot: bool = False) -> tuple[float, dict[str, dict]]:
    """Mean over operators of (missing + extra atoms) / possible atoms, in percent.

    Slots compared: positive preconditions, add effects and delete effects;
    negative preconditions are not counted.  The possible atoms of an
    operator are its parameter-scoped candidate atoms counted once per slot
    (``3 * K``), or once overall when ``per_slot`` is set.
    """
    names = [s.name for s in truth.schemas]
    if sorted(names) != sorted(s.name for s in learned.schemas):
        raise ValueError("learned and true domains name different operators")
    breakdown = {}
    for name in names:
        t, l = truth.schema(name), learned.schema(name)
        missing = extra = 0
        for slot_t, slot_l in (
            ({x.atom for x in t.pre if x.positive}, {x.atom for x in l.pre if x.positive}),
            (set(t.add), set(l.add)),
            (set(t.delete), set(l.delete)),
        ):
            missing += len(slot_t - slot_l)
            extra += len(slot_l - slot_t)
        k = len(candidate_atoms(truth.signature(), name))
        possible = k if per_slot else 3 * k
        breakdown[name] = {
            "missing": missing,
            "extra": extra,
            "possible": possible,
            "error": 100.0 * (missing + extra) / possible if possible else 0.0,
        }
    mean = sum(b["error"] for b in breakdown.values()) / len(breakdown) if breakdown else 0.0
    return mean, breakdown


# ----------------------------------------------------------- test traces


@dataclass(frozen=True)
class Trace:
    """A noiseless test sample: actions and the true states around them."""

    actions: tuple[GroundAction, ...]
    states: tuple[frozenset[Atom], ...]


@dataclass(frozen=True)
class TestSet:
    __test__ = False  # not a pytest test class

    positives: tuple[Trace, ...]
    n_negatives: int
    problems: tuple[Problem, ...] = ()


def sample_traces(oracle: Oracle, n: int, len_range: tuple[int, int], rng: random.Random) -> tuple[list[Trace], int]:
    """``n`` random walks with their true states, plus the number of negatives seen."""
    ds = generate(oracle, oracle.initial_state, n, len_range, rng, ObservationConfig())
    traces = [Trace(s.actions, tuple(oracle.run(oracle.initial_state, s.actions))) for s in ds.positives]
    return traces, len(ds.negatives)


def _ground(d: Domain, a: GroundAction) -> GroundAction:
    return d.schema(a.name).ground(a.args)


def precondition_error(learned: Domain, traces: Sequence[Trace]) -> float:
    """Unsatisfied precondition literals over all precondition literals, in percent."""
    bad = total = 0
    for tr in traces:
        for a, s in zip(tr.actions, tr.states):
            g = _ground(learned, a)
            bad += len(g.pre_pos - s) + len(g.pre_neg & s)
            total += len(g.pre_pos) + len(g.pre_neg)
    return 100.0 * bad / total if total else 0.0


def effect_error(learned: Domain, traces: Sequence[Trace]) -> float:
    """Effects contradicted by the true next state over all effects, in percent."""
    bad = total = 0
    for tr in traces:
        for a, s in zip(tr.actions, tr.states[1:]):
            g = _ground(learned, a)
            bad += len(g.add - s) + len(g.delete & s)
            total += len(g.add) + len(g.delete)
    return 100.0 * bad / total if total else 0.0


# ---------------------------------------------------------------- planning

SOLVED, UNSOLVABLE, TIMEOUT = "solved", "unsolvable", "timeout"


@dataclass(frozen=True)
class PlanResult:
    status: str
    plan: tuple[GroundAction, ...] | None = None
    expanded: int = 0

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


def _goal_holds(state: frozenset[Atom], goal: frozenset[Literal]) -> bool:
    return all((l.atom in state) == l.positive for l in goal)


def _h_add(state: frozenset[Atom], goal_atoms: Sequence[Atom], actions: Sequence[GroundAction]) -> float:
    """Additive relaxed-plan cost ignoring deletes and negative preconditions."""
    cost = dict.fromkeys(state, 0)
    changed = True
    while changed:
        changed = False
        for a in actions:
            c = 1
            for p in a.pre_pos:
                v = cost.get(p)
                if v is None:
                    break
                c += v
            else:
                for p in a.add:
                    if cost.get(p, c + 1) > c:
                        cost[p] = c
                        changed = True
    total = 0
    for p in goal_atoms:
        v = cost.get(p)
        if v is None:
            return float("inf")
        total += v
    return total


def plan(domain: Domain, problem: Problem, timeout: float = 60.0) -> PlanResult:
    """Greedy best-first search; ties go to the earlier-generated node."""
    task = ground_problem(domain, problem)
    start = task.init
    goal_atoms = sorted(l.atom for l in task.goal if l.positive)
    deadline = time.monotonic() + timeout
    counter = itertools.count()
    h0 = _h_add(start, goal_atoms, task.actions)
    if h0 == float("inf"):
        return PlanResult(UNSOLVABLE)
    frontier = [(h0, next(counter), start)]
    parent: dict[frozenset[Atom], tuple[frozenset[Atom], GroundAction] | None] = {start: None}
    expanded = 0
    while frontier:
        if time.monotonic() > deadline:
            return PlanResult(TIMEOUT, expanded=expanded)
        _, _, state = heapq.heappop(frontier)
        if _goal_holds(state, task.goal):
            steps = []
            while parent[state] is not None:
                state, a = parent[state]
                steps.append(a)
            return PlanResult(SOLVED, tuple(reversed(steps)), expanded)
        expanded += 1
        for a in task.actions:
            result = apply(state, a)
            if not result.feasible or result.next_state in parent:
                continue
            nxt = result.next_state
            parent[nxt] = (state, a)
            h = _h_add(nxt, goal_atoms, task.actions)
            if h != float("inf"):
                heapq.heappush(frontier, (h, next(counter), nxt))
    return PlanResult(UNSOLVABLE, expanded=expanded)


def validate(truth: Domain, problem: Problem, steps: Sequence[GroundAction]) -> bool:
    """True iff the plan executes under the true domain and reaches the goal."""
    task = ground_problem(truth, problem)
    by_key = {(a.name, a.args): a for a in task.actions}
    state = task.init
    for step in steps:
        a = by_key.get((step.name, step.args))
        if a is None:
            return False
        result = apply(state, a)
        if not result.feasible:
            return False
        state = result.next_state
    return _goal_holds(state, task.goal)


def format_plan(steps: Sequence[GroundAction]) -> str:
    """IPC plan format: one parenthesized action per line."""
    return "".join(a.to_pddl() + "\n" for a in steps)


@dataclass(frozen=True)
class AccuracyResult:
    solved: float
    acc: float
    statuses: tuple[str, ...]
    valid: tuple[bool, ...]


def accuracy(learned: Domain, truth: Domain, problems: Sequence[Problem], timeout: float = 60.0) -> AccuracyResult:
    if not problems:
        raise ValueError("accuracy needs at least one problem")
    statuses, valid = [], []
    for p in problems:
        r = plan(learned, p, timeout)
        statuses.append(r.status)
        valid.append(r.solved and validate(truth, p, r.plan))
    n = len(problems)
    return AccuracyResult(
        100.0 * statuses.count(SOLVED) / n, 100.0 * sum(valid) / n, tuple(statuses), tuple(valid)
    )


# ------------------------------------------------------- problem generation


def generate_problems(
    truth: Domain,
    base: Problem,
    n: int,
    rng: random.Random,
    init_steps: tuple[int, int] = (0, 20),
    goal_steps: tuple[int, int] = (5, 30),
    max_tries: int = 1000,
) -> list[Problem]:
    """Problems solvable under ``truth`` by construction.

    The initial state is reached by a random walk from ``base``'s initial
    state; the goal is every non-static fact true after a further walk.
    Goals already satisfied initially are discarded.
    """
    oracle = Oracle.from_pddl(truth, base)
    static = truth.static_predicates()

    def walk(state, steps):
        for _ in range(steps):
            options = [a for a in oracle.actions if apply(state, a).feasible]
            if not options:
                break
            state = apply(state, options[rng.randrange(len(options))]).next_state
        return state

    out: list[Problem] = []
    for _ in range(max_tries):
        if len(out) == n:
            break
        init = walk(oracle.initial_state, rng.randint(*init_steps))
        end = walk(init, rng.randint(*goal_steps))
        goal = frozenset(Literal(p) for p in end if p.predicate not in static)
        if _goal_holds(init, goal):
            continue
        out.append(Problem(f"{base.name}-g{len(out) + 1:02d}", base.domain_name, base.objects, init, goal))
    if len(out) < n:
        raise RuntimeError(f"could only build {len(out)} of {n} non-trivial problems from {base.name}")
    return out


# ------------------------------------------------------------------ report


@dataclass
class MetricsReport:
    e_rho: float
    e_eps: float
    e_sigma: float
    solved: float
    acc: float
    per_operator: dict[str, dict] = field(default_factory=dict)

    COLUMNS = ("e_rho", "e_eps", "e_sigma", "solved", "acc")

    def __post_init__(self):
        for c in self.COLUMNS:
            v = getattr(self, c)
            if not 0.0 <= v <= 100.0:
                raise ValueError(f"{c} = {v} outside [0, 100]")
        if self.acc > self.solved + 1e-9:
            raise ValueError("accuracy cannot exceed the solved rate")

    def csv_row(self) -> str:
        return ",".join(f"{getattr(self, c):.2f}" for c in self.COLUMNS)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> MetricsReport:
        return cls(**json.loads(text))


def evaluate(
    learned: Domain,
    truth: Domain,
    traces: Sequence[Trace],
    problems: Sequence[Problem],
    timeout: float = 60.0,
    per_slot: bool = False,
) -> MetricsReport:
    e_sigma, breakdown = syntactical_error(learned, truth, per_slot)
    result = accuracy(learned, truth, problems, timeout)
    return MetricsReport(
        e_rho=precondition_error(learned, traces),
        e_eps=effect_error(learned, traces),
        e_sigma=e_sigma,
        solved=result.solved,
        acc=result.acc,
        per_operator=breakdown,
    )
