"""The black-box state machine queried by the learner.

Transitions are exact STRIPS semantics; only observations may be partial
(propositions missing) or noisy (truth values flipped).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .pddl import Atom, Domain, GroundAction, Problem, Task, ground_problem


@dataclass(frozen=True)
class TransitionResult:
    feasible: bool
    next_state: frozenset[Atom] | None = None


def is_applicable(state: frozenset[Atom], action: GroundAction) -> bool:
    return action.pre_pos <= state and not (action.pre_neg & state)


def apply(state: frozenset[Atom], action: GroundAction) -> TransitionResult:
    if not is_applicable(state, action):
        return TransitionResult(False)
    return TransitionResult(True, (state | action.add) - action.delete)


def run(s0: frozenset[Atom], plan: Sequence[GroundAction]) -> list[frozenset[Atom]]:
    """States visited while executing ``plan``; stops at the first infeasible step."""
    states = [s0]
    for action in plan:
        result = apply(states[-1], action)
        if not result.feasible:
            break
        states.append(result.next_state)
    return states


def is_feasible(s0: frozenset[Atom], plan: Sequence[GroundAction]) -> bool:
    return len(run(s0, plan)) == len(plan) + 1


@dataclass(frozen=True)
class ObservationConfig:
    observe_fraction: float = 1.0
    noise_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("observe_fraction", "noise_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class Observation:
    """Truth values for the observed propositions; the rest are unknown."""

    values: Mapping[Atom, bool]

    def __getitem__(self, atom: Atom) -> bool | None:
        return self.values.get(atom)

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def complete(cls, state: frozenset[Atom], universe: Iterable[Atom]) -> Observation:
        return cls({p: p in state for p in universe})


def observe(
    state: frozenset[Atom],
    universe: Sequence[Atom],
    cfg: ObservationConfig,
    rng: random.Random,
) -> Observation:
    """Keep each proposition with probability ``observe_fraction``, then flip
    each kept value with probability ``noise_rate``."""
    values = {}
    for p in universe:
        if rng.random() < cfg.observe_fraction:
            value = p in state
            if rng.random() < cfg.noise_rate:
                value = not value
            values[p] = value
    return Observation(values)


class Oracle:
    """Answers feasibility queries and emits observations for one task."""

    def __init__(self, task: Task):
        self.task = task
        self.actions = task.actions
        self.propositions = task.propositions
        self.initial_state = task.init
        self._by_key = {(a.name, a.args): a for a in task.actions}

    @classmethod
    def from_pddl(cls, domain: Domain, problem: Problem) -> Oracle:
        return cls(ground_problem(domain, problem))

    def action(self, name: str, *args: str) -> GroundAction:
        return self._by_key[(name, tuple(args))]

    def resolve(self, action: GroundAction) -> GroundAction:
        """The oracle's own copy of an action known only by name and args."""
        return self._by_key[(action.name, action.args)]

    def apply(self, state: frozenset[Atom], action: GroundAction) -> TransitionResult:
        return apply(state, self.resolve(action))

    def run(self, s0: frozenset[Atom], plan: Sequence[GroundAction]) -> list[frozenset[Atom]]:
        return run(s0, [self.resolve(a) for a in plan])

    def is_feasible(self, s0: frozenset[Atom], plan: Sequence[GroundAction]) -> bool:
        return len(self.run(s0, plan)) == len(plan) + 1

    def observe(self, state: frozenset[Atom], cfg: ObservationConfig, rng: random.Random) -> Observation:
        return observe(state, self.propositions, cfg, rng)
