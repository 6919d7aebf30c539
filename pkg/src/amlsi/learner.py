"""Operator generation and refinement from an induced automaton, and the
full learning loop.

Observations are attached to automaton transitions by replaying the positive
samples.  A transition ``(n, a)`` collects the observations seen just before
(``ante``) and just after (``post``) it.  Their consensus, scoped to the
action's parameters and lifted to the operator's variables, drives
precondition and effect generation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

from .dataset import Dataset, compute_pairwise_constraints, extend_samples
from .encoding import Encoding
from .fitness import FitnessEvaluator, FitnessScore
from .grammar import Dfa, accepts, compression_stats, rpni
from .oracle import Observation
from .pddl import ActionSchema, Atom, Domain, Literal
from .tabu import tabu_search

log = logging.getLogger(__name__)

VARIANTS = ("full", "generation_only", "simple_refinement", "tabu_alone", "without_pc")

CandidateDomain = Domain

Transition = tuple[int, int]  # (node, action index)


@dataclass
class Mapping:
    """Observation bags per automaton transition ``(node, action index)``."""

    ante: dict[Transition, list[Observation]] = field(default_factory=dict)
    post: dict[Transition, list[Observation]] = field(default_factory=dict)
    target: dict[Transition, int] = field(default_factory=dict)


@dataclass
class ReducedMapping:
    """Consensus literals per transition, lifted to the operator's variables."""

    ante: dict[Transition, frozenset[Literal]]
    post: dict[Transition, frozenset[Literal]]
    target: dict[Transition, int]


def build_mappings(dfa: Dfa, ds: Dataset, enc: Encoding) -> Mapping:
    m = Mapping()
    for sample in ds.positives:
        path = dfa.path(sample.actions)
        if path is None:
            raise ValueError(f"positive sample {list(map(str, sample.actions))} is not accepted by the automaton")
        for i, action in enumerate(sample.actions):
            key = (path[i], enc.action_index[action])
            m.ante.setdefault(key, []).append(sample.observations[i])
            m.post.setdefault(key, []).append(sample.observations[i + 1])
            m.target[key] = path[i + 1]
    return m


def consensus(observations: Sequence[Observation], enc: Encoding, action_idx: int) -> frozenset[Literal]:
    """Literals whose observed value never varies across the bag.

    Unobserved values abstain; a proposition never observed yields nothing.
    Only propositions over the action's own arguments are kept.
    """
    seen_true = seen_false = 0
    for obs in observations:
        mask, val = enc.obs_bits(obs)
        seen_true |= mask & val
        seen_false |= mask & ~val
    scope = enc.scope[action_idx]
    pos = seen_true & ~seen_false & scope
    neg = seen_false & ~seen_true & scope
    return frozenset(
        [Literal(a, True) for a in enc.lifted(action_idx, pos)]
        + [Literal(a, False) for a in enc.lifted(action_idx, neg)]
    )


def reduce(m: Mapping, enc: Encoding) -> ReducedMapping:
    return ReducedMapping(
        ante={k: consensus(v, enc, k[1]) for k, v in m.ante.items()},
        post={k: consensus(v, enc, k[1]) for k, v in m.post.items()},
        target=dict(m.target),
    )


def _keys_by_op(rm: ReducedMapping, enc: Encoding) -> dict[str, list[Transition]]:
    out: dict[str, list[Transition]] = {op: [] for op in enc.ops}
    for key in sorted(rm.ante):
        out[enc.actions[key[1]].name].append(key)
    return out


def generate_preconditions(rm: ReducedMapping, enc: Encoding) -> dict[str, frozenset[Literal]]:
    """Literals present in the ante consensus of every transition of the operator."""
    out = {}
    for op, keys in _keys_by_op(rm, enc).items():
        if not keys:
            log.info("operator %s never observed; empty preconditions", op)
            out[op] = frozenset()
            continue
        common = set(rm.ante[keys[0]])
        for key in keys[1:]:
            common &= rm.ante[key]
        out[op] = frozenset(common)
    return out


def generate_effects(rm: ReducedMapping, enc: Encoding) -> dict[str, tuple[frozenset[Atom], frozenset[Atom]]]:
    """``(add, delete)``: atoms always flipped by every transition of the operator."""
    out = {}
    for op, keys in _keys_by_op(rm, enc).items():
        add: set[Atom] | None = None
        delete: set[Atom] | None = None
        for key in keys:
            before, after = rm.ante[key], rm.post[key]
            turned_on = {l.atom for l in after if l.positive and l.negate() in before}
            turned_off = {l.atom for l in after if not l.positive and l.negate() in before}
            add = turned_on if add is None else add & turned_on
            delete = turned_off if delete is None else delete & turned_off
        out[op] = (frozenset(add or ()), frozenset(delete or ()))
    return out


def generate(rm: ReducedMapping, enc: Encoding) -> Domain:
    pre = generate_preconditions(rm, enc)
    eff = generate_effects(rm, enc)
    schemas = [
        ActionSchema(s.name, s.params, pre[s.name], eff[s.name][0], eff[s.name][1])
        for s in enc.signature.schemas
    ]
    return enc.signature.with_schemas(schemas)


def _replace(schema: ActionSchema, **changes) -> ActionSchema:
    fields = {"pre": schema.pre, "add": schema.add, "delete": schema.delete, **changes}
    return ActionSchema(schema.name, schema.params, fields["pre"], fields["add"], fields["delete"])


def refine_effects(d: Domain, dfa: Dfa, rm: ReducedMapping, enc: Encoding) -> tuple[Domain, list[str]]:
    """Make each transition's effects produce the next transition's preconditions.

    For consecutive transitions ``n -a-> n' -a'-> n''``: a precondition of
    ``a'`` known to be violated before ``a`` (its negation is in the ante
    consensus of ``(n, a)``) and not produced by ``a`` becomes an effect of
    ``a``'s operator.  Additions that would put an atom in both effect lists
    are skipped.
    """
    schemas = {s.name: s for s in d.schemas}
    add = {s.name: set(s.add) for s in d.schemas}
    delete = {s.name: set(s.delete) for s in d.schemas}
    edits: list[str] = []
    by_source: dict[int, list[Transition]] = {}
    for key in sorted(rm.target):
        by_source.setdefault(key[0], []).append(key)
    for key in sorted(rm.target):
        _, a = key
        op = enc.actions[a].name
        before = rm.ante[key]
        for nxt in by_source.get(rm.target[key], ()):
            op2 = enc.actions[nxt[1]].name
            for lit in enc.ground_literals(nxt[1], schemas[op2].pre):
                lifted = enc.lift_atom(a, lit.atom)
                if lifted is None:
                    continue
                produced, opposite = (add, delete) if lit.positive else (delete, add)
                if lifted in produced[op]:
                    continue
                if Literal(lifted, not lit.positive) not in before:
                    continue
                if lifted in opposite[op]:
                    log.debug("skip %s effect %s: already the opposite effect", op, lifted)
                    continue
                if not lit.positive and Literal(lifted, False) in schemas[op].pre:
                    # deleting an atom required to be false would contradict the
                    # precondition refinement, which then drops it again
                    log.debug("skip %s delete effect %s: negative precondition", op, lifted)
                    continue
                produced[op].add(lifted)
                edits.append(f"{op}: {'+' if lit.positive else '-'}{lifted}")
    new = [_replace(s, add=frozenset(add[s.name]), delete=frozenset(delete[s.name])) for s in d.schemas]
    return d.with_schemas(new), edits


def refine_preconditions(d: Domain) -> tuple[Domain, list[str]]:
    """Deleted atoms must hold beforehand.  When that contradicts a negative
    precondition, the delete effect is dropped instead."""
    edits: list[str] = []
    new = []
    for s in d.schemas:
        pre, delete = set(s.pre), set(s.delete)
        for atom in sorted(s.delete):
            if Literal(atom, False) in pre:
                delete.discard(atom)
                edits.append(f"{s.name}: drop -{atom}")
            elif Literal(atom, True) not in pre:
                pre.add(Literal(atom, True))
                edits.append(f"{s.name}: pre {atom}")
        new.append(_replace(s, pre=frozenset(pre), delete=frozenset(delete)))
    return d.with_schemas(new), edits


def refine(d: Domain, dfa: Dfa, rm: ReducedMapping, enc: Encoding, cap: int = 50) -> tuple[Domain, int, list[str]]:
    """Alternate effect and precondition refinement until neither changes."""
    edits: list[str] = []
    for iteration in range(1, cap + 1):
        d, e1 = refine_effects(d, dfa, rm, enc)
        d, e2 = refine_preconditions(d)
        edits += e1 + e2
        if not e1 and not e2:
            return d, iteration, edits
    log.warning("refinement did not converge in %d iterations", cap)
    return d, cap, edits


@dataclass(frozen=True)
class LearnConfig:
    variant: str = "full"
    tabu_iterations: int = 200
    tabu_tenure: int = 10
    max_rounds: int = 10

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")


@dataclass
class LearnResult:
    domain: Domain
    dfa: Dfa
    trace: list[dict]
    fitness: FitnessScore


def induce(ds: Dataset, use_pc: bool = True) -> tuple[Dfa, list, list]:
    """RPNI over the (optionally pairwise-extended) samples; the result is
    checked against every sample it was built from."""
    if use_pc:
        pc = compute_pairwise_constraints(ds.positives, ds.actions)
        positives, negatives = extend_samples(ds, pc)
    else:
        positives = [s.actions for s in ds.positives]
        negatives = [n.actions for n in ds.negatives]
    dfa = rpni(positives, negatives)
    if not all(accepts(dfa, p) for p in positives) or any(accepts(dfa, n) for n in negatives):
        raise AssertionError("induced automaton is inconsistent with its samples")
    return dfa, positives, negatives


def learn(ds: Dataset, config: LearnConfig = LearnConfig(), signature: Domain | None = None) -> LearnResult:
    signature = signature or ds.signature
    if signature is None:
        raise ValueError("dataset carries no operator signature; pass one explicitly")
    if not ds.positives:
        raise ValueError("cannot learn from an empty dataset")
    signature = signature.signature()
    enc = Encoding(signature, ds.actions, ds.propositions)
    evaluator = FitnessEvaluator(ds, enc)
    trace: list[dict] = []

    def record(stage: str, d: Domain, **extra):
        trace.append({"stage": stage, "fitness": evaluator.score(d).total, **extra})

    dfa, positives, negatives = induce(ds, use_pc=config.variant != "without_pc")
    n_states = sum(len(s) for s in ds.positives)
    trace.append({"stage": "induction", "n_pos": len(positives), "n_neg": len(negatives),
                  **compression_stats(dfa, n_states)})
    rm = reduce(build_mappings(dfa, ds, enc), enc)

    if config.variant == "tabu_alone":
        d = signature
        record("empty", d)
        d, moves = tabu_search(d, evaluator, config.tabu_iterations, config.tabu_tenure)
        record("tabu", d, iterations=config.tabu_iterations, edits=moves)
        return LearnResult(d, dfa, trace, evaluator.score(d))

    d = generate(rm, enc)
    record("generation", d)
    if config.variant == "generation_only":
        return LearnResult(d, dfa, trace, evaluator.score(d))

    d, its, edits = refine(d, dfa, rm, enc)
    record("refinement", d, iterations=its, edits=edits)
    if config.variant == "simple_refinement":
        return LearnResult(d, dfa, trace, evaluator.score(d))

    best, best_score = d, evaluator.score(d).total
    for round_ in range(1, config.max_rounds + 1):
        searched, moves = tabu_search(d, evaluator, config.tabu_iterations, config.tabu_tenure)
        record("tabu", searched, round=round_, iterations=config.tabu_iterations, edits=moves)
        refined, its, edits = refine(searched, dfa, rm, enc)
        record("refinement", refined, round=round_, iterations=its, edits=edits)
        score = evaluator.score(refined).total
        if score > best_score:
            best, best_score = refined, score
        if refined == d:
            break
        d = refined
    else:
        log.info("no fixpoint after %d rounds; keeping the fittest domain", config.max_rounds)
        d = best
    return LearnResult(d, dfa, trace, evaluator.score(d))
