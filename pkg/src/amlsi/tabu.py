"""Tabu search over candidate domains.

A move toggles one lifted atom in one slot (positive precondition, negative
precondition, add effect, delete effect) of one operator.  Moves that would
make an atom both a positive and a negative precondition, or both an add and
a delete effect, are not generated.  A move stays tabu for ``tenure``
iterations after it is made unless it reaches a new best fitness.  Ties
between equally good moves go to the first one in canonical order
(operator, slot, candidate index), so the search is deterministic.
"""

from __future__ import annotations

from .fitness import SLOTS, FitnessEvaluator, Selections
from .pddl import ActionSchema, Domain, Literal

# slot index -> slot that must stay disjoint from it
_EXCLUSIVE = {0: 1, 1: 0, 2: 3, 3: 2}


def to_domain(signature: Domain, sel: Selections, evaluator: FitnessEvaluator) -> Domain:
    schemas = []
    for s in signature.schemas:
        cands = evaluator.enc.ops[s.name].candidates
        pp, pn, ad, de = (
            [c for k, c in enumerate(cands) if bits >> k & 1] for bits in sel[s.name]
        )
        pre = frozenset([Literal(a, True) for a in pp] + [Literal(a, False) for a in pn])
        schemas.append(ActionSchema(s.name, s.params, pre, frozenset(ad), frozenset(de)))
    return signature.with_schemas(schemas)


def tabu_search(
    d0: Domain, evaluator: FitnessEvaluator, iterations: int = 200, tenure: int = 10
) -> tuple[Domain, list[str]]:
    """Return the fittest domain visited and the moves leading to it."""
    if iterations <= 0:
        raise ValueError("iterations must be positive")
    sel = evaluator.selections(d0)
    evaluator.load(sel)
    best_sel = {op: list(v) for op, v in sel.items()}
    best = evaluator.current().total
    moves = [
        (op, slot, k)
        for op, space in evaluator.enc.ops.items()
        for slot in range(len(SLOTS))
        for k in range(len(space.candidates))
    ]
    tabu_until: dict[tuple[str, int, int], int] = {}
    path: list[str] = []
    best_path: list[str] = []
    for it in range(iterations):
        chosen, chosen_val = None, None
        for move in moves:
            op, slot, k = move
            if sel[op][_EXCLUSIVE[slot]] >> k & 1:
                continue
            evaluator.toggle(op, slot, k)
            val = evaluator.current().total
            evaluator.toggle(op, slot, k)
            if tabu_until.get(move, -1) >= it and val <= best:
                continue
            if chosen_val is None or val > chosen_val:
                chosen, chosen_val = move, val
        if chosen is None:
            break
        op, slot, k = chosen
        evaluator.toggle(op, slot, k)
        sel[op][slot] ^= 1 << k
        tabu_until[chosen] = it + tenure
        atom = evaluator.enc.ops[op].candidates[k]
        path.append(f"{op}: {'+' if sel[op][slot] >> k & 1 else '-'}{SLOTS[slot]} {atom}")
        if chosen_val > best:
            best = chosen_val
            best_sel = {o: list(v) for o, v in sel.items()}
            best_path = list(path)
    return to_domain(d0, best_sel, evaluator), best_path
