"""Bitset encoding shared by the learner, the fitness kernel and tabu search.

Every observable proposition gets a bit.  For each operator we enumerate its
candidate lifted atoms: predicates applied to distinct, type-compatible
parameters.  Instantiating a candidate with a ground action's binding gives a
ground atom; ground atoms outside the observable universe (static facts
known to be false) get extra "phantom" bits that are never observed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

from .oracle import Observation
from .pddl import Atom, Domain, GroundAction, Literal, TypeTable


def _compatible(types: TypeTable, a: str, b: str) -> bool:
    return types.is_subtype(a, b) or types.is_subtype(b, a)


def candidate_atoms(signature: Domain, op: str) -> tuple[Atom, ...]:
    """Lifted atoms an operator's preconditions and effects may mention."""
    schema = signature.schema(op)
    types = TypeTable(signature)
    out = []
    for pred in signature.predicates:
        for combo in itertools.permutations(schema.params, pred.arity):
            if all(_compatible(types, vt, pt) for (_, vt), pt in zip(combo, pred.param_types)):
                out.append(Atom(pred.name, tuple(v for v, _ in combo)))
    return tuple(sorted(out))


def lift(atom: Atom, action: GroundAction, variables: Sequence[str]) -> Atom | None:
    """Rewrite a ground atom over the action's parameters, if it fits."""
    inverse = dict(zip(action.args, variables))
    if len(inverse) != len(action.args):
        return None
    try:
        return Atom(atom.predicate, tuple(inverse[x] for x in atom.args))
    except KeyError:
        return None


@dataclass
class OperatorSpace:
    name: str
    variables: tuple[str, ...]
    candidates: tuple[Atom, ...]
    index: dict[Atom, int]
    instances: list[int]  # indices into Encoding.actions


class Encoding:
    def __init__(self, signature: Domain, actions: Sequence[GroundAction], propositions: Sequence[Atom]):
        self.signature = signature
        self.actions = tuple(actions)
        self.action_index = {a: i for i, a in enumerate(self.actions)}
        self.props: list[Atom] = list(propositions)
        self.n_observable = len(self.props)
        self.bit: dict[Atom, int] = {p: i for i, p in enumerate(self.props)}
        self.observable_mask = (1 << self.n_observable) - 1

        self.ops: dict[str, OperatorSpace] = {}
        for schema in signature.schemas:
            cands = candidate_atoms(signature, schema.name)
            self.ops[schema.name] = OperatorSpace(
                schema.name, schema.variables, cands, {c: k for k, c in enumerate(cands)}, []
            )
        # inst_bits[i][k]: bit of candidate k grounded with action i's binding
        self.inst_bits: list[tuple[int, ...]] = []
        self.scope: list[int] = []
        for i, a in enumerate(self.actions):
            space = self.ops[a.name]
            space.instances.append(i)
            binding = dict(zip(space.variables, a.args))
            bits = tuple(self._bit_for(c.substitute(binding)) for c in space.candidates)
            self.inst_bits.append(bits)
            self.scope.append(sum(1 << b for b in bits if b < self.n_observable))
        self.n_bits = len(self.props)

    def _bit_for(self, atom: Atom) -> int:
        if atom not in self.bit:
            self.bit[atom] = len(self.props)
            self.props.append(atom)
        return self.bit[atom]

    @property
    def n_words(self) -> int:
        return max(1, (self.n_bits + 63) // 64)

    # ------------------------------------------------------------ conversions

    def state_bits(self, state: Iterable[Atom]) -> int:
        bits = 0
        for p in state:
            b = self.bit.get(p)
            if b is not None:
                bits |= 1 << b
        return bits

    def obs_bits(self, obs: Observation) -> tuple[int, int]:
        """``(mask, values)``: which bits were observed, and their truth values."""
        mask = val = 0
        for p, v in obs.values.items():
            b = self.bit.get(p)
            if b is None or b >= self.n_observable:
                continue
            mask |= 1 << b
            if v:
                val |= 1 << b
        return mask, val

    def lifted(self, action_idx: int, bits: int) -> list[Atom]:
        """Lift the set bits that belong to an action's scope."""
        space = self.ops[self.actions[action_idx].name]
        out = []
        for k, b in enumerate(self.inst_bits[action_idx]):
            if bits >> b & 1:
                out.append(space.candidates[k])
        return out

    def lift_atom(self, action_idx: int, atom: Atom) -> Atom | None:
        a = self.actions[action_idx]
        lifted = lift(atom, a, self.ops[a.name].variables)
        if lifted is None or lifted not in self.ops[a.name].index:
            return None
        return lifted

    def ground_literals(self, action_idx: int, literals: Iterable[Literal]) -> list[Literal]:
        a = self.actions[action_idx]
        binding = dict(zip(self.ops[a.name].variables, a.args))
        return [l.substitute(binding) for l in literals]

    def selection(self, op: str, atoms: Iterable[Atom]) -> int:
        """Bitset over an operator's candidate indices."""
        index = self.ops[op].index
        sel = 0
        for atom in atoms:
            if atom not in index:
                raise ValueError(f"{atom} is not a candidate atom of {op}")
            sel |= 1 << index[atom]
        return sel

    def instance_mask(self, action_idx: int, selection: int) -> int:
        mask = 0
        for k, b in enumerate(self.inst_bits[action_idx]):
            if selection >> k & 1:
                mask |= 1 << b
        return mask
