"""Fitness of a candidate domain against a dataset.

Four terms are summed:

* ``j_rho``: each precondition literal of each executed action scores +1 when
  the observation before the step agrees with it, -1 when it disagrees and 0
  when the proposition is unobserved.
* ``j_eps``: the states predicted by applying the candidate effects from the
  known initial state are compared with the observations (+1 per observed
  proposition that matches, -1 per mismatch).  Effects are applied even when
  candidate preconditions fail.
* ``j_plus``: ``len(sample)`` for every positive sample the candidate can
  execute from start to end.
* ``j_minus``: +1 for every negative sample whose prefix the candidate can
  execute and whose final action it rejects.

``fitness`` is a direct, set-based implementation.  ``FitnessEvaluator``
computes the same numbers with a compiled bitset kernel and supports cheap
single-literal toggles for tabu search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .dataset import Dataset
from .encoding import Encoding
from .pddl import Atom, Domain, GroundAction

SLOTS = ("pre_pos", "pre_neg", "add", "delete")


@dataclass(frozen=True)
class FitnessScore:
    j_rho: int = 0
    j_eps: int = 0
    j_plus: int = 0
    j_minus: int = 0

    @property
    def total(self) -> int:
        return self.j_rho + self.j_eps + self.j_plus + self.j_minus


# ------------------------------------------------------------ reference route


def _grounded(d: Domain, action: GroundAction) -> GroundAction:
    return d.schema(action.name).ground(action.args)


def _feasible(state: frozenset[Atom], g: GroundAction) -> bool:
    return g.pre_pos <= state and not (g.pre_neg & state)


def _simulate(d: Domain, s0: frozenset[Atom], actions) -> tuple[list[frozenset[Atom]], int]:
    """Predicted states and the number of steps executable before the first failure."""
    states = [s0]
    n_ok = None
    for i, a in enumerate(actions):
        g = _grounded(d, a)
        if n_ok is None and not _feasible(states[-1], g):
            n_ok = i
        states.append((states[-1] | g.add) - g.delete)
    return states, len(actions) if n_ok is None else n_ok


def _effect_states(d: Domain, s0: frozenset[Atom], sample, anchored: bool) -> list[frozenset[Atom]]:
    """States predicted for scoring effects.  When ``anchored``, each step
    starts from the previous observation where it is known and from the
    previous prediction elsewhere."""
    states = [s0]
    for a, obs in zip(sample.actions, sample.observations):
        prev = states[-1]
        if anchored:
            prev = frozenset(p for p in prev if obs[p] is None) | {p for p, v in obs.values.items() if v}
        g = _grounded(d, a)
        states.append((prev | g.add) - g.delete)
    return states


def fitness(d: Domain, ds: Dataset, anchored: bool = True) -> FitnessScore:
    j_rho = j_eps = j_plus = j_minus = 0
    for sample in ds.positives:
        _, n_ok = _simulate(d, ds.initial_state, sample.actions)
        for i, a in enumerate(sample.actions):
            g = _grounded(d, a)
            obs = sample.observations[i]
            for p in g.pre_pos:
                v = obs[p]
                if v is not None:
                    j_rho += 1 if v else -1
            for p in g.pre_neg:
                v = obs[p]
                if v is not None:
                    j_rho += -1 if v else 1
        for predicted, obs in zip(_effect_states(d, ds.initial_state, sample, anchored), sample.observations):
            for p, v in obs.values.items():
                j_eps += 1 if (p in predicted) == v else -1
        if n_ok == len(sample):
            j_plus += len(sample)
    for neg in ds.negatives:
        states, n_ok = _simulate(d, ds.initial_state, neg.prefix)
        if n_ok == len(neg.prefix) and not _feasible(states[-1], _grounded(d, neg.actions[-1])):
            j_minus += 1
    return FitnessScore(j_rho, j_eps, j_plus, j_minus)


# ------------------------------------------------------------- compiled route

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_S1, _S2, _S4, _S56 = np.uint64(1), np.uint64(2), np.uint64(4), np.uint64(56)
_ZERO = np.uint64(0)


@numba.njit(cache=True, inline="always")
def _popc(x):
    x = x - ((x >> _S1) & _M1)
    x = (x & _M2) + ((x >> _S2) & _M2)
    x = (x + (x >> _S4)) & _M4
    return np.int64((x * _H01) >> _S56)


@numba.njit(cache=True)
def _evaluate(pre_pos, pre_neg, add, dele, s0, seq_start, step_action, obs_mask, obs_val,
              seq_weight, neg_seq, neg_pos, neg_action, anchored, pred, feas):
    n_seq = seq_weight.shape[0]
    n_words = s0.shape[0]
    eps_state = np.empty(n_words, np.uint64)
    j_rho = 0
    j_eps = 0
    j_plus = 0
    j_minus = 0
    for s in range(n_seq):
        first = seq_start[s]
        n = seq_start[s + 1] - first
        base = first + s
        w = seq_weight[s]
        for j in range(n_words):
            pred[base, j] = s0[j]
            eps_state[j] = s0[j]
        n_ok = n
        for i in range(n):
            a = step_action[first + i]
            st = base + i
            ok = True
            for j in range(n_words):
                cur = pred[st, j]
                pp = pre_pos[a, j]
                pn = pre_neg[a, j]
                if (pp & ~cur) != _ZERO or (pn & cur) != _ZERO:
                    ok = False
                pred[st + 1, j] = (cur | add[a, j]) & ~dele[a, j]
                if w:
                    m = obs_mask[st, j]
                    v = obs_val[st, j]
                    j_rho += _popc(pp & m & v) - _popc(pp & m & ~v)
                    j_rho += _popc(pn & m & ~v) - _popc(pn & m & v)
                    j_eps += _popc(m) - 2 * _popc((eps_state[j] ^ v) & m)
                    prev = eps_state[j]
                    if anchored:
                        prev = (prev & ~m) | (v & m)
                    eps_state[j] = (prev | add[a, j]) & ~dele[a, j]
            if not ok and n_ok == n:
                n_ok = i
        feas[s] = n_ok
        if w:
            st = base + n
            for j in range(n_words):
                m = obs_mask[st, j]
                j_eps += _popc(m) - 2 * _popc((eps_state[j] ^ obs_val[st, j]) & m)
            if n_ok == n:
                j_plus += n
    for k in range(neg_seq.shape[0]):
        s = neg_seq[k]
        p = neg_pos[k]
        if p > feas[s]:
            continue
        st = seq_start[s] + s + p
        a = neg_action[k]
        for j in range(n_words):
            cur = pred[st, j]
            if (pre_pos[a, j] & ~cur) != _ZERO or (pre_neg[a, j] & cur) != _ZERO:
                j_minus += 1
                break
    return j_rho, j_eps, j_plus, j_minus


def _to_words(bits: int, n_words: int) -> np.ndarray:
    return np.array([(bits >> (64 * j)) & 0xFFFFFFFFFFFFFFFF for j in range(n_words)], dtype=np.uint64)


Selections = dict[str, list[int]]  # operator -> bitsets over candidates, one per slot


class FitnessEvaluator:
    """Compiled fitness with a mutable "current" candidate for local search."""

    def __init__(self, ds: Dataset, enc: Encoding, anchored: bool = True):
        self.enc = enc
        self.anchored = anchored
        W = enc.n_words
        self.n_words = W
        index = enc.action_index

        seqs: list[tuple[int, ...]] = []
        weights: list[int] = []
        masks: list[np.ndarray] = []
        vals: list[np.ndarray] = []
        prefix_at: dict[tuple, tuple[int, int]] = {}
        for sample in ds.positives:
            s = len(seqs)
            seqs.append(tuple(index[a] for a in sample.actions))
            weights.append(1)
            for i in range(len(sample) + 1):
                prefix_at.setdefault(sample.actions[:i], (s, i))
            for obs in sample.observations:
                m, v = enc.obs_bits(obs)
                masks.append(_to_words(m, W))
                vals.append(_to_words(v, W))
        negs = []
        for neg in ds.negatives:
            prefix = neg.prefix
            if prefix not in prefix_at:
                # not a positive prefix: a silent sequence, scored only for J-
                s = len(seqs)
                seqs.append(tuple(index[a] for a in prefix))
                weights.append(0)
                for i in range(len(prefix) + 1):
                    prefix_at.setdefault(prefix[:i], (s, i))
                for _ in range(len(prefix) + 1):
                    masks.append(np.zeros(W, np.uint64))
                    vals.append(np.zeros(W, np.uint64))
            s, p = prefix_at[prefix]
            negs.append((s, p, index[neg.actions[-1]]))

        self.seq_start = np.zeros(len(seqs) + 1, np.int64)
        self.seq_start[1:] = np.cumsum([len(q) for q in seqs])
        self.step_action = np.array([a for q in seqs for a in q], dtype=np.int64)
        n_states = int(self.seq_start[-1]) + len(seqs)
        self.obs_mask = np.array(masks, dtype=np.uint64).reshape(n_states, W)
        self.obs_val = np.array(vals, dtype=np.uint64).reshape(n_states, W)
        self.seq_weight = np.array(weights, dtype=np.int64)
        neg_arr = np.array(negs, dtype=np.int64).reshape(-1, 3)
        self.neg_seq = np.ascontiguousarray(neg_arr[:, 0])
        self.neg_pos = np.ascontiguousarray(neg_arr[:, 1])
        self.neg_action = np.ascontiguousarray(neg_arr[:, 2])
        self.s0 = _to_words(enc.state_bits(ds.initial_state), W)
        self._pred = np.zeros((n_states, W), np.uint64)
        self._feas = np.zeros(len(seqs), np.int64)

        n_act = len(enc.actions)
        self.slots = [np.zeros((n_act, W), np.uint64) for _ in SLOTS]
        # toggle tables: (op, k) -> rows, words, bit values over the op's instances
        self._toggle: dict[tuple[str, int], tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        for op, space in enc.ops.items():
            rows = np.array(space.instances, dtype=np.int64)
            for k in range(len(space.candidates)):
                bits = [enc.inst_bits[i][k] for i in space.instances]
                words = np.array([b // 64 for b in bits], dtype=np.int64)
                vals_ = np.array([1 << (b % 64) for b in bits], dtype=np.uint64)
                self._toggle[(op, k)] = (rows, words, vals_)

    # --------------------------------------------------------------- domains

    def selections(self, d: Domain) -> Selections:
        out = {}
        for s in d.schemas:
            pos = [l.atom for l in s.pre if l.positive]
            neg = [l.atom for l in s.pre if not l.positive]
            out[s.name] = [self.enc.selection(s.name, atoms) for atoms in (pos, neg, s.add, s.delete)]
        return out

    def load(self, sel: Selections) -> None:
        for arr in self.slots:
            arr[:] = 0
        for op, slots in sel.items():
            for slot, bits in enumerate(slots):
                k = 0
                while bits:
                    if bits & 1:
                        self.toggle(op, slot, k)
                    bits >>= 1
                    k += 1

    def toggle(self, op: str, slot: int, k: int) -> None:
        rows, words, vals = self._toggle[(op, k)]
        self.slots[slot][rows, words] ^= vals

    def current(self) -> FitnessScore:
        pp, pn, ad, de = self.slots
        return FitnessScore(*(int(x) for x in _evaluate(
            pp, pn, ad, de, self.s0, self.seq_start, self.step_action, self.obs_mask, self.obs_val,
            self.seq_weight, self.neg_seq, self.neg_pos, self.neg_action, self.anchored,
            self._pred, self._feas)))

    def score(self, d: Domain) -> FitnessScore:
        self.load(self.selections(d))
        return self.current()
