"""Regular grammar induction with RPNI state merging.

Symbols are any hashable, orderable values (ground actions in the learner,
strings in tests).  By default the induced language is prefix-closed: every
prefix of a positive sample is accepted, and a sequence is rejected exactly
when its path leaves the automaton.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

ACCEPT, REJECT, UNKNOWN = 1, -1, 0


@dataclass(frozen=True)
class Dfa:
    """``delta`` maps ``(node, symbol)`` to a node; node 0 is initial."""

    alphabet: tuple
    n_nodes: int
    delta: Mapping[tuple[int, Hashable], int]
    finals: frozenset[int]
    initial: int = 0

    @property
    def nodes(self) -> range:
        return range(self.n_nodes)

    @property
    def n_transitions(self) -> int:
        return len(self.delta)

    def step(self, node: int, symbol) -> int | None:
        return self.delta.get((node, symbol))

    def path(self, seq: Sequence) -> list[int] | None:
        """Nodes visited along ``seq``, or None if a transition is undefined."""
        node = self.initial
        out = [node]
        for sym in seq:
            node = self.delta.get((node, sym))
            if node is None:
                return None
            out.append(node)
        return out

    def outgoing(self) -> dict[int, list[tuple[Hashable, int]]]:
        out: dict[int, list[tuple[Hashable, int]]] = {n: [] for n in self.nodes}
        for (n, sym), m in sorted(self.delta.items(), key=lambda kv: (kv[0][0], kv[0][1])):
            out[n].append((sym, m))
        return out

    def check(self) -> None:
        """Structural invariants: node ids in range, finals valid, all reachable."""
        if not 0 <= self.initial < self.n_nodes:
            raise AssertionError("initial node out of range")
        if not self.finals <= set(self.nodes):
            raise AssertionError("final node out of range")
        seen = {self.initial}
        queue = deque([self.initial])
        out = self.outgoing()
        while queue:
            n = queue.popleft()
            for _, m in out[n]:
                if not 0 <= m < self.n_nodes:
                    raise AssertionError("transition target out of range")
                if m not in seen:
                    seen.add(m)
                    queue.append(m)
        if len(seen) != self.n_nodes:
            raise AssertionError("unreachable nodes")


def accepts(dfa: Dfa, seq: Sequence) -> bool:
    path = dfa.path(seq)
    return path is not None and path[-1] in dfa.finals


class _Apta:
    """Augmented prefix tree: positive prefixes plus negative endpoints."""

    def __init__(self, positives, negatives, prefix_closed: bool):
        self.children: list[dict] = [{}]
        self.label: list[int] = [ACCEPT if prefix_closed else UNKNOWN]
        self.positive: list[bool] = [True]
        for seq in positives:
            node = self._walk(seq, positive=True, mark=ACCEPT if prefix_closed else None)
            self.label[node] = ACCEPT
        for seq in negatives:
            node = self._walk(seq, positive=False, mark=None)
            if self.label[node] == ACCEPT:
                raise ValueError(f"sequence {list(seq)} is both positive and negative")
            self.label[node] = REJECT

    def _walk(self, seq, positive: bool, mark) -> int:
        node = 0
        for sym in seq:
            nxt = self.children[node].get(sym)
            if nxt is None:
                nxt = len(self.children)
                self.children.append({})
                self.label.append(UNKNOWN)
                self.positive.append(False)
                self.children[node][sym] = nxt
            node = nxt
            if positive:
                self.positive[node] = True
                if mark is not None:
                    self.label[node] = mark
        return node

    def shortlex(self) -> list[int]:
        """Positive-prefix nodes in breadth-first, symbol-sorted order."""
        order = []
        queue = deque([0])
        while queue:
            n = queue.popleft()
            order.append(n)
            for sym in sorted(self.children[n]):
                c = self.children[n][sym]
                if self.positive[c]:
                    queue.append(c)
        return order


class _Merger:
    """Union-find over APTA nodes with an undo log for rejected merges."""

    def __init__(self, apta: _Apta):
        n = len(apta.children)
        self.parent = list(range(n))
        self.label = list(apta.label)
        self.positive = list(apta.positive)
        self.children = [dict(c) for c in apta.children]
        self._log: list[tuple] = []

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            x = self.parent[x]
        return x

    def try_merge(self, red: int, blue: int) -> bool:
        self._log = []
        ok = self._fold(red, blue)
        if not ok:
            self._undo()
        self._log = []
        return ok

    def _fold(self, a: int, b: int) -> bool:
        stack = [(a, b)]
        while stack:
            x, y = stack.pop()
            x, y = self.find(x), self.find(y)
            if x == y:
                continue
            lx, ly = self.label[x], self.label[y]
            if lx * ly < 0:
                return False
            self._log.append(("parent", y, self.parent[y]))
            self.parent[y] = x
            if ly and not lx:
                self._log.append(("label", x, lx))
                self.label[x] = ly
            if self.positive[y] and not self.positive[x]:
                self._log.append(("positive", x, False))
                self.positive[x] = True
            cx = self.children[x]
            for sym, child in self.children[y].items():
                if sym in cx:
                    stack.append((cx[sym], child))
                else:
                    self._log.append(("child", x, sym))
                    cx[sym] = child
        return True

    def _undo(self) -> None:
        for entry in reversed(self._log):
            kind, node, value = entry
            if kind == "parent":
                self.parent[node] = value
            elif kind == "label":
                self.label[node] = value
            elif kind == "positive":
                self.positive[node] = value
            else:
                del self.children[node][value]


def _quotient(merger: _Merger, alphabet, prefix_closed: bool) -> Dfa:
    """Renumber the surviving blocks in shortlex order from the root."""
    root = merger.find(0)
    ids = {root: 0}
    queue = deque([root])
    delta = {}
    while queue:
        block = queue.popleft()
        for sym in sorted(merger.children[block]):
            target = merger.find(merger.children[block][sym])
            if not merger.positive[target]:
                continue
            if target not in ids:
                ids[target] = len(ids)
                queue.append(target)
            delta[(ids[block], sym)] = ids[target]
    if prefix_closed:
        finals = frozenset(ids.values())
    else:
        finals = frozenset(i for b, i in ids.items() if merger.label[b] == ACCEPT)
    return Dfa(tuple(alphabet), len(ids), delta, finals)


def _alphabet(*sample_sets) -> tuple:
    syms = set()
    for samples in sample_sets:
        for seq in samples:
            syms.update(seq)
    return tuple(sorted(syms))


def build_pta(positives: Iterable[Sequence], prefix_closed: bool = True) -> Dfa:
    """Prefix tree acceptor: one node per distinct prefix of a positive sample."""
    positives = [tuple(p) for p in positives]
    if not positives:
        raise ValueError("build_pta needs at least one positive sample")
    apta = _Apta(positives, [], prefix_closed)
    return _quotient(_Merger(apta), _alphabet(positives), prefix_closed)


def rpni(
    positives: Iterable[Sequence],
    negatives: Iterable[Sequence],
    prefix_closed: bool = True,
) -> Dfa:
    """Merge PTA nodes in shortlex order, keeping only merges under which no
    negative sample becomes accepted."""
    positives = [tuple(p) for p in positives]
    negatives = [tuple(n) for n in negatives]
    if not positives:
        raise ValueError("rpni needs at least one positive sample")
    apta = _Apta(positives, negatives, prefix_closed)
    merger = _Merger(apta)
    red: list[int] = [0]
    for node in apta.shortlex()[1:]:
        if merger.find(node) != node:
            continue
        if not any(merger.try_merge(r, node) for r in red):
            red.append(node)
    dfa = _quotient(merger, _alphabet(positives, negatives), prefix_closed)
    dfa.check()
    return dfa


def compression_stats(dfa: Dfa, n_states: int) -> dict[str, float]:
    """Node and transition counts, and observed states per node."""
    return {
        "nodes": dfa.n_nodes,
        "transitions": dfa.n_transitions,
        "states": n_states,
        "compression": n_states / dfa.n_nodes if dfa.n_nodes else 0.0,
    }


def export_dfa(dfa: Dfa) -> str:
    """One ``node symbol node`` line per transition, then the final nodes."""
    lines = [f"{n} {sym} {m}" for (n, sym), m in sorted(dfa.delta.items(), key=lambda kv: kv[0])]
    lines.append("final " + " ".join(map(str, sorted(dfa.finals))))
    return "\n".join(lines) + "\n"
