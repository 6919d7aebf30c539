"""Training data built by random walks on the oracle.

A walk draws actions uniformly from A without replacement at each position
until one is feasible; every failed probe is a negative sample (the walk so
far plus the failing action).  At the end of a walk every remaining action
is probed once more so the terminal state also contributes negatives.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .oracle import Observation, ObservationConfig, Oracle
from .pddl import Atom, Domain, GroundAction, parse_domain, serialize_domain


@dataclass(frozen=True)
class PositiveSample:
    actions: tuple[GroundAction, ...]
    observations: tuple[Observation, ...]

    def __post_init__(self):
        if len(self.observations) != len(self.actions) + 1:
            raise ValueError("a positive sample needs one observation per visited state")

    def __len__(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class NegativeSample:
    actions: tuple[GroundAction, ...]

    @property
    def prefix(self) -> tuple[GroundAction, ...]:
        return self.actions[:-1]

    def __len__(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class Dataset:
    positives: tuple[PositiveSample, ...]
    negatives: tuple[NegativeSample, ...]
    initial_state: frozenset[Atom]
    obs_config: ObservationConfig
    actions: tuple[GroundAction, ...]
    propositions: tuple[Atom, ...]
    signature: Domain | None = None
    seed: int | None = field(default=None, compare=False)

    def stats(self) -> dict[str, float]:
        """Table-1 style counts: sizes and mean lengths of both sample sets."""
        npos, nneg = len(self.positives), len(self.negatives)
        return {
            "n_actions": len(self.actions),
            "n_propositions": len(self.propositions),
            "n_pos": npos,
            "n_neg": nneg,
            "mean_pos_len": sum(map(len, self.positives)) / npos if npos else 0.0,
            "mean_neg_len": sum(map(len, self.negatives)) / nneg if nneg else 0.0,
        }


def _walk(oracle: Oracle, s0, target: int, cfg: ObservationConfig, rng: random.Random):
    state = s0
    actions: list[GroundAction] = []
    observations = [oracle.observe(state, cfg, rng)]
    failures: list[tuple[GroundAction, ...]] = []
    while len(actions) < target:
        pool = list(oracle.actions)
        moved = False
        while pool:
            action = pool.pop(rng.randrange(len(pool)))
            result = oracle.apply(state, action)
            if result.feasible:
                actions.append(action)
                state = result.next_state
                observations.append(oracle.observe(state, cfg, rng))
                moved = True
                break
            failures.append((*actions, action))
        if not moved:
            break  # dead end: keep the truncated walk
    else:
        for action in oracle.actions:
            if not oracle.apply(state, action).feasible:
                failures.append((*actions, action))
    return PositiveSample(tuple(actions), tuple(observations)), failures


def generate(
    oracle: Oracle,
    s0: frozenset[Atom],
    n_pos: int,
    len_range: tuple[int, int],
    rng: random.Random,
    obs_config: ObservationConfig = ObservationConfig(),
) -> Dataset:
    lo, hi = len_range
    if n_pos <= 0:
        raise ValueError("n_pos must be positive")
    if lo > hi or lo < 0:
        raise ValueError(f"bad length range {len_range}")
    positives = []
    negatives: dict[tuple[GroundAction, ...], None] = {}
    for _ in range(n_pos):
        target = rng.randint(lo, hi)
        sample, failures = _walk(oracle, s0, target, obs_config, rng)
        positives.append(sample)
        negatives.update(dict.fromkeys(failures))
    return Dataset(
        positives=tuple(positives),
        negatives=tuple(NegativeSample(seq) for seq in negatives),
        initial_state=frozenset(s0),
        obs_config=obs_config,
        actions=oracle.actions,
        propositions=oracle.propositions,
        signature=oracle.task.domain.signature(),
        seed=obs_config.seed,
    )


@dataclass(frozen=True)
class PairwiseConstraints:
    """Ordered action pairs never seen adjacent in any positive sample."""

    forbidden: frozenset[tuple[GroundAction, GroundAction]]

    def successors(self) -> dict[GroundAction, list[GroundAction]]:
        out: dict[GroundAction, list[GroundAction]] = {}
        for ai, aj in sorted(self.forbidden):
            out.setdefault(ai, []).append(aj)
        return out


def compute_pairwise_constraints(
    positives: Iterable[PositiveSample | Sequence[GroundAction]],
    actions: Sequence[GroundAction],
) -> PairwiseConstraints:
    seen = set()
    for sample in positives:
        seq = sample.actions if isinstance(sample, PositiveSample) else tuple(sample)
        seen.update(zip(seq, seq[1:]))
    return PairwiseConstraints(
        frozenset((ai, aj) for ai in actions for aj in actions if (ai, aj) not in seen)
    )


def extend_samples(
    ds: Dataset, pc: PairwiseConstraints
) -> tuple[list[tuple[GroundAction, ...]], list[tuple[GroundAction, ...]]]:
    """``(I+^P, I-^P)``: positives unchanged; negatives plus every positive
    prefix ending in ``a_i`` followed by each ``a_j`` forbidden after it."""
    positives = [s.actions for s in ds.positives]
    negatives = dict.fromkeys(n.actions for n in ds.negatives)
    succ = pc.successors()
    for seq in positives:
        for i in range(1, len(seq) + 1):
            prefix = seq[:i]
            for aj in succ.get(seq[i - 1], ()):
                negatives.setdefault((*prefix, aj))
    return positives, list(negatives)


# ---------------------------------------------------------------- text format

_ACTION_RE = re.compile(r"^([^()\s]+)\(([^()\s]*)\)$")


def format_action(a: GroundAction) -> str:
    return str(a)


def parse_action(token: str) -> tuple[str, tuple[str, ...]]:
    m = _ACTION_RE.match(token)
    if not m:
        raise ValueError(f"malformed action token {token!r}")
    args = tuple(x for x in m.group(2).split(",") if x)
    return m.group(1), args


def _format_obs(obs: Observation, universe: Sequence[Atom]) -> str:
    out = []
    for p in universe:
        v = obs[p]
        out.append(("?" if v is None else "+" if v else "-") + str(p))
    return " ".join(out)


def _parse_obs(text: str, atoms: dict[str, Atom]) -> Observation:
    values = {}
    for tok in text.split():
        sign, name = tok[0], tok[1:]
        if sign == "?":
            continue
        if sign not in "+-":
            raise ValueError(f"bad observation token {tok!r}")
        values[atoms[name]] = sign == "+"
    return Observation(values)


def _parse_atom(token: str) -> Atom:
    name, args = parse_action(token)
    return Atom(name, args)


def write_dataset(ds: Dataset, path: str | Path) -> tuple[Path, Path]:
    """Write ``<path>.txt`` (one record per line) and ``<path>.json`` (manifest)."""
    path = Path(path)
    txt, manifest = path.with_suffix(".txt"), path.with_suffix(".json")
    lines = [
        "S\t" + " ".join(map(str, ds.propositions)),
        "A\t" + " ".join(map(str, ds.actions)),
        "I\t" + " ".join(map(str, sorted(ds.initial_state))),
    ]
    for s in ds.positives:
        obs = "\t".join(_format_obs(o, ds.propositions) for o in s.observations)
        lines.append("+\t" + " ".join(map(str, s.actions)) + "\t" + obs)
    for n in ds.negatives:
        lines.append("-\t" + " ".join(map(str, n.actions)))
    txt.write_text("\n".join(lines) + "\n")
    cfg = ds.obs_config
    meta = {
        "format": 1,
        "seed": ds.seed,
        "obs_config": {"observe_fraction": cfg.observe_fraction, "noise_rate": cfg.noise_rate, "seed": cfg.seed},
        "counts": ds.stats(),
        "signature": serialize_domain(ds.signature) if ds.signature else None,
    }
    manifest.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return txt, manifest


def read_dataset(path: str | Path) -> Dataset:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    props: tuple[Atom, ...] = ()
    actions: tuple[GroundAction, ...] = ()
    init: frozenset[Atom] = frozenset()
    positives, negatives = [], []
    atoms: dict[str, Atom] = {}
    by_name: dict[str, GroundAction] = {}
    for raw in path.with_suffix(".txt").read_text().splitlines():
        if not raw:
            continue
        tag, _, rest = raw.partition("\t")
        if tag == "S":
            props = tuple(_parse_atom(t) for t in rest.split())
            atoms = {str(p): p for p in props}
        elif tag == "A":
            actions = tuple(GroundAction(*parse_action(t)) for t in rest.split())
            by_name = {str(a): a for a in actions}
        elif tag == "I":
            init = frozenset(_parse_atom(t) for t in rest.split())
        elif tag == "+":
            fields = rest.split("\t")
            seq = tuple(by_name[t] for t in fields[0].split())
            obs = tuple(_parse_obs(f, atoms) for f in fields[1:])
            positives.append(PositiveSample(seq, obs))
        elif tag == "-":
            negatives.append(NegativeSample(tuple(by_name[t] for t in rest.split())))
        else:
            raise ValueError(f"unknown record tag {tag!r}")
    cfg = ObservationConfig(**meta["obs_config"])
    signature = parse_domain(meta["signature"]) if meta.get("signature") else None
    return Dataset(tuple(positives), tuple(negatives), init, cfg, actions, props, signature, meta.get("seed"))
