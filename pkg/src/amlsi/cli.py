"""Command-line entry point: ``amlsi <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from dataclasses import asdict
from pathlib import Path

from .benchmarks import BENCHMARKS, load_benchmark
from .dataset import generate, read_dataset, write_dataset
from .evaluation import evaluate, format_plan, generate_problems, plan, sample_traces
from .experiment import (
    FORMATS,
    ExperimentConfig,
    emit_report,
    render_ablation,
    run_ablation,
    run_experiment,
)
from .grammar import export_dfa
from .learner import VARIANTS, LearnConfig, learn
from .oracle import ObservationConfig, Oracle
from .pddl import parse_domain, parse_problem, serialize_domain


def _load(domain: str, problems: list[str] | None):
    if not problems:
        if domain not in BENCHMARKS:
            raise SystemExit(f"--problems is required unless --domain is one of {', '.join(BENCHMARKS)}")
        return load_benchmark(domain)
    return parse_domain(Path(domain).read_text()), [parse_problem(Path(p).read_text()) for p in problems]


def _config(args) -> ExperimentConfig:
    if args.config:
        data = json.loads(Path(args.config).read_text())
    else:
        data = {}
    overrides = {
        "domain": args.domain,
        "problem_files": args.problems,
        "noise_rate": args.noise,
        "observe_fraction": args.observe,
        "seeds": args.seed,
        "variant": getattr(args, "variant", None),
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if "domain" not in data:
        raise SystemExit("--domain or a config file naming one is required")
    return ExperimentConfig.from_dict(data)


def cmd_generate(args) -> None:
    truth, problems = _load(args.domain, args.problems)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for problem in problems:
        for seed in args.seed or [1]:
            oracle = Oracle.from_pddl(truth, problem)
            cfg = ObservationConfig(
                1.0 if args.observe is None else args.observe, 0.0 if args.noise is None else args.noise, seed
            )
            ds = generate(oracle, oracle.initial_state, args.n_pos, (args.min_len, args.max_len), random.Random(seed), cfg)
            txt, _ = write_dataset(ds, out / f"{problem.name}-s{seed}")
            print(txt)


def cmd_learn(args) -> None:
    ds = read_dataset(args.dataset)
    signature = parse_domain(Path(args.domain).read_text()) if args.domain else None
    result = learn(ds, LearnConfig(args.variant, args.tabu_iterations), signature)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "domain.pddl").write_text(serialize_domain(result.domain))
    (out / "automaton.txt").write_text(export_dfa(result.dfa))
    with open(out / "trace.jsonl", "w") as fh:
        for entry in result.trace:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    print(out / "domain.pddl")


def cmd_evaluate(args) -> None:
    truth, problems = _load(args.domain, args.problems)
    learned = parse_domain(Path(args.learned).read_text())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    seed = (args.seed or [1])[0]
    rows = []
    for i, base in enumerate(problems):
        oracle = Oracle.from_pddl(truth, base)
        traces, _ = sample_traces(oracle, 100, (1, 100), random.Random(f"{seed}:{i}:test"))
        tests = generate_problems(truth, base, args.n_problems, random.Random(f"{seed}:{i}:problems"))
        report = evaluate(learned, truth, traces, tests, args.timeout)
        rows.append({"problem": base.name, **asdict(report)})
        plans = out / f"{base.name}-plans"
        plans.mkdir(exist_ok=True)
        for t in tests:
            r = plan(learned, t, args.timeout)
            if r.solved:
                (plans / f"{t.name}.plan").write_text(format_plan(r.plan))
        print(f"{base.name}: {report.csv_row()}")
    (out / "metrics.json").write_text(json.dumps(rows, indent=2, sort_keys=True) + "\n")


def cmd_experiment(args) -> None:
    cfg = _config(args)
    report = run_experiment(cfg)
    for path in emit_report(report, args.out, args.format):
        print(path)
    print(f"finished in {report.wall_clock:.1f}s", file=sys.stderr)


def cmd_ablation(args) -> None:
    cfg = _config(args)
    reports = run_ablation(cfg, args.variants or VARIANTS)
    out = Path(args.out)
    for variant, report in reports.items():
        emit_report(report, out, args.format, stem=f"report-{variant}")
    (out / "ablation.md").write_text(render_ablation(reports))
    print(out / "ablation.md")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="amlsi", description="Learn PDDL action models from action sequences and observations.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config: bool = False):
        sp.add_argument("--domain", help=f"PDDL domain file or one of: {', '.join(BENCHMARKS)}")
        sp.add_argument("--problems", nargs="+", help="PDDL problem files (initial states)")
        sp.add_argument("--noise", type=float, help="probability of flipping an observed value")
        sp.add_argument("--observe", type=float, help="probability of observing a proposition")
        sp.add_argument("--seed", type=int, nargs="+", help="one or more seeds")
        sp.add_argument("--out", required=True, help="output directory")
        if config:
            sp.add_argument("--config", help="JSON experiment configuration")
            sp.add_argument("--format", nargs="+", default=list(FORMATS), choices=FORMATS)

    g = sub.add_parser("generate", help="write training datasets")
    common(g)
    g.add_argument("--n-pos", type=int, default=30)
    g.add_argument("--min-len", type=int, default=10)
    g.add_argument("--max-len", type=int, default=20)
    g.set_defaults(func=cmd_generate)

    l = sub.add_parser("learn", help="learn a domain from a dataset")
    l.add_argument("--dataset", required=True, help="dataset path (without .txt/.json)")
    l.add_argument("--domain", help="PDDL file giving operator signatures (default: the dataset's)")
    l.add_argument("--variant", choices=VARIANTS, default="full")
    l.add_argument("--tabu-iterations", type=int, default=200)
    l.add_argument("--out", required=True)
    l.set_defaults(func=cmd_learn)

    e = sub.add_parser("evaluate", help="score a learned domain against the true one")
    common(e)
    e.add_argument("--learned", required=True, help="learned PDDL domain")
    e.add_argument("--n-problems", type=int, default=20)
    e.add_argument("--timeout", type=float, default=60.0)
    e.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("experiment", help="run a seed x initial-state grid")
    common(x, config=True)
    x.add_argument("--variant", choices=VARIANTS)
    x.set_defaults(func=cmd_experiment)

    a = sub.add_parser("ablation", help="run the grid for every variant")
    common(a, config=True)
    a.add_argument("--variants", nargs="+", choices=VARIANTS)
    a.set_defaults(func=cmd_ablation)
    return p


def main(argv: list[str] | None = None) -> None:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args.func(args)


if __name__ == "__main__":
    main()
