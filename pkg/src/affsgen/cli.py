"""Command-line interface: generate one suite, run an experiment, print a report.

Exit codes: 0 success, 1 configuration error, 2 corpus/input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from affsgen.affs import Goal, load_pinned_space, make_strategy
from affsgen.engine import Budget, EngineConfig, run_search
from affsgen.harness import (
    ConfigError,
    CorpusError,
    ExperimentConfig,
    format_report,
    run_experiment,
)
from affsgen.minilang.interpreter import InterpConfig
from affsgen.minilang.parser import ParseError, parse
from affsgen.testmodel import GenConfig

GOALS = {g.value: g for g in Goal}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affsgen",
        description="Search-based test generation for MiniJ programs with "
                    "adaptive fitness function selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a test suite for one program")
    gen.add_argument("--program", required=True, help="path to a .minij file")
    gen.add_argument("--goal", required=True, choices=sorted(GOALS))
    gen.add_argument("--strategy", required=True,
                     help="ucb | sarsa | static:<fn> | default | random")
    gen.add_argument("--budget-gens", type=int, default=None)
    gen.add_argument("--budget-seconds", type=float, default=None)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output suite JSON path")
    gen.add_argument("--action-space", default=None,
                     help="optional pin file for the action space")

    exp = sub.add_parser("experiment", help="run a strategies x faults x trials sweep")
    exp.add_argument("--config", required=True, help="experiment config JSON")
    exp.add_argument("--out", required=True, help="output directory")

    rep = sub.add_parser("report", help="print tables from experiment output")
    rep.add_argument("--in", dest="in_dir", required=True, help="experiment output dir")
    return parser


def _cmd_generate(args) -> int:
    goal = GOALS[args.goal]
    if args.budget_gens is None and args.budget_seconds is None:
        print("error: provide --budget-gens and/or --budget-seconds", file=sys.stderr)
        return 1
    try:
        budget = Budget(generations=args.budget_gens, seconds=args.budget_seconds)
        space = load_pinned_space(goal, args.action_space) if args.action_space else None
        strategy = make_strategy(args.strategy, goal, space=space)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    try:
        source = Path(args.program).read_text(encoding="utf-8")
        program = parse(source, source_id=Path(args.program).stem)
    except (OSError, ParseError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    config = EngineConfig(budget=budget, rng_seed=args.seed)
    result = run_search(program, goal, strategy, config, GenConfig(), InterpConfig())
    Path(args.out).write_text(result.to_json(), encoding="utf-8")
    metrics = {k: v for k, v in result.metrics.items() if k != "per_test_goals"}
    print(f"wrote {args.out}: {len(result.final_suite.tests)} tests, "
          f"{result.generations} generations, metrics {json.dumps(metrics, sort_keys=True)}")
    return 0


def _experiment_config(path: str) -> ExperimentConfig:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    goal_name = raw.get("goal")
    if goal_name not in GOALS:
        raise ConfigError(f"unknown goal {goal_name!r}; expected one of {sorted(GOALS)}")
    engine_raw = dict(raw.get("engine", {}))
    budget_raw = engine_raw.pop("budget", {"generations": 200})
    engine = EngineConfig(budget=Budget(**budget_raw), **engine_raw)
    return ExperimentConfig(
        goal=GOALS[goal_name],
        strategies=list(raw.get("strategies", [])),
        trials_per_fault=int(raw.get("trials_per_fault", 10)),
        corpus_path=raw.get("corpus", "corpus"),
        master_seed=int(raw.get("master_seed", 2024)),
        engine=engine,
        generation=GenConfig(**raw.get("generation", {})),
        interp=InterpConfig(**raw.get("interp", {})),
        workers=int(raw.get("workers", 1)),
    )


def _cmd_experiment(args) -> int:
    try:
        cfg = _experiment_config(args.config)
    except (ConfigError, ValueError, TypeError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    try:
        summary = run_experiment(cfg, args.out)
    except CorpusError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(format_report(summary))
    print(f"\nwrote trials.csv, summary.json, actions.csv under {args.out}")
    return 0


def _cmd_report(args) -> int:
    summary_path = Path(args.in_dir) / "summary.json"
    try:
        summary = json.loads(summary_path.read_text(encoding="utf-8"))
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(format_report(summary))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "generate":
        return _cmd_generate(args)
    if args.command == "experiment":
        return _cmd_experiment(args)
    return _cmd_report(args)


if __name__ == "__main__":
    sys.exit(main())
