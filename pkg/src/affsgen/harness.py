"""Experiment harness: corpus management, trials, statistics, and reports.

An experiment sweeps strategies x fault pairs x trials. Suites are generated
against the fixed version of each pair; a fault counts as detected when any
generated test behaves differently on the faulty version. Every trial gets a
seed derived from (master seed, fault, strategy, trial), so reruns reproduce
the same rows byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from affsgen.affs import Goal, make_strategy
from affsgen.engine import Budget, EngineConfig, SearchResult, run_search
from affsgen.fitness import FitnessContext
from affsgen.minilang.interpreter import InterpConfig
from affsgen.minilang.nodes import Program
from affsgen.minilang.parser import ParseError, parse
from affsgen.testmodel import GenConfig, TestSuite
from affsgen.tracing import behavior_signature


class CorpusError(ValueError):
    """A fault pair failed to load or validate."""


class ConfigError(ValueError):
    """An experiment configuration is unusable."""


@dataclass(frozen=True, slots=True)
class FaultPair:
    fault_id: str
    fixed_program: Program
    faulty_program: Program
    description: str


def load_corpus(path) -> list[FaultPair]:
    """Load every fault pair under a corpus directory, sorted by id."""
    root = Path(path)
    if not root.is_dir():
        raise CorpusError(f"corpus directory {root} does not exist")
    pairs = []
    for entry in sorted(root.iterdir()):
        if not entry.is_dir():
            continue
        manifest = entry / "manifest.json"
        fixed = entry / "fixed.minij"
        faulty = entry / "faulty.minij"
        if not manifest.exists():
            continue  # not a fault-pair directory
        for required in (fixed, faulty):
            if not required.exists():
                raise CorpusError(f"{entry.name}: missing {required.name}")
        try:
            meta = json.loads(manifest.read_text(encoding="utf-8"))
        except json.JSONDecodeError as err:
            raise CorpusError(f"{entry.name}: bad manifest: {err}") from err
        fixed_text = fixed.read_text(encoding="utf-8")
        faulty_text = faulty.read_text(encoding="utf-8")
        if fixed_text == faulty_text:
            raise CorpusError(f"{entry.name}: fixed and faulty versions are identical")
        try:
            fixed_program = parse(fixed_text, source_id=entry.name)
            faulty_program = parse(faulty_text, source_id=f"{entry.name}:faulty")
        except ParseError as err:
            raise CorpusError(f"{entry.name}: {err}") from err
        if fixed_program.signature() != faulty_program.signature():
            raise CorpusError(f"{entry.name}: fixed and faulty signatures differ")
        pairs.append(FaultPair(
            fault_id=entry.name,
            fixed_program=fixed_program,
            faulty_program=faulty_program,
            description=str(meta.get("description", "")),
        ))
    return pairs


def fault_detected(suite: TestSuite, pair: FaultPair,
                   interp: InterpConfig = InterpConfig()) -> bool:
    """True when any test behaves differently on the faulty version."""
    for test in suite.tests:
        fixed = behavior_signature(pair.fixed_program, test, interp)
        faulty = behavior_signature(pair.faulty_program, test, interp)
        if fixed != faulty:
            return True
    return False


# --- metrics -------------------------------------------------------------------


@dataclass(slots=True)
class TrialRecord:
    fault_id: str
    strategy: str
    trial_index: int
    seed: int
    goal_metric: float
    normalized_goal_metric: float | None
    fault_detected: bool
    generations_completed: int
    mean_seconds_per_generation: float
    suite_size: int
    rendered_chars: int
    action_histogram: dict[int, int]
    error: str = ""


def normalize_goal_metric(records: list[TrialRecord]) -> list[TrialRecord]:
    """Scale one fault's raw metrics by the maximum over its trials.

    An all-zero fault normalizes to 0 for every trial.
    """
    if not records:
        raise ValueError("no records to normalize")
    peak = max(r.goal_metric for r in records)
    for record in records:
        record.normalized_goal_metric = (record.goal_metric / peak) if peak > 0 else 0.0
    return records


def vargha_delaney_a(xs, ys) -> float:
    """Probability (with tie credit) that a draw from xs exceeds one from ys."""
    if not xs or not ys:
        raise ValueError("effect size requires nonempty samples")
    wins = ties = 0
    for x in xs:
        for y in ys:
            if x > y:
                wins += 1
            elif x == y:
                ties += 1
    return (wins + 0.5 * ties) / (len(xs) * len(ys))


# --- experiment orchestration ------------------------------------------------------


@dataclass(slots=True)
class ExperimentConfig:
    goal: Goal
    strategies: list[str]
    trials_per_fault: int = 10
    corpus_path: str = "corpus"
    master_seed: int = 2024
    engine: EngineConfig = field(default_factory=EngineConfig)
    generation: GenConfig = field(default_factory=GenConfig)
    interp: InterpConfig = field(default_factory=InterpConfig)
    workers: int = 1

    def __post_init__(self):
        if self.trials_per_fault < 1:
            raise ConfigError("trials_per_fault must be at least 1")
        if not self.strategies:
            raise ConfigError("at least one strategy is required")


def derive_seed(master_seed: int, fault_id: str, strategy: str, trial: int) -> int:
    """Stable per-trial seed from the identifying coordinates."""
    text = f"{master_seed}|{fault_id}|{strategy}|{trial}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(text).digest()[:8], "big")


def run_trial(pair: FaultPair, strategy_spec: str, goal: Goal, seed: int,
              engine: EngineConfig, gen_config: GenConfig,
              interp: InterpConfig) -> tuple[SearchResult, TrialRecord]:
    strategy = make_strategy(strategy_spec, goal)
    config = EngineConfig(
        population_size=engine.population_size,
        elite_count=engine.elite_count,
        crossover_rate=engine.crossover_rate,
        mutation_rate=engine.mutation_rate,
        fresh_random_per_gen=engine.fresh_random_per_gen,
        skip_iter=engine.skip_iter,
        budget=engine.budget,
        rng_seed=seed,
    )
    result = run_search(pair.fixed_program, goal, strategy, config, gen_config, interp)
    detected = fault_detected(result.final_suite, pair, interp)
    elapsed = sum(rec.elapsed_ns for rec in result.log)
    mean_seconds = (elapsed / result.generations / 1e9) if result.generations else 0.0
    record = TrialRecord(
        fault_id=pair.fault_id,
        strategy=strategy_spec,
        trial_index=-1,
        seed=seed,
        goal_metric=_goal_metric(goal, result),
        normalized_goal_metric=None,
        fault_detected=detected,
        generations_completed=result.generations,
        mean_seconds_per_generation=mean_seconds,
        suite_size=result.metrics["suite_size"],
        rendered_chars=result.metrics["rendered_chars"],
        action_histogram=dict(result.action_histogram),
    )
    return result, record


def _goal_metric(goal: Goal, result: SearchResult) -> float:
    if goal is Goal.EXCEPTIONS:
        return float(result.metrics["exceptions_discovered"])
    if goal is Goal.DIVERSITY:
        return float(result.metrics["diversity_fitness"])
    return float(result.metrics["strong_mutation_score"])


def _trial_job(args) -> dict:
    (corpus_path, fault_id, strategy_spec, goal_value, seed,
     engine, gen_config, interp) = args
    pairs = {p.fault_id: p for p in load_corpus(corpus_path)}
    pair = pairs[fault_id]
    goal = Goal(goal_value)
    try:
        _, record = run_trial(pair, strategy_spec, goal, seed, engine, gen_config, interp)
        return asdict(record)
    except Exception as err:  # recorded per-trial, never aborts the sweep
        return {
            "fault_id": fault_id,
            "strategy": strategy_spec,
            "trial_index": -1,
            "seed": seed,
            "goal_metric": 0.0,
            "normalized_goal_metric": None,
            "fault_detected": False,
            "generations_completed": 0,
            "mean_seconds_per_generation": 0.0,
            "suite_size": 0,
            "rendered_chars": 0,
            "action_histogram": {},
            "error": f"{type(err).__name__}: {err}",
        }


def run_experiment(cfg: ExperimentConfig, out_dir) -> dict:
    """Run the full sweep and write trials.csv, summary.json, and actions.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pairs = load_corpus(cfg.corpus_path)
    if not pairs:
        raise CorpusError(f"no fault pairs found under {cfg.corpus_path}")

    jobs = []
    for pair in pairs:
        for strategy in cfg.strategies:
            for trial in range(cfg.trials_per_fault):
                seed = derive_seed(cfg.master_seed, pair.fault_id, strategy, trial)
                jobs.append((pair.fault_id, strategy, trial, seed))

    job_args = [
        (cfg.corpus_path, fault_id, strategy, cfg.goal.value, seed,
         cfg.engine, cfg.generation, cfg.interp)
        for fault_id, strategy, trial, seed in jobs
    ]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            raw_records = list(pool.map(_trial_job, job_args, chunksize=1))
    else:
        raw_records = [_trial_job(args) for args in job_args]

    records: list[TrialRecord] = []
    for (fault_id, strategy, trial, seed), raw in zip(jobs, raw_records):
        raw["trial_index"] = trial
        records.append(TrialRecord(**raw))

    # normalization is per fault, across every strategy and trial
    by_fault: dict[str, list[TrialRecord]] = {}
    for record in records:
        by_fault.setdefault(record.fault_id, []).append(record)
    for fault_records in by_fault.values():
        normalize_goal_metric(fault_records)

    records.sort(key=lambda r: (r.fault_id, r.strategy, r.trial_index))
    _write_trials_csv(out / "trials.csv", records)
    summary = _summarize(cfg, records)
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")
    _write_actions_csv(out / "actions.csv", records)
    return summary


_TRIAL_COLUMNS = (
    "fault_id", "strategy", "trial_index", "seed", "goal_metric",
    "normalized_goal_metric", "fault_detected", "generations_completed",
    "mean_seconds_per_generation", "suite_size", "rendered_chars",
    "action_histogram", "error",
)


def _write_trials_csv(path: Path, records: list[TrialRecord]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_TRIAL_COLUMNS)
        for r in records:
            writer.writerow([
                r.fault_id, r.strategy, r.trial_index, r.seed,
                repr(r.goal_metric), repr(r.normalized_goal_metric),
                int(r.fault_detected), r.generations_completed,
                repr(r.mean_seconds_per_generation), r.suite_size,
                r.rendered_chars,
                json.dumps(r.action_histogram, sort_keys=True), r.error,
            ])


def _write_actions_csv(path: Path, records: list[TrialRecord]) -> None:
    totals: dict[tuple[str, int], int] = {}
    for r in records:
        for action_id, count in r.action_histogram.items():
            key = (r.strategy, int(action_id))
            totals[key] = totals.get(key, 0) + count
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "action_id", "generations"])
        ranked = sorted(totals.items(), key=lambda kv: (kv[0][0], -kv[1], kv[0][1]))
        for (strategy, action_id), count in ranked:
            writer.writerow([strategy, action_id, count])


def _oriented(goal: Goal, values: list[float]) -> list[float]:
    # diversity fitness is lower-better; flip it so > 0.5 means "row wins"
    if goal is Goal.DIVERSITY:
        return [-v for v in values]
    return [v for v in values]


def _summarize(cfg: ExperimentConfig, records: list[TrialRecord]) -> dict:
    strategies = list(dict.fromkeys(r.strategy for r in records))
    per_strategy = {}
    samples: dict[str, list[float]] = {}
    for strategy in strategies:
        rows = [r for r in records if r.strategy == strategy and not r.error]
        if not rows:
            per_strategy[strategy] = {"trials": 0}
            samples[strategy] = []
            continue
        normalized = [r.normalized_goal_metric for r in rows]
        per_strategy[strategy] = {
            "trials": len(rows),
            "median_goal_metric": statistics.median(r.goal_metric for r in rows),
            "median_normalized_goal_metric": statistics.median(normalized),
            "fault_detection_rate": sum(r.fault_detected for r in rows) / len(rows),
            "median_seconds_per_generation": statistics.median(
                r.mean_seconds_per_generation for r in rows),
            "mean_suite_size": statistics.fmean(r.suite_size for r in rows),
            "mean_rendered_chars": statistics.fmean(r.rendered_chars for r in rows),
            "errors": sum(1 for r in records if r.strategy == strategy and r.error),
        }
        samples[strategy] = normalized
    matrix: dict[str, dict[str, float]] = {}
    for row in strategies:
        matrix[row] = {}
        for col in strategies:
            if row == col or not samples[row] or not samples[col]:
                continue
            matrix[row][col] = vargha_delaney_a(
                _oriented(cfg.goal, samples[row]), _oriented(cfg.goal, samples[col]))
    return {
        "goal": cfg.goal.value,
        "trials_per_fault": cfg.trials_per_fault,
        "master_seed": cfg.master_seed,
        "strategies": per_strategy,
        "vargha_delaney": matrix,
        "metadata": {
            "normalization": (
                "per fault: raw / max(raw over all trials and strategies); "
                "applied to every goal for cross-fault comparability, not just "
                "exception counts"
            ),
            "effect_size_orientation": (
                "A > 0.5 means the row strategy attains better goal values "
                "than the column strategy (diversity fitness is flipped, "
                "since lower is better there)"
            ),
            "thresholds": {"large": 0.80, "medium": 0.70},
        },
    }


def format_report(summary: dict) -> str:
    """Plain-text medians table and effect-size matrix for the CLI."""
    lines = [f"goal: {summary['goal']}", ""]
    strategies = list(summary["strategies"])
    lines.append(f"{'strategy':<24}{'median(norm)':>14}{'faults%':>10}"
                 f"{'s/gen':>10}{'size':>8}")
    for name in strategies:
        row = summary["strategies"][name]
        if row.get("trials", 0) == 0:
            lines.append(f"{name:<24}{'-':>14}{'-':>10}{'-':>10}{'-':>8}")
            continue
        lines.append(
            f"{name:<24}"
            f"{row['median_normalized_goal_metric']:>14.3f}"
            f"{100 * row['fault_detection_rate']:>9.1f}%"
            f"{row['median_seconds_per_generation']:>10.4f}"
            f"{row['mean_suite_size']:>8.1f}"
        )
    lines.append("")
    lines.append("Vargha-Delaney A (row vs column; > 0.5 favors row; "
                 "large >= 0.80, medium >= 0.70):")
    header = f"{'':<24}" + "".join(f"{s[:12]:>14}" for s in strategies)
    lines.append(header)
    for row_name in strategies:
        cells = []
        for col_name in strategies:
            value = summary["vargha_delaney"].get(row_name, {}).get(col_name)
            cells.append(f"{value:>14.3f}" if value is not None else f"{'-':>14}")
        lines.append(f"{row_name:<24}" + "".join(cells))
    return "\n".join(lines)
