"""Genetic algorithm over test suites with periodic fitness-function swaps.

Every generation the population is scored under the currently active action,
sorted, and rebuilt from elites, tournament-selected crossover children,
mutated suites, and a few fresh random suites. Every ``skip_iter`` generations
the strategy observes a reward and installs the next action. An archive keeps
the first (shortest) test covering each goal so coverage survives the churn;
the final suite is minimized against the goal set and then topped back up
from the archive.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field

from affsgen.affs import Action, Goal, RewardTracker, Strategy, feature_vector
from affsgen.fitness import FitnessContext, FitnessFunctionId, eval_fitness
from affsgen.minilang.interpreter import InterpConfig
from affsgen.minilang.nodes import Program
from affsgen.testmodel import (
    Archive,
    ExceptionGoal,
    GenConfig,
    GoalId,
    MethodGoal,
    MutantGoal,
    TestCase,
    TestSuite,
    augment_from_archive,
    crossover,
    goal_label,
    literal_pool,
    minimize,
    mutate_suite,
    random_suite,
    render_test,
)
from affsgen.mutation import MutantStatus


@dataclass(frozen=True, slots=True)
class Budget:
    generations: int | None = None
    seconds: float | None = None

    def __post_init__(self):
        if self.generations is None and self.seconds is None:
            raise ValueError("budget needs a generation count or a wall-clock limit")
        if self.generations is not None and self.generations <= 0:
            raise ValueError("generation budget must be positive")
        if self.seconds is not None and self.seconds <= 0:
            raise ValueError("wall-clock budget must be positive")


@dataclass(frozen=True, slots=True)
class EngineConfig:
    population_size: int = 50
    elite_count: int = 2
    crossover_rate: float = 0.75
    mutation_rate: float = 0.9
    fresh_random_per_gen: int = 2
    skip_iter: int = 3
    budget: Budget = Budget(generations=200)
    rng_seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population size must be at least 2")
        if self.skip_iter < 1:
            raise ValueError("skip_iter must be at least 1")
        for rate in (self.crossover_rate, self.mutation_rate):
            if not 0.0 <= rate <= 1.0:
                raise ValueError("rates must lie in [0, 1]")


@dataclass(slots=True)
class GenerationRecord:
    generation: int
    action_id: int
    action: str
    reward: float | None
    best_composite: float
    archive_size: int
    elapsed_ns: int


@dataclass(slots=True)
class SearchState:
    generation: int
    population: list[TestSuite]
    active_action: Action
    best_suite: TestSuite
    archive: Archive
    log: list[GenerationRecord] = field(default_factory=list)
    strategy_updates: int = 0
    best_composite: float = 0.0


@dataclass(slots=True)
class SearchResult:
    program_id: str
    goal: Goal
    strategy_name: str
    seed: int
    final_suite: TestSuite
    goals: set[GoalId]
    covered_goals: set[GoalId]
    log: list[GenerationRecord]
    metrics: dict
    generations: int
    strategy_updates: int
    rewards_logged: list[float]
    action_histogram: dict[int, int]

    def to_dict(self, omit_timing: bool = False) -> dict:
        """JSON-ready form; timing can be omitted for byte-stable comparison."""
        coverage = self.metrics.get("per_test_goals", {})
        tests = []
        for idx, test in enumerate(self.final_suite.tests):
            tests.append({
                "calls": [
                    {"function": c.function, "args": [test.resolve(a) for a in c.args]}
                    for c in test.calls
                ],
                "covered_goals": coverage.get(idx, []),
            })
        records = []
        for rec in self.log:
            row = {
                "generation": rec.generation,
                "action_id": rec.action_id,
                "action": rec.action,
                "reward": rec.reward,
                "best_composite": rec.best_composite,
                "archive_size": rec.archive_size,
            }
            if not omit_timing:
                row["elapsed_ns"] = rec.elapsed_ns
            records.append(row)
        metrics = {k: v for k, v in self.metrics.items() if k != "per_test_goals"}
        return {
            "program_id": self.program_id,
            "goal": self.goal.value,
            "strategy": self.strategy_name,
            "seed": self.seed,
            "goals": sorted(goal_label(g) for g in self.goals),
            "covered_goals": sorted(goal_label(g) for g in self.covered_goals),
            "tests": tests,
            "metrics": metrics,
            "generations": [self.generations, self.strategy_updates],
            "per_generation": records,
        }

    def to_json(self, omit_timing: bool = False) -> str:
        return json.dumps(self.to_dict(omit_timing=omit_timing), indent=2, sort_keys=True)


# --- goal coverage -----------------------------------------------------------


def make_coverage_fn(goal: Goal, ctx: FitnessContext):
    """Map a test case to the set of goal ids it covers (memoized per test)."""

    if goal is Goal.EXCEPTIONS:
        def compute(test: TestCase) -> set[GoalId]:
            return {ExceptionGoal(kind, fn) for kind, fn in ctx.trace(test).exceptions}
    elif goal is Goal.DIVERSITY:
        def compute(test: TestCase) -> set[GoalId]:
            return {MethodGoal(name) for name, _ in ctx.trace(test).functions_called}
    else:
        def compute(test: TestCase) -> set[GoalId]:
            trace = ctx.trace(test)
            covered: set[GoalId] = set()
            for mutant in ctx.mutants:
                if mutant.site not in trace.lines_hit:
                    continue
                if ctx.classify(mutant, test).status == MutantStatus.KILLED:
                    covered.add(MutantGoal(mutant.mutant_id))
            return covered

    cache: dict[TestCase, set[GoalId]] = {}

    def coverage(test: TestCase) -> set[GoalId]:
        covered = cache.get(test)
        if covered is None:
            covered = compute(test)
            cache[test] = covered
        return covered

    return coverage


def make_archive_updater(goal: Goal, ctx: FitnessContext, archive: Archive, coverage_fn):
    """Offer goal-covering tests to the archive, once per unique test.

    Classifying every population test against every mutant would dominate
    strong-mutation runs, so only goals missing from the archive are checked
    there; the spec scopes archive updates to not-yet-archived goals.
    """
    seen: set[TestCase] = set()

    if goal is Goal.STRONG_MUTATION:
        def update(tests) -> None:
            fresh = [t for t in tests if t not in seen]
            if not fresh:
                return
            seen.update(fresh)
            open_mutants = [m for m in ctx.mutants
                            if MutantGoal(m.mutant_id) not in archive.entries]
            for test in fresh:
                trace = ctx.trace(test)
                for mutant in open_mutants:
                    if mutant.site not in trace.lines_hit:
                        continue
                    if ctx.classify(mutant, test).status == MutantStatus.KILLED:
                        archive.offer(MutantGoal(mutant.mutant_id), test)
    else:
        def update(tests) -> None:
            for test in tests:
                if test in seen:
                    continue
                seen.add(test)
                for covered in coverage_fn(test):
                    archive.offer(covered, test)

    return update


def goal_universe(goal: Goal, ctx: FitnessContext) -> set[GoalId]:
    """All goals known so far; for exceptions this grows during the run."""
    if goal is Goal.EXCEPTIONS:
        return {ExceptionGoal(kind, fn) for kind, fn in ctx.discovered_exceptions}
    if goal is Goal.DIVERSITY:
        return {MethodGoal(name) for name in ctx.function_names}
    return {MutantGoal(m.mutant_id) for m in ctx.mutants}


def _subgoal_coverage(goal: Goal, suite: TestSuite, ctx: FitnessContext,
                      coverage_fn) -> float:
    universe = goal_universe(goal, ctx)
    if not universe:
        return 0.0
    covered: set[GoalId] = set()
    for test in suite.tests:
        covered |= coverage_fn(test)
    return len(covered & universe) / len(universe)


# --- the GA ---------------------------------------------------------------------


def _composite(suite: TestSuite, action: Action, ctx: FitnessContext) -> float:
    return sum(eval_fitness(fn, suite, ctx) for fn in action.functions)


def _tournament(rng: random.Random, size: int) -> int:
    a = rng.randrange(size)
    b = rng.randrange(size)
    return min(a, b)  # population is sorted by fitness, lower index wins


def evolve_one_generation(state: SearchState, program: Program, ctx: FitnessContext,
                          config: EngineConfig, gen_config: GenConfig,
                          rng: random.Random, archive_update, pool) -> SearchState:
    """Score, select, and rebuild the population; update archive and counters."""
    action = state.active_action
    scored = sorted(
        ((_composite(suite, action, ctx), idx, suite)
         for idx, suite in enumerate(state.population)),
        key=lambda triple: (triple[0], triple[1]),
    )
    ranked = [suite for _, _, suite in scored]
    state.best_suite = ranked[0]
    state.best_composite = scored[0][0]

    n_elites = min(config.elite_count, config.population_size)
    n_fresh = min(config.fresh_random_per_gen, config.population_size - n_elites)
    next_population: list[TestSuite] = [ranked[i].clone() for i in range(n_elites)]

    while len(next_population) < config.population_size - n_fresh:
        pa = ranked[_tournament(rng, len(ranked))]
        pb = ranked[_tournament(rng, len(ranked))]
        if rng.random() < config.crossover_rate and pa.tests and pb.tests:
            child_a, child_b = crossover(pa, pb, rng, gen_config)
        else:
            child_a, child_b = pa.clone(), pb.clone()
        for child in (child_a, child_b):
            if len(next_population) >= config.population_size - n_fresh:
                break
            if rng.random() < config.mutation_rate:
                child = mutate_suite(child, program, rng, gen_config, pool)
            next_population.append(child)

    for _ in range(n_fresh):
        next_population.append(random_suite(program, rng, gen_config, pool))

    # archive every goal-covering test seen in the scored population
    archive_update(test for suite in ranked for test in suite.tests)

    state.population = next_population
    state.generation += 1
    return state


def run_search(program: Program, goal: Goal, strategy: Strategy, config: EngineConfig,
               gen_config: GenConfig = GenConfig(),
               interp: InterpConfig = InterpConfig()) -> SearchResult:
    """Run one full search and return the finalized suite plus the run log."""
    rng = random.Random(config.rng_seed)
    ctx = FitnessContext(program, interp)
    pool = literal_pool(program)
    coverage_fn = make_coverage_fn(goal, ctx)

    population = [random_suite(program, rng, gen_config, pool)
                  for _ in range(config.population_size)]
    archive = Archive()
    archive_update = make_archive_updater(goal, ctx, archive, coverage_fn)

    space_size = len(getattr(strategy, "space", [])) if strategy.is_reinforcement else 0
    tracker = RewardTracker(goal, seeding_length=space_size)

    provisional_best = population[0]
    features = _features_for(strategy, provisional_best, ctx, goal, gen_config, coverage_fn)
    action = strategy.initial_action(features, rng)

    state = SearchState(
        generation=0,
        population=population,
        active_action=action,
        best_suite=provisional_best,
        archive=archive,
    )
    tracker.prime(provisional_best, ctx)

    rewards_logged: list[float] = []
    histogram: dict[int, int] = {}
    started = time.monotonic()
    tick = 0

    while True:
        if config.budget.generations is not None and state.generation >= config.budget.generations:
            break
        if config.budget.seconds is not None and time.monotonic() - started >= config.budget.seconds:
            break
        gen_started = time.perf_counter_ns()
        evolve_one_generation(state, program, ctx, config, gen_config, rng,
                              archive_update, pool)
        reward: float | None = None
        if state.generation % config.skip_iter == 0:
            reward = tracker.measure(state.best_suite, ctx, tick)
            features = _features_for(strategy, state.best_suite, ctx, goal,
                                     gen_config, coverage_fn)
            state.active_action = strategy.update_and_select(
                reward, features, state.generation, rng)
            state.strategy_updates += 1
            rewards_logged.append(reward)
            tick += 1
        histogram[state.active_action.action_id] = \
            histogram.get(state.active_action.action_id, 0) + 1
        state.log.append(GenerationRecord(
            generation=state.generation,
            action_id=state.active_action.action_id,
            action=state.active_action.label(),
            reward=reward,
            best_composite=state.best_composite,
            archive_size=len(state.archive),
            elapsed_ns=time.perf_counter_ns() - gen_started,
        ))

    goals = goal_universe(goal, ctx)
    minimized = minimize(state.best_suite, goals, coverage_fn)
    final = augment_from_archive(minimized, state.archive, goals, coverage_fn)

    covered: set[GoalId] = set()
    per_test_goals: dict[int, list[str]] = {}
    for idx, test in enumerate(final.tests):
        test_goals = coverage_fn(test) & goals
        covered |= test_goals
        per_test_goals[idx] = sorted(goal_label(g) for g in test_goals)

    metrics = _final_metrics(goal, final, ctx, covered, goals)
    metrics["per_test_goals"] = per_test_goals

    return SearchResult(
        program_id=program.source_id,
        goal=goal,
        strategy_name=strategy.name,
        seed=config.rng_seed,
        final_suite=final,
        goals=goals,
        covered_goals=covered,
        log=state.log,
        metrics=metrics,
        generations=state.generation,
        strategy_updates=state.strategy_updates,
        rewards_logged=rewards_logged,
        action_histogram=histogram,
    )


def _features_for(strategy: Strategy, best: TestSuite, ctx: FitnessContext, goal: Goal,
                  gen_config: GenConfig, coverage_fn) -> dict[int, tuple[float, ...]]:
    """Per-action feature vectors of the current best suite (RL strategies only)."""
    space = getattr(strategy, "space", None)
    if not strategy.is_reinforcement or space is None:
        return {}
    subgoals = _subgoal_coverage(goal, best, ctx, coverage_fn)
    size = len(best.tests)
    features = {}
    for action in space:
        mean = _composite(best, action, ctx) / len(action.functions)
        features[action.action_id] = feature_vector(
            action, mean, size, gen_config.max_suite_size, subgoals)
    return features


def _final_metrics(goal: Goal, final: TestSuite, ctx: FitnessContext,
                   covered: set[GoalId], goals: set[GoalId]) -> dict:
    from affsgen.fitness import suite_diversity

    suite_exceptions: set[tuple[str, str]] = set()
    for test in final.tests:
        suite_exceptions |= ctx.trace(test).exceptions
    rendered = [render_test(t) for t in final.tests]
    metrics: dict = {
        "suite_size": len(final.tests),
        "rendered_chars": sum(len(r) for r in rendered),
        "exceptions_discovered": len(ctx.discovered_exceptions),
        "suite_exceptions": len(suite_exceptions),
        "goals_total": len(goals),
        "goals_covered": len(covered),
    }
    if goal is Goal.DIVERSITY:
        div, fit = suite_diversity(final, ctx)
        metrics["diversity"] = div
        metrics["diversity_fitness"] = fit
    if goal is Goal.STRONG_MUTATION:
        metrics["mutants"] = len(ctx.mutants)
        metrics["weak_mutation_score"] = ctx.mutation_score(final, "weak")
        metrics["strong_mutation_score"] = ctx.mutation_score(final, "strong")
    return metrics
