"""The ten suite-level fitness functions, all normalized to [0,1], lower better.

The composite the search minimizes is the plain sum of the active functions'
scores; it deliberately is not a Pareto combination, so a large improvement
on one function can outweigh losses on others.
"""

from __future__ import annotations

import enum
import math
from typing import Iterable

from affsgen.minilang.interpreter import InterpConfig
from affsgen.minilang.nodes import (
    Binary,
    BoolLit,
    Call,
    FunctionDef,
    Index,
    IntLit,
    Len,
    Program,
    Return,
    StrLit,
    Unary,
    Var,
    walk_statements,
)
from affsgen.mutation import (
    Mutant,
    MutantOutcome,
    MutantStatus,
    classify_against_mutant,
    generate_mutants,
    mutation_score,
)
from affsgen.testmodel import TestCase, TestSuite, render_test
from affsgen.tracing import TestTrace, run_test

INF = math.inf


class FitnessFunctionId(enum.IntEnum):
    """Stable ordinals; feature vectors and reports rely on this order."""

    EX = 0
    BRANCH = 1
    DIRECT_BRANCH = 2
    LINE = 3
    METHOD = 4
    MNEC = 5
    OUTPUT = 6
    WEAK_MUT = 7
    STRONG_MUT = 8
    DIVERSITY = 9


FN_NAMES = {f: f.name.lower() for f in FitnessFunctionId}
FN_BY_NAME = {name: f for f, name in FN_NAMES.items()}


def nu(x: float) -> float:
    """Normalization x / (x + 1), with nu(inf) == 1."""
    if x == INF:
        return 1.0
    return x / (x + 1.0)


# --- output-coverage buckets -------------------------------------------------

_INT_BUCKETS = ("negative", "zero", "positive")
_BOOL_BUCKETS = ("true", "false")
_STR_BUCKETS = ("empty", "nonempty")


def _infer_return_kinds(program: Program) -> dict[str, set[str]]:
    """Fixpoint inference of the kinds each function's returns can produce.

    A function with no return statement (or one that can fall off the end)
    yields int 0, so int is included for those.
    """

    kinds: dict[str, set[str]] = {fn.name: set() for fn in program.functions}

    def expr_kind(expr, fn: FunctionDef) -> set[str]:
        if isinstance(expr, IntLit):
            return {"int"}
        if isinstance(expr, BoolLit):
            return {"bool"}
        if isinstance(expr, StrLit):
            return {"str"}
        if isinstance(expr, Var):
            for pname, pkind in fn.params:
                if pname == expr.name:
                    return {pkind}
            return {"int", "bool", "str"}  # local; not tracked statically
        if isinstance(expr, Len):
            return {"int"}
        if isinstance(expr, Index):
            return {"str"}
        if isinstance(expr, Unary):
            return {"int"} if expr.op == "neg" else {"bool"}
        if isinstance(expr, Binary):
            if expr.op in ("and", "or") or expr.op in ("==", "!=", "<", "<=", ">", ">="):
                return {"bool"}
            if expr.op == "+":
                sub = expr_kind(expr.lhs, fn) | expr_kind(expr.rhs, fn)
                return sub & {"int", "str"} or {"int"}
            return {"int"}
        if isinstance(expr, Call):
            return set(kinds.get(expr.name, set()))
        return {"int"}

    changed = True
    while changed:
        changed = False
        for fn in program.functions:
            inferred: set[str] = set()
            for stmt in walk_statements(fn.body):
                if isinstance(stmt, Return):
                    inferred |= expr_kind(stmt.expr, fn)
            ends_with_return = bool(fn.body) and isinstance(fn.body[-1], Return)
            if not ends_with_return:
                inferred.add("int")  # may fall off the end, which yields 0
            if inferred - kinds[fn.name]:
                kinds[fn.name] |= inferred
                changed = True
    return kinds


def output_buckets(program: Program) -> list[tuple[str, str]]:
    """(function, abstract value) pairs the suite should cover."""
    buckets: list[tuple[str, str]] = []
    for fname, kinds in sorted(_infer_return_kinds(program).items()):
        for kind in sorted(kinds):
            names = {"int": _INT_BUCKETS, "bool": _BOOL_BUCKETS, "str": _STR_BUCKETS}[kind]
            buckets.extend((fname, b) for b in names)
    return buckets


def _bucket_of(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return "negative" if value < 0 else ("zero" if value == 0 else "positive")
    return "empty" if value == "" else "nonempty"


def _int_bucket_distance(bucket: str, values: Iterable[int]) -> float:
    best = INF
    for v in values:
        if bucket == "negative":
            d = float(v + 1) if v >= 0 else 0.0
        elif bucket == "zero":
            d = float(abs(v))
        else:
            d = float(1 - v) if v <= 0 else 0.0
        best = min(best, d)
    return best


# --- levenshtein and diversity -----------------------------------------------


def levenshtein(a: str, b: str) -> int:
    """Classic dynamic-programming edit distance (insert/delete/substitute).

    A shared prefix and suffix never contribute edits, so they are stripped
    before filling the matrix; rendered test lines mostly differ only in
    their argument lists, which makes this a large constant-factor win.
    """
    if a == b:
        return 0
    la, lb = len(a), len(b)
    start = 0
    limit = min(la, lb)
    while start < limit and a[start] == b[start]:
        start += 1
    end = 0
    while end < limit - start and a[la - 1 - end] == b[lb - 1 - end]:
        end += 1
    a = a[start: la - end]
    b = b[start: lb - end]
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(a) < len(b):
        a, b = b, a
    width = len(b) + 1
    previous = list(range(width))
    current = [0] * width
    for i, ca in enumerate(a, start=1):
        current[0] = i
        diag = i - 1  # previous[0] of this row
        left = i
        for j, cb in enumerate(b, start=1):
            up = previous[j]
            best = diag if ca == cb else diag + 1
            if up + 1 < best:
                best = up + 1
            if left + 1 < best:
                best = left + 1
            current[j] = best
            diag = up
            left = best
        previous, current = current, previous
    return previous[width - 1]


# --- evaluation context --------------------------------------------------------


class FitnessContext:
    """Program-wide caches shared by every fitness evaluation in a run.

    Traces, renderings, pairwise test distances, and mutant classifications
    are memoized for the lifetime of a search run; test cases are value-like,
    so cached results stay valid.
    """

    def __init__(self, program: Program, interp: InterpConfig = InterpConfig()):
        self.program = program
        self.interp = interp
        self.total_lines = program.line_count
        self.total_branches = program.branch_count
        self.function_names = tuple(program.function_names)
        self.buckets = output_buckets(program)
        self.discovered_exceptions: set[tuple[str, str]] = set()
        self._mutants: list[Mutant] | None = None
        self._traces: dict[TestCase, TestTrace] = {}
        self._renders: dict[TestCase, tuple[str, ...]] = {}
        self._classifications: dict[tuple[int, TestCase], MutantOutcome] = {}
        self._pair_distance: dict[tuple[TestCase, TestCase], int] = {}
        self._line_distance: dict[tuple[str, str], int] = {}
        self._suite_scores: dict[tuple[FitnessFunctionId, tuple[TestCase, ...]], float] = {}

    @property
    def mutants(self) -> list[Mutant]:
        if self._mutants is None:
            self._mutants = generate_mutants(self.program)
        return self._mutants

    def trace(self, test: TestCase) -> TestTrace:
        trace = self._traces.get(test)
        if trace is None:
            trace = run_test(self.program, test, self.interp)
            self._traces[test] = trace
            self.discovered_exceptions |= trace.exceptions
        return trace

    def rendered_lines(self, test: TestCase) -> tuple[str, ...]:
        lines = self._renders.get(test)
        if lines is None:
            text = render_test(test)
            lines = tuple(text.split("\n")) if text else ()
            self._renders[test] = lines
        return lines

    def classify(self, mutant: Mutant, test: TestCase) -> MutantOutcome:
        key = (mutant.mutant_id, test)
        outcome = self._classifications.get(key)
        if outcome is None:
            outcome = classify_against_mutant(mutant, test, self.trace(test), self.interp)
            self._classifications[key] = outcome
        return outcome

    def mutation_score(self, suite: TestSuite, mode: str) -> float:
        return mutation_score(suite, self.mutants, mode, self.classify)

    def test_pair_distance(self, a: TestCase, b: TestCase) -> int:
        lines_a = self.rendered_lines(a)
        lines_b = self.rendered_lines(b)
        key = (lines_a, lines_b) if lines_a <= lines_b else (lines_b, lines_a)
        cached = self._pair_distance.get(key)
        if cached is not None:
            return cached
        total = 0
        for la in lines_a:
            for lb in lines_b:
                lkey = (la, lb) if la <= lb else (lb, la)
                d = self._line_distance.get(lkey)
                if d is None:
                    d = levenshtein(la, lb)
                    self._line_distance[lkey] = d
                total += d
        self._pair_distance[key] = total
        return total


def suite_diversity(suite: TestSuite, ctx: FitnessContext) -> tuple[int, float]:
    """Pairwise rendered-statement distance summed over unordered test pairs.

    Returns (diversity, fitness) with fitness = 1 / (1 + diversity); a suite
    with at most one test has no pairs and scores fitness 1.0.
    """
    tests = suite.tests
    div = 0
    for i in range(len(tests)):
        for j in range(i + 1, len(tests)):
            div += ctx.test_pair_distance(tests[i], tests[j])
    return div, 1.0 / (1.0 + div)


# --- the fitness functions -----------------------------------------------------


def _fit_ex(suite: TestSuite, ctx: FitnessContext) -> float:
    unique: set[tuple[str, str]] = set()
    for test in suite.tests:
        unique |= ctx.trace(test).exceptions
    return 1.0 / (1.0 + len(unique))


def _branch_score(suite: TestSuite, ctx: FitnessContext, direct: bool) -> float:
    if ctx.total_branches == 0:
        return 0.0
    best: dict[int, list[float]] = {}
    for test in suite.tests:
        trace = ctx.trace(test)
        table = trace.branch_best_direct if direct else trace.branch_best
        for bid, (dt, df) in table.items():
            slot = best.setdefault(bid, [INF, INF])
            if dt < slot[0]:
                slot[0] = dt
            if df < slot[1]:
                slot[1] = df
    total = 0.0
    for bid in range(ctx.total_branches):
        dt, df = best.get(bid, (INF, INF))
        total += nu(dt) + nu(df)
    return total / (2.0 * ctx.total_branches)


def _fit_branch(suite: TestSuite, ctx: FitnessContext) -> float:
    return _branch_score(suite, ctx, direct=False)


def _fit_direct_branch(suite: TestSuite, ctx: FitnessContext) -> float:
    return _branch_score(suite, ctx, direct=True)


def _fit_line(suite: TestSuite, ctx: FitnessContext) -> float:
    if ctx.total_lines == 0:
        return 0.0
    covered: set[int] = set()
    for test in suite.tests:
        covered |= ctx.trace(test).lines_hit
    return (ctx.total_lines - len(covered)) / ctx.total_lines


def _fit_method(suite: TestSuite, ctx: FitnessContext) -> float:
    total = len(ctx.function_names)
    if total == 0:
        return 0.0
    called: set[str] = set()
    for test in suite.tests:
        called |= {name for name, _ in ctx.trace(test).functions_called}
    return (total - len(called)) / total


def _fit_mnec(suite: TestSuite, ctx: FitnessContext) -> float:
    total = len(ctx.function_names)
    if total == 0:
        return 0.0
    clean: set[str] = set()
    for test in suite.tests:
        clean |= ctx.trace(test).clean_direct
    return (total - len(clean)) / total


def _fit_output(suite: TestSuite, ctx: FitnessContext) -> float:
    if not ctx.buckets:
        return 0.0
    observed: dict[str, list] = {}
    for test in suite.tests:
        for fname, values in ctx.trace(test).returns.items():
            observed.setdefault(fname, []).extend(values)
    total = 0.0
    for fname, bucket in ctx.buckets:
        values = observed.get(fname, ())
        hit = any(_bucket_of(v) == bucket for v in values)
        if hit:
            continue
        if bucket in _INT_BUCKETS:
            ints = [v for v in values if not isinstance(v, bool) and isinstance(v, int)]
            total += nu(_int_bucket_distance(bucket, ints)) if ints else 1.0
        else:
            total += 1.0
    return total / len(ctx.buckets)


def _fit_weak_mut(suite: TestSuite, ctx: FitnessContext) -> float:
    mutants = ctx.mutants
    if not mutants:
        raise ValueError("mutation score is undefined for an empty mutant list")
    total = 0.0
    for mutant in mutants:
        best = INF
        for test in suite.tests:
            outcome = ctx.classify(mutant, test)
            if outcome.status >= MutantStatus.INFECTED:
                best = 0.0
                break
            best = min(best, outcome.infection_distance)
        total += nu(best)
    return total / len(mutants)


def _fit_strong_mut(suite: TestSuite, ctx: FitnessContext) -> float:
    mutants = ctx.mutants
    if not mutants:
        raise ValueError("mutation score is undefined for an empty mutant list")
    total = 0.0
    for mutant in mutants:
        best_status = MutantStatus.NOT_REACHED
        best_distance = INF
        for test in suite.tests:
            outcome = ctx.classify(mutant, test)
            if outcome.status > best_status:
                best_status = outcome.status
            if outcome.infection_distance < best_distance:
                best_distance = outcome.infection_distance
            if best_status == MutantStatus.KILLED:
                break
        if best_status == MutantStatus.KILLED:
            stage = 0.0
        elif best_status == MutantStatus.INFECTED:
            stage = 0.25
        elif best_status == MutantStatus.REACHED_NOT_INFECTED:
            stage = 0.5 + 0.5 * nu(best_distance)
        else:
            stage = 1.0
        total += stage
    return total / len(mutants)


def _fit_diversity(suite: TestSuite, ctx: FitnessContext) -> float:
    return suite_diversity(suite, ctx)[1]


_EVALUATORS = {
    FitnessFunctionId.EX: _fit_ex,
    FitnessFunctionId.BRANCH: _fit_branch,
    FitnessFunctionId.DIRECT_BRANCH: _fit_direct_branch,
    FitnessFunctionId.LINE: _fit_line,
    FitnessFunctionId.METHOD: _fit_method,
    FitnessFunctionId.MNEC: _fit_mnec,
    FitnessFunctionId.OUTPUT: _fit_output,
    FitnessFunctionId.WEAK_MUT: _fit_weak_mut,
    FitnessFunctionId.STRONG_MUT: _fit_strong_mut,
    FitnessFunctionId.DIVERSITY: _fit_diversity,
}


def eval_fitness(fn: FitnessFunctionId, suite: TestSuite, ctx: FitnessContext) -> float:
    """Evaluate one fitness function on a suite; results are memoized per suite."""
    key = (fn, suite.key())
    score = ctx._suite_scores.get(key)
    if score is None:
        score = _EVALUATORS[fn](suite, ctx)
        ctx._suite_scores[key] = score
        suite.cached_fitness[fn] = score
    return score


def composite_fitness(scores: dict[FitnessFunctionId, float]) -> float:
    """Plain sum of the active functions' scores; lower is better.

    Summed in function-ordinal order so permuting the map cannot change the
    floating-point total.
    """
    if not scores:
        raise ValueError("composite fitness of an empty score map is undefined")
    return sum(scores[fn] for fn in sorted(scores))


def evaluate_suite(suite: TestSuite, functions: Iterable[FitnessFunctionId],
                   ctx: FitnessContext) -> float:
    return composite_fitness({fn: eval_fitness(fn, suite, ctx) for fn in functions})
