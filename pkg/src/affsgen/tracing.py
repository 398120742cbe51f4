"""Execution of whole test cases and the per-test summaries fitness consumes."""

from __future__ import annotations

import math
from dataclasses import dataclass

from affsgen.minilang.interpreter import (
    ExecutionResult,
    InterpConfig,
    Raised,
    Returned,
    execute,
)
from affsgen.minilang.nodes import Program
from affsgen.testmodel import TestCase

INF = math.inf


@dataclass(frozen=True, slots=True)
class TestTrace:
    """Everything observed while running one test case against a program."""

    test: TestCase
    call_results: tuple[ExecutionResult, ...]
    lines_hit: frozenset[int]
    # branch_id -> best (distance_true, distance_false) across all evaluations
    branch_best: dict
    branch_best_direct: dict
    functions_called: frozenset[tuple[str, bool]]
    exceptions: frozenset[tuple[str, str]]
    # functions completing a direct call without raising
    clean_direct: frozenset[str]
    # function -> tuple of observed return values from direct calls
    returns: dict
    behavior: tuple


def behavior_of(result: ExecutionResult) -> tuple:
    """Observable identity of one call: return value or exception identity."""
    if isinstance(result.outcome, Returned):
        return ("return", result.outcome.value)
    return ("raise",) + result.outcome.record.identity


def run_test(program: Program, test: TestCase, config: InterpConfig = InterpConfig()) -> TestTrace:
    """Execute every call of a test case and aggregate the results."""
    results = []
    lines: set[int] = set()
    branch_best: dict[int, list[float]] = {}
    branch_best_direct: dict[int, list[float]] = {}
    called: set[tuple[str, bool]] = set()
    exceptions: set[tuple[str, str]] = set()
    clean_direct: set[str] = set()
    returns: dict[str, list] = {}
    behavior = []
    for call in test.calls:
        args = tuple(test.resolve(a) for a in call.args)
        result = execute(program, call.function, args, config)
        results.append(result)
        lines |= result.lines_hit
        called |= result.called_functions
        for ev in result.branch_evals:
            best = branch_best.setdefault(ev.branch_id, [INF, INF])
            if ev.distance_true < best[0]:
                best[0] = ev.distance_true
            if ev.distance_false < best[1]:
                best[1] = ev.distance_false
            if ev.direct:
                best = branch_best_direct.setdefault(ev.branch_id, [INF, INF])
                if ev.distance_true < best[0]:
                    best[0] = ev.distance_true
                if ev.distance_false < best[1]:
                    best[1] = ev.distance_false
        if isinstance(result.outcome, Raised):
            exceptions.add(result.outcome.record.identity)
        else:
            clean_direct.add(call.function)
            returns.setdefault(call.function, []).append(result.outcome.value)
        behavior.append(behavior_of(result))
    return TestTrace(
        test=test,
        call_results=tuple(results),
        lines_hit=frozenset(lines),
        branch_best={b: tuple(v) for b, v in branch_best.items()},
        branch_best_direct={b: tuple(v) for b, v in branch_best_direct.items()},
        functions_called=frozenset(called),
        exceptions=frozenset(exceptions),
        clean_direct=frozenset(clean_direct),
        returns={f: tuple(v) for f, v in returns.items()},
        behavior=tuple(behavior),
    )


def behavior_signature(program: Program, test: TestCase,
                       config: InterpConfig = InterpConfig()) -> tuple:
    """Observable behavior of a test without the instrumentation detail."""
    signature = []
    for call in test.calls:
        args = tuple(test.resolve(a) for a in call.args)
        signature.append(behavior_of(execute(program, call.function, args, config)))
    return tuple(signature)
