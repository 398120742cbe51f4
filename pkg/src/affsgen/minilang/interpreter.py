"""Instrumented tree-walking interpreter for MiniJ.

Every execution records the statements reached, every branch-predicate
evaluation with distances toward both outcomes, the set of functions called
(flagged direct for the entry frame), and the final outcome. Execution is
deterministic and bounded by a step limit.

Semantics worth knowing:
  * Arithmetic is integer-only; division truncates toward zero and raises
    ``DivByZero`` on a zero divisor.
  * ``+`` concatenates two strings; all other operand mixes are a
    ``TypeError`` (the in-language kind, not Python's).
  * Ordering comparisons require numeric operands (bools count as 0/1);
    ``==``/``!=`` additionally accept two strings.
  * ``s[i]`` raises ``IndexOutOfBounds`` outside ``0 <= i < len(s)``.
  * A function body that ends without ``return`` yields the int 0.
  * Exceeding the step limit or the call-depth cap raises
    ``StepLimitExceeded``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from affsgen.minilang.nodes import (
    Assign,
    Binary,
    BoolLit,
    Call,
    Expr,
    FunctionDef,
    If,
    Index,
    IntLit,
    Len,
    Let,
    Program,
    Return,
    Stmt,
    StrLit,
    Throw,
    Unary,
    Var,
    While,
)

K = 1.0  # offset for strict inequalities and != when the predicate just fails

DIV_BY_ZERO = "DivByZero"
INDEX_OUT_OF_BOUNDS = "IndexOutOfBounds"
EXPLICIT_THROW = "ExplicitThrow"
STEP_LIMIT_EXCEEDED = "StepLimitExceeded"
TYPE_ERROR = "TypeError"

Value = Union[int, bool, str]


class UnknownFunctionError(ValueError):
    """Entry call names a function that does not exist in the program."""


class ArityError(ValueError):
    """Entry call argument count or kinds do not match the signature."""


@dataclass(frozen=True, slots=True)
class ExceptionRecord:
    kind: str
    raising_function: str
    tag: str | None = None

    @property
    def identity(self) -> tuple[str, str]:
        """(kind label, raising function) pair; the tag is part of the label."""
        label = self.kind if self.tag is None else f"{self.kind}:{self.tag}"
        return (label, self.raising_function)


class MiniJError(Exception):
    """In-language exception; caught at the entry boundary."""

    def __init__(self, kind: str, raising_function: str, tag: str | None = None):
        super().__init__(kind)
        self.record = ExceptionRecord(kind=kind, raising_function=raising_function, tag=tag)


@dataclass(frozen=True, slots=True)
class Returned:
    value: Value


@dataclass(frozen=True, slots=True)
class Raised:
    record: ExceptionRecord


Outcome = Union[Returned, Raised]


@dataclass(frozen=True, slots=True)
class BranchEval:
    branch_id: int
    taken: bool
    distance_true: float
    distance_false: float
    direct: bool


@dataclass(frozen=True, slots=True)
class ExecutionResult:
    lines_hit: frozenset[int]
    branch_evals: tuple[BranchEval, ...]
    called_functions: frozenset[tuple[str, bool]]
    outcome: Outcome
    steps: int
    # recorded values of the watched node/statement, when a watch was set
    watch: tuple[tuple, ...] = ()


@dataclass(frozen=True, slots=True)
class InterpConfig:
    step_limit: int = 10_000
    max_call_depth: int = 50


def kind_of(value: Value) -> str:
    if isinstance(value, bool):
        return "bool"
    if isinstance(value, int):
        return "int"
    return "str"


# --- branch distances ----------------------------------------------------


def branch_distance(op: str, lhs: float, rhs: float) -> float:
    """Distance ``>= 0`` from ``lhs op rhs`` to the predicate holding.

    Zero exactly when the predicate holds; otherwise grows with how far the
    operands are from satisfying it. Booleans should be passed as 0/1.
    """
    l = float(lhs)
    r = float(rhs)
    if op == "==":
        return abs(l - r)
    if op == "!=":
        return K if l == r else 0.0
    if op == "<":
        return l - r + K if l >= r else 0.0
    if op == "<=":
        return l - r if l > r else 0.0
    if op == ">":
        return r - l + K if r >= l else 0.0
    if op == ">=":
        return r - l if r > l else 0.0
    raise ValueError(f"not a comparison operator: {op!r}")


_NEGATION = {"==": "!=", "!=": "==", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}


def string_eq_distance(a: str, b: str) -> float:
    """Character-wise distance for string equality: 0 iff the strings match."""
    common = min(len(a), len(b))
    mismatches = sum(1 for i in range(common) if a[i] != b[i])
    return float(abs(len(a) - len(b)) + mismatches)


def _nu(x: float) -> float:
    return x / (x + 1.0)


# --- signals -------------------------------------------------------------


class _ReturnSignal(Exception):
    __slots__ = ("value",)

    def __init__(self, value: Value):
        self.value = value


_WATCH_RAISED = ("raise",)


class _Interp:
    __slots__ = (
        "program",
        "functions",
        "config",
        "steps",
        "lines_hit",
        "branch_evals",
        "called",
        "watch_node",
        "watch_line",
        "watch_values",
    )

    def __init__(self, program: Program, config: InterpConfig,
                 watch_node: int = -1, watch_line: int = -1):
        self.program = program
        self.functions = program.fn_map()
        self.config = config
        self.steps = 0
        self.lines_hit: set[int] = set()
        self.branch_evals: list[BranchEval] = []
        self.called: set[tuple[str, bool]] = set()
        self.watch_node = watch_node
        self.watch_line = watch_line
        self.watch_values: list[tuple] = []

    # -- bookkeeping -------------------------------------------------------

    def _tick(self, fname: str) -> None:
        self.steps += 1
        if self.steps > self.config.step_limit:
            raise MiniJError(STEP_LIMIT_EXCEEDED, fname)

    # -- expression evaluation ----------------------------------------------

    def eval(self, node: Expr, env: dict, fname: str, depth: int) -> Value:
        self._tick(fname)
        if self.watch_node >= 0 and node.node_id == self.watch_node:
            try:
                value = self._eval_inner(node, env, fname, depth)
            except MiniJError:
                self.watch_values.append(_WATCH_RAISED)
                raise
            self.watch_values.append(("v", value))
            return value
        return self._eval_inner(node, env, fname, depth)

    def _eval_inner(self, node: Expr, env: dict, fname: str, depth: int) -> Value:
        cls = type(node)
        if cls is IntLit or cls is BoolLit or cls is StrLit:
            return node.value
        if cls is Var:
            try:
                return env[node.name]
            except KeyError:
                raise MiniJError(TYPE_ERROR, fname) from None
        if cls is Binary:
            op = node.op
            if op in ("+", "-", "*", "/"):
                return self._arith(node, env, fname, depth)
            # comparison / and / or: reuse the predicate path for the value
            value, _, _ = self._pred_inner(node, env, fname, depth)
            return value
        if cls is Unary:
            if node.op == "neg":
                v = self.eval(node.operand, env, fname, depth)
                if isinstance(v, bool) or not isinstance(v, int):
                    raise MiniJError(TYPE_ERROR, fname)
                return -v
            value, _, _ = self._pred_inner(node, env, fname, depth)
            return value
        if cls is Call:
            args = [self.eval(a, env, fname, depth) for a in node.args]
            return self._call(node.name, args, fname, depth)
        if cls is Len:
            v = self.eval(node.operand, env, fname, depth)
            if not isinstance(v, str):
                raise MiniJError(TYPE_ERROR, fname)
            return len(v)
        if cls is Index:
            base = self.eval(node.base, env, fname, depth)
            idx = self.eval(node.index, env, fname, depth)
            if not isinstance(base, str) or isinstance(idx, bool) or not isinstance(idx, int):
                raise MiniJError(TYPE_ERROR, fname)
            if idx < 0 or idx >= len(base):
                raise MiniJError(INDEX_OUT_OF_BOUNDS, fname)
            return base[idx]
        raise TypeError(f"unknown expression node {node!r}")

    def _arith(self, node: Binary, env: dict, fname: str, depth: int) -> Value:
        l = self.eval(node.lhs, env, fname, depth)
        r = self.eval(node.rhs, env, fname, depth)
        op = node.op
        if op == "+" and isinstance(l, str) and isinstance(r, str):
            return l + r
        if (isinstance(l, bool) or not isinstance(l, int)
                or isinstance(r, bool) or not isinstance(r, int)):
            raise MiniJError(TYPE_ERROR, fname)
        if op == "+":
            return l + r
        if op == "-":
            return l - r
        if op == "*":
            return l * r
        # division truncates toward zero, like most curly-brace languages
        if r == 0:
            raise MiniJError(DIV_BY_ZERO, fname)
        q = abs(l) // abs(r)
        return q if (l >= 0) == (r >= 0) else -q

    def _call(self, name: str, args: list[Value], caller: str, depth: int) -> Value:
        if depth + 1 >= self.config.max_call_depth:
            raise MiniJError(STEP_LIMIT_EXCEEDED, name)
        fn = self.functions[name]
        env: dict = {}
        for (pname, pkind), value in zip(fn.params, args):
            if kind_of(value) != pkind:
                raise MiniJError(TYPE_ERROR, caller)
            env[pname] = value
        self.called.add((name, False))  # only the entry frame counts as direct
        try:
            self._exec_body(fn.body, env, name, depth + 1)
        except _ReturnSignal as sig:
            return sig.value
        return 0  # falling off the end yields int 0

    # -- predicate evaluation -----------------------------------------------

    def pred(self, node: Expr, env: dict, fname: str, depth: int) -> tuple[bool, float, float]:
        """Evaluate a branch predicate: (value, distance-to-true, distance-to-false)."""
        self._tick(fname)
        if self.watch_node >= 0 and node.node_id == self.watch_node:
            try:
                result = self._pred_inner(node, env, fname, depth)
            except MiniJError:
                self.watch_values.append(_WATCH_RAISED)
                raise
            self.watch_values.append(("v", result[0]))
            return result
        return self._pred_inner(node, env, fname, depth)

    def _pred_inner(self, node: Expr, env: dict, fname: str, depth: int) -> tuple[bool, float, float]:
        if type(node) is Binary:
            op = node.op
            if op == "and":
                va, ta, fa = self.pred(node.lhs, env, fname, depth)
                if not va:
                    # right side not evaluated: contributes the maximal
                    # normalized distance toward true
                    return (False, _nu(ta) + 1.0, 0.0)
                vb, tb, fb = self.pred(node.rhs, env, fname, depth)
                return (vb, _nu(ta) + _nu(tb), min(fa, fb))
            if op == "or":
                va, ta, fa = self.pred(node.lhs, env, fname, depth)
                if va:
                    return (True, 0.0, _nu(fa) + 1.0)
                vb, tb, fb = self.pred(node.rhs, env, fname, depth)
                return (vb, min(ta, tb), _nu(fa) + _nu(fb))
            if op in _NEGATION:
                return self._compare(node, env, fname, depth)
        if type(node) is Unary and node.op == "not":
            v, t, f = self.pred(node.operand, env, fname, depth)
            return (not v, f, t)
        value = self._eval_inner(node, env, fname, depth)
        if not isinstance(value, bool):
            raise MiniJError(TYPE_ERROR, fname)
        return (value, 0.0 if value else K, K if value else 0.0)

    def _compare(self, node: Binary, env: dict, fname: str, depth: int) -> tuple[bool, float, float]:
        op = node.op
        l = self.eval(node.lhs, env, fname, depth)
        r = self.eval(node.rhs, env, fname, depth)
        if isinstance(l, str) or isinstance(r, str):
            if not (isinstance(l, str) and isinstance(r, str)) or op not in ("==", "!="):
                raise MiniJError(TYPE_ERROR, fname)
            d_eq = string_eq_distance(l, r)
            d_ne = K if l == r else 0.0
            if op == "==":
                return (l == r, d_eq, d_ne)
            return (l != r, d_ne, d_eq)
        ln = float(int(l))
        rn = float(int(r))
        d_true = branch_distance(op, ln, rn)
        d_false = branch_distance(_NEGATION[op], ln, rn)
        return (d_true == 0.0, d_true, d_false)

    # -- statements -----------------------------------------------------------

    def _exec_body(self, body: list[Stmt], env: dict, fname: str, depth: int) -> None:
        for stmt in body:
            self._exec_stmt(stmt, env, fname, depth)

    def _exec_stmt(self, stmt: Stmt, env: dict, fname: str, depth: int) -> None:
        self._tick(fname)
        self.lines_hit.add(stmt.line_id)
        cls = type(stmt)
        if cls is Let:
            env[stmt.name] = self._assigned_value(stmt, env, fname, depth, old=None)
            return
        if cls is Assign:
            if stmt.name not in env:
                raise MiniJError(TYPE_ERROR, fname)
            env[stmt.name] = self._assigned_value(stmt, env, fname, depth, old=env[stmt.name])
            return
        if cls is If:
            taken, d_true, d_false = self.pred(stmt.cond, env, fname, depth)
            self.branch_evals.append(
                BranchEval(stmt.branch_id, taken, d_true, d_false, depth == 0)
            )
            self._exec_body(stmt.then_body if taken else stmt.else_body, env, fname, depth)
            return
        if cls is While:
            while True:
                taken, d_true, d_false = self.pred(stmt.cond, env, fname, depth)
                self.branch_evals.append(
                    BranchEval(stmt.branch_id, taken, d_true, d_false, depth == 0)
                )
                if not taken:
                    return
                self._exec_body(stmt.body, env, fname, depth)
        if cls is Return:
            raise _ReturnSignal(self.eval(stmt.expr, env, fname, depth))
        if cls is Throw:
            raise MiniJError(EXPLICIT_THROW, fname, tag=stmt.tag)
        raise TypeError(f"unknown statement node {stmt!r}")

    def _assigned_value(self, stmt, env: dict, fname: str, depth: int, old):
        """Evaluate an assignment RHS, recording (old, new) when this line is watched."""
        if self.watch_line >= 0 and stmt.line_id == self.watch_line:
            try:
                value = self.eval(stmt.expr, env, fname, depth)
            except MiniJError:
                self.watch_values.append(_WATCH_RAISED)
                raise
            self.watch_values.append(("a", old, value))
            return value
        return self.eval(stmt.expr, env, fname, depth)


def execute(
    program: Program,
    entry: str,
    args: tuple[Value, ...] | list[Value],
    config: InterpConfig = InterpConfig(),
    watch_node: int = -1,
    watch_line: int = -1,
) -> ExecutionResult:
    """Run one entry call and return the full instrumented result.

    Raises UnknownFunctionError / ArityError for malformed entry calls; every
    in-language failure is captured as a Raised outcome instead.
    """
    fn = program.function(entry)
    if fn is None:
        raise UnknownFunctionError(f"no function named {entry!r}")
    if len(args) != len(fn.params):
        raise ArityError(f"{entry} expects {len(fn.params)} args, got {len(args)}")
    for (pname, pkind), value in zip(fn.params, args):
        if kind_of(value) != pkind:
            raise ArityError(
                f"{entry} parameter {pname!r} expects {pkind}, got {kind_of(value)}"
            )

    interp = _Interp(program, config, watch_node=watch_node, watch_line=watch_line)
    env = dict(zip((p for p, _ in fn.params), args))
    interp.called.add((entry, True))
    outcome: Outcome
    try:
        try:
            interp._exec_body(fn.body, env, entry, 0)
            outcome = Returned(0)
        except _ReturnSignal as sig:
            outcome = Returned(sig.value)
    except MiniJError as err:
        outcome = Raised(err.record)
    return ExecutionResult(
        lines_hit=frozenset(interp.lines_hit),
        branch_evals=tuple(interp.branch_evals),
        called_functions=frozenset(interp.called),
        outcome=outcome,
        steps=interp.steps,
        watch=tuple(interp.watch_values),
    )
