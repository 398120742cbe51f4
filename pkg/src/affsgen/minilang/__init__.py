"""Parser and instrumented interpreter for the MiniJ mini-language."""

from affsgen.minilang.nodes import (
    Assign,
    BoolLit,
    Call,
    FunctionDef,
    If,
    Index,
    IntLit,
    Len,
    Let,
    Program,
    Return,
    StrLit,
    Throw,
    Unary,
    Var,
    While,
)
from affsgen.minilang.parser import ParseError, parse
from affsgen.minilang.interpreter import (
    ArityError,
    BranchEval,
    ExceptionRecord,
    ExecutionResult,
    InterpConfig,
    Raised,
    Returned,
    UnknownFunctionError,
    branch_distance,
    execute,
)

__all__ = [
    "Assign",
    "ArityError",
    "BoolLit",
    "BranchEval",
    "Call",
    "ExceptionRecord",
    "ExecutionResult",
    "FunctionDef",
    "If",
    "Index",
    "IntLit",
    "InterpConfig",
    "Len",
    "Let",
    "ParseError",
    "Program",
    "Raised",
    "Return",
    "Returned",
    "StrLit",
    "Throw",
    "Unary",
    "UnknownFunctionError",
    "Var",
    "While",
    "branch_distance",
    "execute",
    "parse",
]
