"""A positive supercompiler for a strict, pure, higher-order core language,
together with an instrumented reference interpreter.
"""

from .analysis import is_annoying, strict_vars
from .driver import (
    DriverError,
    FreshSupply,
    MemoEntry,
    program_alpha_eq,
    supercompile,
)
from .generalize import Generalization, UniformTerm, embeds, msg, split, to_uniform
from .parser import ParseError, parse_expression, parse_program
from .pretty import pretty_expr, pretty_program
from .semantics import (
    EvalOutcome,
    StuckError,
    bind_externals,
    decompose,
    eval_expr,
    eval_program,
    eval_via_step,
    is_value,
    step,
)
from .syntax import (
    Alt,
    App,
    Case,
    CtorApp,
    CtorPat,
    DefaultPat,
    Expression,
    Global,
    IntLit,
    IntPat,
    Lambda,
    Let,
    Letrec,
    Pattern,
    PrimOp,
    Program,
    Var,
    alpha_eq,
    desugar_letrec,
    free_vars,
    fun_names,
    is_linear,
    match_renaming,
    substitute,
    validate_program,
    weight,
)

__all__ = [
    "Alt",
    "App",
    "Case",
    "CtorApp",
    "CtorPat",
    "DefaultPat",
    "DriverError",
    "EvalOutcome",
    "Expression",
    "FreshSupply",
    "Generalization",
    "Global",
    "IntLit",
    "IntPat",
    "Lambda",
    "Let",
    "Letrec",
    "MemoEntry",
    "ParseError",
    "Pattern",
    "PrimOp",
    "Program",
    "StuckError",
    "UniformTerm",
    "Var",
    "alpha_eq",
    "bind_externals",
    "decompose",
    "desugar_letrec",
    "embeds",
    "eval_expr",
    "eval_program",
    "eval_via_step",
    "free_vars",
    "fun_names",
    "is_annoying",
    "is_linear",
    "is_value",
    "match_renaming",
    "msg",
    "parse_expression",
    "parse_program",
    "pretty_expr",
    "pretty_program",
    "program_alpha_eq",
    "split",
    "step",
    "strict_vars",
    "substitute",
    "supercompile",
    "to_uniform",
    "validate_program",
    "weight",
]
