"""Quantifier elimination for Presburger arithmetic with unary counting quantifiers."""
from .errors import (
    CaseExplosion,
    IncompleteAssignment,
    MalformedFormula,
    OpenFormulaError,
    OracleResourceError,
    PacqeError,
    ParseError,
    PipelineInvariantError,
    UnsupportedQuantifiedInput,
)
from .formula import (
    FALSE,
    TRUE,
    And,
    CountEq,
    CountGeq,
    CountGeqConst,
    CountMod,
    Exists,
    ForAll,
    Lt,
    Mod,
    Not,
    Or,
    evaluate_qf,
    free_vars,
    params_report,
)
from .kernels import BACKEND
from .oracle import count_line, differential_test, gen_formula, oracle_eval
from .qe_core import eliminate_count_var, trace_steps
from .qe_ext import decide, eliminate_all, eliminate_mod_count, eliminate_threshold
from .syntax import parse, parse_core, render
from .terms import LinearTerm

__all__ = [
    "And",
    "BACKEND",
    "CaseExplosion",
    "CountEq",
    "CountGeq",
    "CountGeqConst",
    "CountMod",
    "Exists",
    "FALSE",
    "ForAll",
    "IncompleteAssignment",
    "LinearTerm",
    "Lt",
    "MalformedFormula",
    "Mod",
    "Not",
    "OpenFormulaError",
    "Or",
    "OracleResourceError",
    "PacqeError",
    "ParseError",
    "PipelineInvariantError",
    "TRUE",
    "UnsupportedQuantifiedInput",
    "count_line",
    "decide",
    "differential_test",
    "eliminate_all",
    "eliminate_count_var",
    "eliminate_mod_count",
    "eliminate_threshold",
    "evaluate_qf",
    "free_vars",
    "gen_formula",
    "oracle_eval",
    "params_report",
    "parse",
    "parse_core",
    "render",
    "trace_steps",
]

__version__ = "0.1.0"
