"""An extensible pattern-match compiler for a small S-expression language."""

from .errors import PmxError, RuntimeFault, SourceSpan, StaticError
from .evaluator import Env, apply_value, base_env, evaluate, parse_expr
from .match_compiler import build_matrix, coalesce_rows, compile_match, compile_matrix, dump_automaton, select_column
from .match_runtime import NO_MATCH, Matched, naive_match, run_clause_rhs, run_match
from .patterns import ExpanderDef, StaticEnv, bound_vars, expand_once, parse_pattern, register_expander, register_struct
from .sexpr import print_value, read_all, values_equal

__all__ = [
    "Env", "ExpanderDef", "Matched", "NO_MATCH", "PmxError", "RuntimeFault", "SourceSpan",
    "StaticEnv", "StaticError", "apply_value", "base_env", "bound_vars", "build_matrix",
    "coalesce_rows", "compile_match", "compile_matrix", "dump_automaton", "evaluate",
    "expand_once", "naive_match", "parse_expr", "parse_pattern", "print_value", "read_all",
    "register_expander", "register_struct", "run_clause_rhs", "run_match", "select_column",
    "values_equal",
]
