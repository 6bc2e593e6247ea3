"""Bilinear matrix multiplication schemes: exact verification, addition
counting, greedy addition reduction and recursive execution."""

from .catalog import builtin
from .cse import ReductionConfig, TieBreak, greedy_cse, rebalance_negations, reduce_scheme
from .engine import count_formula, eval_slp, recursive_multiply
from .formats import emit_slp, parse_scheme, parse_slp, serialize_scheme
from .model import (
    BilinearScheme,
    Coefficient,
    OpCountReport,
    StraightLineProgram,
    matmul_tensor,
    naive_addition_count,
    scheme_to_naive_slp,
    slp_addition_count,
)
from .verify import extract_scheme, random_check, verify_scheme, verify_slp

__all__ = [
    "BilinearScheme",
    "Coefficient",
    "OpCountReport",
    "ReductionConfig",
    "StraightLineProgram",
    "TieBreak",
    "builtin",
    "count_formula",
    "emit_slp",
    "eval_slp",
    "extract_scheme",
    "greedy_cse",
    "matmul_tensor",
    "naive_addition_count",
    "parse_scheme",
    "parse_slp",
    "random_check",
    "rebalance_negations",
    "recursive_multiply",
    "reduce_scheme",
    "scheme_to_naive_slp",
    "serialize_scheme",
    "slp_addition_count",
    "verify_scheme",
    "verify_slp",
]
