"""The outer GTARE iteration."""

from .outer import (
    IterationRecord,
    SolveOptions,
    SolveReport,
    build_subproblem,
    init_subproblem,
    outer_step,
    recursion_audit,
    solve_gtare,
)

__all__ = [
    'IterationRecord',
    'SolveOptions',
    'SolveReport',
    'build_subproblem',
    'init_subproblem',
    'outer_step',
    'recursion_audit',
    'solve_gtare',
]
