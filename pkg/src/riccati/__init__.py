"""Riccati solvers: definite inner AREs and the outer GTARE iteration."""

from .inner_are import (
    DefiniteAre,
    InnerSolveReport,
    Orientation,
    are_gain,
    are_residual,
    check_zero_in_gamma,
    find_initial_gain,
    lambda_matrix,
    newton_kleinman,
    shift_continuation_gain,
)

__all__ = [
    'DefiniteAre',
    'InnerSolveReport',
    'Orientation',
    'are_gain',
    'are_residual',
    'check_zero_in_gamma',
    'find_initial_gain',
    'lambda_matrix',
    'newton_kleinman',
    'shift_continuation_gain',
]
