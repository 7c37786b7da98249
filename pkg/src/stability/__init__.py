"""Mean-square stability: the Lyapunov-type operator and its equations."""

from .lyapunov import (
    LyapOperator,
    apply_lyapunov,
    build_operator,
    closed_loop_abscissa,
    is_mean_square_stable,
    second_moment,
    solve_generalized_lyapunov,
    spectral_abscissa,
)

__all__ = [
    'LyapOperator',
    'apply_lyapunov',
    'build_operator',
    'closed_loop_abscissa',
    'is_mean_square_stable',
    'second_moment',
    'solve_generalized_lyapunov',
    'spectral_abscissa',
]
