"""Problem data, the GTARE map G and its algebraic identities."""

from .blocks import (
    CoefficientBlocks,
    Gains,
    closed_loop,
    closed_loop_from_gains,
    coefficient_blocks,
    gains,
    in_dom_G,
    n_matrix,
    residual_G,
    schur_r22,
)
from .identities import (
    IdentityDefects,
    completion_of_squares,
    g_expansion,
    gain_increment,
    identity_defects,
)
from .problem import GtareProblem, ensure_full_rank_r, ensure_valid, random_problem, validate
from .value import closed_loop_value, cost_weight

__all__ = [
    'CoefficientBlocks',
    'Gains',
    'GtareProblem',
    'IdentityDefects',
    'closed_loop',
    'closed_loop_from_gains',
    'closed_loop_value',
    'coefficient_blocks',
    'completion_of_squares',
    'cost_weight',
    'ensure_full_rank_r',
    'ensure_valid',
    'g_expansion',
    'gain_increment',
    'gains',
    'identity_defects',
    'in_dom_G',
    'n_matrix',
    'random_problem',
    'residual_G',
    'schur_r22',
    'validate',
]
