"""Dense linear-algebra kernel: symmetric matrices, svec coordinates, solves."""

from .config import Tolerances, get_tolerances, reset_tolerances
from .linsolve import condition_estimate, solve_linear
from .symmetric import (
    SpectrumSummary,
    SymMatrix,
    eig_max_sym,
    eig_min_sym,
    is_psd,
    spectrum_summary,
    svec,
    svec_batch,
    svec_dim,
    unsvec,
    unsvec_basis,
)

__all__ = [
    'Tolerances',
    'get_tolerances',
    'reset_tolerances',
    'condition_estimate',
    'solve_linear',
    'SpectrumSummary',
    'SymMatrix',
    'eig_max_sym',
    'eig_min_sym',
    'is_psd',
    'spectrum_summary',
    'svec',
    'svec_batch',
    'svec_dim',
    'unsvec',
    'unsvec_basis',
]
