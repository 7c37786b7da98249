from __future__ import annotations

import logging
import math
import warnings
from typing import Tuple

import numpy as np
import scipy.linalg
from scipy.linalg import LinAlgWarning
from scipy.linalg.lapack import get_lapack_funcs

from src.errors import IllConditioned, ShapeMismatch, SingularMatrix
from src.numerics.config import get_tolerances

logger = logging.getLogger(__name__)


def condition_estimate(lu: np.ndarray, anorm: float) -> float:
    """1-norm condition estimate from an LU factorization (LAPACK gecon)."""
    gecon = get_lapack_funcs("gecon", (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or rcond <= 0.0:
        return math.inf
    return 1.0 / rcond


def solve_linear(A, B, *, what: str = "matrix") -> Tuple[np.ndarray, float]:
    """
    Solve A X = B by LU factorization.

    Returns X and a 1-norm condition estimate of A. Raises SingularMatrix when
    the reciprocal condition number is below singular_rcond. A condition
    estimate above cond_warn is logged, or raised as IllConditioned when the
    configuration asks for it. One step of iterative refinement is applied if
    the first solve misses lin_tol.
    """
    tol = get_tolerances()
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatch(f"{what} must be square, got shape {A.shape}")
    vector_rhs = B.ndim == 1
    rhs = B.reshape(-1, 1) if vector_rhs else B
    if rhs.shape[0] != A.shape[0]:
        raise ShapeMismatch(f"right-hand side has {rhs.shape[0]} rows, {what} has {A.shape[0]}")
    if A.shape[0] == 0:
        X = np.zeros_like(rhs)
        return (X.ravel() if vector_rhs else X), 1.0
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(rhs))):
        raise SingularMatrix(f"{what} or right-hand side contains non-finite entries")

    anorm = float(np.linalg.norm(A, 1))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    if np.any(np.diag(lu) == 0.0):
        raise SingularMatrix(f"{what} is exactly singular")
    cond = condition_estimate(lu, anorm)
    if not math.isfinite(cond) or 1.0 / cond < tol.singular_rcond:
        raise SingularMatrix(f"{what} is singular at tolerance (condition estimate {cond:.3e})")
    if cond > tol.cond_warn:
        message = f"{what} is ill-conditioned (condition estimate {cond:.3e})"
        if tol.raise_ill_conditioned:
            raise IllConditioned(message)
        logger.warning(message)

    X = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
    rhs_norm = float(np.linalg.norm(rhs))
    residual = rhs - A @ X
    if float(np.linalg.norm(residual)) > tol.lin_tol * max(rhs_norm, np.finfo(float).tiny):
        X = X + scipy.linalg.lu_solve((lu, piv), residual, check_finite=False)
    return (X.ravel() if vector_rhs else X), cond
