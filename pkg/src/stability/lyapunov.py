"""
Mean-square stability of dX = AX dt + sum_l C_l X dw_l.

The Lyapunov-type operator L*(Y) = YA + A^T Y + sum_l C_l^T Y C_l maps S^n to
itself. It is represented as an N x N matrix in svec coordinates
(N = n(n+1)/2); since svec is an isometry, the spectrum of that matrix is the
spectrum of L* on S^n, and its transpose represents the adjoint (the
second-moment evolution operator).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import scipy.linalg

from src.errors import ShapeMismatch, SingularLyapunov, SingularMatrix
from src.numerics import (
    SymMatrix,
    get_tolerances,
    solve_linear,
    spectrum_summary,
    svec,
    svec_batch,
    unsvec,
    unsvec_basis,
)

logger = logging.getLogger(__name__)


def _noise_stack(C_list: Sequence[np.ndarray], n: int) -> np.ndarray:
    if len(C_list) == 0:
        return np.zeros((0, n, n))
    stack = np.stack([np.asarray(C, dtype=float) for C in C_list])
    if stack.shape[1:] != (n, n):
        raise ShapeMismatch(f"noise matrices must be {n}x{n}, got {stack.shape[1:]}")
    return stack


def apply_lyapunov(A: np.ndarray, C_stack: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """L*(Y) for a single matrix or a (k, n, n) stack of matrices."""
    out = Y @ A + A.T @ Y
    if C_stack.shape[0]:
        if Y.ndim == 2:
            out = out + np.einsum("lji,jk,lkm->im", C_stack, Y, C_stack)
        else:
            out = out + np.einsum("lji,bjk,lkm->bim", C_stack, Y, C_stack)
    return out


@dataclass(frozen=True)
class LyapOperator:
    n: int
    A: np.ndarray
    C: Tuple[np.ndarray, ...]
    matrix_rep: np.ndarray

    @property
    def C_stack(self) -> np.ndarray:
        return _noise_stack(self.C, self.n)

    def apply(self, S) -> SymMatrix:
        return SymMatrix.symmetrize(apply_lyapunov(self.A, self.C_stack, np.asarray(S, dtype=float)))

    @property
    def adjoint_matrix(self) -> np.ndarray:
        """Forward operator X -> AX + XA^T + sum_l C_l X C_l^T in svec coordinates."""
        return self.matrix_rep.T


def build_operator(A, C_list: Sequence[np.ndarray] = ()) -> LyapOperator:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatch(f"A must be square, got shape {A.shape}")
    n = A.shape[0]
    C_stack = _noise_stack(C_list, n)
    # column j is svec(L*(unsvec(e_j)))
    images = apply_lyapunov(A, C_stack, unsvec_basis(n))
    matrix_rep = svec_batch(images).T
    matrix_rep.setflags(write=False)
    return LyapOperator(
        n=n,
        A=A,
        C=tuple(C_stack),
        matrix_rep=matrix_rep,
    )


def spectral_abscissa(op: LyapOperator) -> float:
    return spectrum_summary(op.matrix_rep).max_real_part


def closed_loop_abscissa(A, C_list: Sequence[np.ndarray] = ()) -> float:
    return spectral_abscissa(build_operator(A, C_list))


def is_mean_square_stable(A, C_list: Sequence[np.ndarray] = (), stab_tol: float | None = None) -> bool:
    tol = get_tolerances().stab_tol if stab_tol is None else stab_tol
    return closed_loop_abscissa(A, C_list) < -tol


def solve_generalized_lyapunov(
    A,
    C_list: Sequence[np.ndarray],
    W,
    *,
    op: LyapOperator | None = None,
) -> SymMatrix:
    """
    Solve YA + A^T Y + sum_l C_l^T Y C_l + W = 0 for symmetric Y.

    The N x N operator matrix is factorized directly; desk-scale n keeps the
    O(n^6) cost acceptable.
    """
    tol = get_tolerances()
    op = op if op is not None else build_operator(A, C_list)
    W = np.asarray(W, dtype=float)
    if W.shape != (op.n, op.n):
        raise ShapeMismatch(f"W must be {op.n}x{op.n}, got {W.shape}")
    try:
        y, _ = solve_linear(op.matrix_rep, -svec(0.5 * (W + W.T)), what="Lyapunov operator")
    except SingularMatrix as err:
        raise SingularLyapunov(f"generalized Lyapunov operator is singular: {err}") from err
    Y = unsvec(y)

    w_norm = float(np.linalg.norm(W, "fro"))
    residual = float(np.linalg.norm(op.apply(Y).array + W, "fro"))
    if residual > tol.lyap_tol * max(1.0, w_norm):
        logger.warning(f"Lyapunov residual {residual:.3e} above tolerance (|W| = {w_norm:.3e})")
    return Y


def second_moment(A, C_list: Sequence[np.ndarray], x0, t: float) -> SymMatrix:
    """E[X(t) X(t)^T] for dX = AX dt + sum_l C_l X dw_l, X(0) = x0."""
    op = build_operator(A, C_list)
    x0 = np.asarray(x0, dtype=float).ravel()
    moment0 = svec(np.outer(x0, x0))
    return unsvec(scipy.linalg.expm(t * op.adjoint_matrix) @ moment0)
