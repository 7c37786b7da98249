"""
The GTARE map and its coefficient blocks.

For P in S^n:
    Q(P)  = PA + A^T P + sum_l C_l^T P C_l + Q
    S(P)  = B^T P + sum_l D_l^T P C_l + S          (B = [B1 B2], D_l = [D1_l D2_l])
    R(P)  = R + sum_l D_l^T P D_l
    G(P)  = Q(P) - S(P)^T R(P)^{-1} S(P)
and the feedback gains [K1; K2] = -R(P)^{-1} S(P).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.errors import ShapeMismatch, SingularMatrix, SingularR22, SingularRP
from src.model.problem import GtareProblem
from src.numerics import SymMatrix, eig_min_sym, get_tolerances, solve_linear

logger = logging.getLogger(__name__)


def _sandwich(left: np.ndarray, P: np.ndarray, right: np.ndarray) -> np.ndarray:
    """sum_l left_l^T P right_l over two (r, n, .) stacks; zero when r = 0."""
    return np.einsum("lji,jk,lkm->im", left, P, right)


def _as_square(problem: GtareProblem, P, name: str = "P") -> np.ndarray:
    arr = np.asarray(P, dtype=float)
    if arr.shape != (problem.n, problem.n):
        raise ShapeMismatch(f"{name} must be {problem.n}x{problem.n}, got {arr.shape}")
    return arr


@dataclass(frozen=True)
class CoefficientBlocks:
    QP: SymMatrix
    SP: np.ndarray
    RP: SymMatrix
    m1: int

    @property
    def S1P(self) -> np.ndarray:
        return self.SP[: self.m1]

    @property
    def S2P(self) -> np.ndarray:
        return self.SP[self.m1:]

    @property
    def R11P(self) -> SymMatrix:
        return SymMatrix.symmetrize(self.RP.array[: self.m1, : self.m1])

    @property
    def R12P(self) -> np.ndarray:
        return self.RP.array[: self.m1, self.m1:]

    @property
    def R22P(self) -> SymMatrix:
        return SymMatrix.symmetrize(self.RP.array[self.m1:, self.m1:])


@dataclass(frozen=True)
class Gains:
    K1: np.ndarray
    K2: np.ndarray

    @property
    def K(self) -> np.ndarray:
        return np.vstack([self.K1, self.K2])

    @classmethod
    def from_stacked(cls, K: np.ndarray, m1: int) -> "Gains":
        return cls(K1=K[:m1], K2=K[m1:])


def coefficient_blocks(problem: GtareProblem, P) -> CoefficientBlocks:
    P = _as_square(problem, P)
    C = problem.C_stack
    D = problem.D_stack
    QP = P @ problem.A + problem.A.T @ P + _sandwich(C, P, C) + problem.Q
    SP = problem.B.T @ P + _sandwich(D, P, C) + problem.S
    RP = problem.R + _sandwich(D, P, D)
    return CoefficientBlocks(
        QP=SymMatrix.symmetrize(QP),
        SP=SP,
        RP=SymMatrix.symmetrize(RP),
        m1=problem.m1,
    )


def gains(problem: GtareProblem, P, blocks: Optional[CoefficientBlocks] = None) -> Gains:
    blocks = blocks if blocks is not None else coefficient_blocks(problem, P)
    try:
        K, _ = solve_linear(blocks.RP.array, -blocks.SP, what="R(P)")
    except SingularMatrix as err:
        raise SingularRP(str(err)) from err
    return Gains.from_stacked(K, problem.m1)


def residual_G(problem: GtareProblem, P, blocks: Optional[CoefficientBlocks] = None) -> SymMatrix:
    blocks = blocks if blocks is not None else coefficient_blocks(problem, P)
    K = gains(problem, P, blocks).K
    # S^T R^{-1} S = -S^T K
    return SymMatrix.symmetrize(blocks.QP.array + blocks.SP.T @ K)


def in_dom_G(problem: GtareProblem, P) -> bool:
    """R22(P) > 0 and R11(P) < 0, both with margin psd_tol."""
    psd_tol = get_tolerances().psd_tol
    blocks = coefficient_blocks(problem, P)
    return eig_min_sym(blocks.R22P) > psd_tol and eig_min_sym(-blocks.R11P) > psd_tol


def schur_r22(problem: GtareProblem, P, blocks: Optional[CoefficientBlocks] = None) -> SymMatrix:
    """R11(P) - R12(P) R22(P)^{-1} R21(P)."""
    blocks = blocks if blocks is not None else coefficient_blocks(problem, P)
    R12 = blocks.R12P
    try:
        X, _ = solve_linear(blocks.R22P.array, R12.T, what="R22(P)")
    except SingularMatrix as err:
        raise SingularR22(str(err)) from err
    return SymMatrix.symmetrize(blocks.R11P.array - R12 @ X)


def closed_loop_from_gains(problem: GtareProblem, feedback: Gains) -> Tuple[np.ndarray, Tuple[np.ndarray, ...]]:
    K = feedback.K
    A_cl = problem.A + problem.B @ K
    C_cl = tuple(C + D @ K for C, D in zip(problem.C, problem.D_stack))
    return A_cl, C_cl


def closed_loop(problem: GtareProblem, P) -> Tuple[np.ndarray, Tuple[np.ndarray, ...]]:
    """(A + B K(P), C_l + D_l K(P))."""
    return closed_loop_from_gains(problem, gains(problem, P))


def n_matrix(problem: GtareProblem, P, Z, feedback: Optional[Gains] = None) -> np.ndarray:
    """
    N(P, Z) = B^T Z + sum_l D_l^T Z (C_l + D_l K(P)), stacked as [N1; N2].

    Linear in Z; the closed loop is the one induced by K(P) unless gains are
    passed explicitly.
    """
    Z = _as_square(problem, Z, "Z")
    feedback = feedback if feedback is not None else gains(problem, P)
    _, C_cl = closed_loop_from_gains(problem, feedback)
    C_cl_stack = np.stack(C_cl) if C_cl else np.zeros((0, problem.n, problem.n))
    return problem.B.T @ Z + _sandwich(problem.D_stack, Z, C_cl_stack)
