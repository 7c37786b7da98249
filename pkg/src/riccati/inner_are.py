"""
Stabilizing solutions of stochastic AREs with a sign-definite quadratic term:

    F(Z) = L*(Z) + Qc - S(Z)^T R(Z)^{-1} S(Z) = 0
    S(Z) = B^T Z + sum_l D_l^T Z C_l + Sc,   R(Z) = Rc + sum_l D_l^T Z D_l

solved by Newton-Kleinman iteration (each step one generalized Lyapunov
solve). Negative orientation (R(Z) < 0 along the iteration) is handled by
negating (Qc, Sc, Rc) and the solution; the gain T(Z) = -R(Z)^{-1} S(Z) is
unchanged by that flip.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from src.errors import (
    IndefiniteWeight,
    MaxItersExceeded,
    OrientationLost,
    ShapeMismatch,
    SingularMatrix,
    StabilizerNotFound,
    UnstableSolution,
)
from src.numerics import (
    SymMatrix,
    eig_max_sym,
    eig_min_sym,
    get_tolerances,
    is_psd,
    solve_linear,
)
from src.stability import apply_lyapunov, closed_loop_abscissa, solve_generalized_lyapunov

logger = logging.getLogger(__name__)


class Orientation(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"

    @property
    def sign(self) -> float:
        return 1.0 if self is Orientation.POSITIVE else -1.0


@dataclass(frozen=True)
class DefiniteAre:
    A: np.ndarray
    C: Tuple[np.ndarray, ...]
    B: np.ndarray
    D: Tuple[np.ndarray, ...]
    Qc: SymMatrix
    Sc: np.ndarray
    Rc: SymMatrix
    orientation: Orientation = Orientation.POSITIVE

    def __post_init__(self):
        n, m = self.B.shape
        if self.A.shape != (n, n):
            raise ShapeMismatch(f"A must be {n}x{n}, got {self.A.shape}")
        if len(self.C) != len(self.D):
            raise ShapeMismatch(f"{len(self.C)} noise matrices C but {len(self.D)} matrices D")
        if any(C.shape != (n, n) for C in self.C) or any(D.shape != (n, m) for D in self.D):
            raise ShapeMismatch("noise matrices do not match the drift/input dimensions")
        if self.Qc.shape != (n, n) or self.Rc.shape != (m, m) or self.Sc.shape != (m, n):
            raise ShapeMismatch(
                f"weights have shapes Qc {self.Qc.shape}, Sc {self.Sc.shape}, Rc {self.Rc.shape} for n={n}, m={m}"
            )
        psd_tol = get_tolerances().psd_tol
        if self.orientation is Orientation.POSITIVE and eig_min_sym(self.Rc) <= psd_tol:
            raise IndefiniteWeight(f"Rc must be positive definite (eig_min = {eig_min_sym(self.Rc):.3e})")
        if self.orientation is Orientation.NEGATIVE and eig_max_sym(self.Rc) >= -psd_tol:
            raise IndefiniteWeight(f"Rc must be negative definite (eig_max = {eig_max_sym(self.Rc):.3e})")

    @classmethod
    def create(cls, *, A, B, Qc, Rc, C=(), D=(), Sc=None, orientation=Orientation.POSITIVE) -> "DefiniteAre":
        B = np.asarray(B, dtype=float)
        n, m = B.shape
        return cls(
            A=np.asarray(A, dtype=float),
            C=tuple(np.asarray(c, dtype=float) for c in C),
            B=B,
            D=tuple(np.asarray(d, dtype=float) for d in D),
            Qc=Qc if isinstance(Qc, SymMatrix) else SymMatrix(Qc),
            Sc=np.zeros((m, n)) if Sc is None else np.asarray(Sc, dtype=float),
            Rc=Rc if isinstance(Rc, SymMatrix) else SymMatrix(Rc),
            orientation=Orientation(orientation),
        )

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def r(self) -> int:
        return len(self.C)

    @property
    def C_stack(self) -> np.ndarray:
        return np.stack(self.C) if self.C else np.zeros((0, self.n, self.n))

    @property
    def D_stack(self) -> np.ndarray:
        return np.stack(self.D) if self.D else np.zeros((0, self.n, self.m))

    def normalized(self) -> "DefiniteAre":
        """The positive-orientation equivalent: (Qc, Sc, Rc) negated when orientation is negative."""
        if self.orientation is Orientation.POSITIVE:
            return self
        return replace(self, Qc=-self.Qc, Sc=-self.Sc, Rc=-self.Rc, orientation=Orientation.POSITIVE)

    def closed_loop(self, T: np.ndarray) -> Tuple[np.ndarray, Tuple[np.ndarray, ...]]:
        return self.A + self.B @ T, tuple(C + D @ T for C, D in zip(self.C, self.D))


@dataclass(frozen=True)
class InnerSolveReport:
    Z: SymMatrix
    T: np.ndarray
    newton_iters: int
    residual_norm: float
    monotone_violation: float
    abscissa: float
    weight_margin: float


def _sandwich(left: np.ndarray, Z: np.ndarray, right: np.ndarray) -> np.ndarray:
    return np.einsum("lji,jk,lkm->im", left, Z, right)


def _cross_and_weight(are: DefiniteAre, Z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    C, D = are.C_stack, are.D_stack
    SZ = are.B.T @ Z + _sandwich(D, Z, C) + are.Sc
    RZ = are.Rc.array + _sandwich(D, Z, D)
    return SZ, 0.5 * (RZ + RZ.T)


def are_gain(are: DefiniteAre, Z) -> np.ndarray:
    """T(Z) = -R(Z)^{-1} S(Z)."""
    SZ, RZ = _cross_and_weight(are, np.asarray(Z, dtype=float))
    T, _ = solve_linear(RZ, -SZ, what="ARE quadratic weight")
    return T


def are_residual(are: DefiniteAre, Z) -> SymMatrix:
    Z = np.asarray(Z, dtype=float)
    SZ, _ = _cross_and_weight(are, Z)
    T = are_gain(are, Z)
    return SymMatrix.symmetrize(apply_lyapunov(are.A, are.C_stack, Z) + are.Qc.array + SZ.T @ T)


def lambda_matrix(are: DefiniteAre, Z) -> SymMatrix:
    """[[L*(Z) + Qc, S(Z)^T], [S(Z), R(Z)]]."""
    Z = np.asarray(Z, dtype=float)
    SZ, RZ = _cross_and_weight(are, Z)
    top = apply_lyapunov(are.A, are.C_stack, Z) + are.Qc.array
    return SymMatrix.symmetrize(np.block([[top, SZ.T], [SZ, RZ]]))


def check_zero_in_gamma(are: DefiniteAre) -> bool:
    """Lambda(0) >= 0 and Rc > 0 for the orientation-normalized ARE."""
    normalized = are.normalized()
    tol = get_tolerances().psd_tol
    return is_psd(lambda_matrix(normalized, np.zeros((are.n, are.n))), tol) and eig_min_sym(normalized.Rc) > tol


def _abscissa(are: DefiniteAre, T: np.ndarray) -> float:
    A_cl, C_cl = are.closed_loop(T)
    return closed_loop_abscissa(A_cl, C_cl)


def find_initial_gain(are: DefiniteAre, hints: Sequence[np.ndarray] = ()) -> np.ndarray:
    """First of (zero gain, *hints) whose closed loop is mean-square stable."""
    stab_tol = get_tolerances().stab_tol
    candidates = [np.zeros((are.m, are.n))] + [np.asarray(h, dtype=float) for h in hints]
    for i, T in enumerate(candidates):
        if T.shape != (are.m, are.n):
            logger.debug(f"Skipping initial gain candidate {i}: shape {T.shape}")
            continue
        alpha = _abscissa(are, T)
        if alpha < -stab_tol:
            logger.debug(f"Initial gain candidate {i} accepted (abscissa {alpha:.3e})")
            return T
        logger.debug(f"Initial gain candidate {i} rejected (abscissa {alpha:.3e})")
    raise StabilizerNotFound(
        f"none of {len(candidates)} candidate gains stabilizes the closed loop; "
        "supply a certificate gain L or enable shift continuation"
    )


def shift_continuation_gain(are: DefiniteAre, max_steps: int = 200, min_step: float = 1e-8) -> np.ndarray:
    """
    Build a stabilizing gain for (A, C, B, D) by continuation in a drift shift.

    The proxy ARE (Qc = I, Sc = 0, Rc = I) on A - beta*I is solved for a
    decreasing sequence of shifts. The first shift makes the zero gain
    stabilizing; each next shift is chosen so the previous solution's gain
    still stabilizes with abscissa margin halved.
    """
    tol = get_tolerances()
    n, m = are.n, are.m
    T = np.zeros((m, n))
    alpha = _abscissa(are, T)
    if alpha < -tol.stab_tol:
        return T

    beta = max(0.0, alpha / 2.0 + 1.0)
    for step in range(max_steps):
        proxy = DefiniteAre.create(
            A=are.A - beta * np.eye(n),
            C=are.C,
            B=are.B,
            D=are.D,
            Qc=np.eye(n),
            Rc=np.eye(m),
        )
        T = newton_kleinman(proxy, T).T
        alpha_unshifted = _abscissa(are, T)
        logger.debug(f"Continuation step {step}: shift {beta:.6g}, unshifted abscissa {alpha_unshifted:.3e}")
        if alpha_unshifted < -tol.stab_tol:
            return T
        if beta == 0.0:
            break
        alpha_shifted = alpha_unshifted - 2.0 * beta
        next_beta = max(0.0, beta + alpha_shifted / 4.0)
        if next_beta > 0.0 and beta - next_beta < min_step:
            break
        beta = next_beta
    raise StabilizerNotFound(
        f"shift continuation stalled at shift {beta:.3e}; the (A, B, C, D) channel may not be stabilizable"
    )


def newton_kleinman(
    are: DefiniteAre,
    T0: np.ndarray,
    inner_tol: Optional[float] = None,
    max_iters: Optional[int] = None,
) -> InnerSolveReport:
    """
    Newton-Kleinman iteration from a stabilizing gain T0.

    Each step solves
        Z (A + B T) + (A + B T)^T Z + sum_l (C_l + D_l T)^T Z (C_l + D_l T)
            + Qc + T^T Rc T + Sc^T T + T^T Sc = 0
    and updates T = T(Z). Stops when both the step and the ARE residual are
    below inner_tol relative to max(1, |Z|).
    """
    tol = get_tolerances()
    inner_tol = tol.inner_tol if inner_tol is None else inner_tol
    max_iters = tol.inner_max_iters if max_iters is None else max_iters

    sign = are.orientation.sign
    work = are.normalized()
    T = np.asarray(T0, dtype=float)
    alpha0 = _abscissa(work, T)
    if not alpha0 < -tol.stab_tol:
        raise StabilizerNotFound(f"initial gain does not stabilize the closed loop (abscissa {alpha0:.3e})")

    Qn, Rn, Sn = work.Qc.array, work.Rc.array, work.Sc
    Z_prev: Optional[np.ndarray] = None
    prev_step = math.inf
    monotone_violation = 0.0

    for j in range(1, max_iters + 1):
        A_cl, C_cl = work.closed_loop(T)
        W = Qn + T.T @ Rn @ T + Sn.T @ T + T.T @ Sn
        Z = solve_generalized_lyapunov(A_cl, C_cl, W).array

        SZ, RZ = _cross_and_weight(work, Z)
        margin = eig_min_sym(RZ)
        if margin <= tol.psd_tol:
            raise OrientationLost(
                f"quadratic weight lost definiteness at Newton step {j} (eig_min {sign * margin:.3e})"
            )
        try:
            T, _ = solve_linear(RZ, -SZ, what="ARE quadratic weight")
        except SingularMatrix as err:
            raise OrientationLost(f"quadratic weight singular at Newton step {j}: {err}") from err

        scale = max(1.0, float(np.linalg.norm(Z, "fro")))
        residual = float(np.linalg.norm(apply_lyapunov(work.A, work.C_stack, Z) + Qn + SZ.T @ T, "fro"))
        step = math.inf if Z_prev is None else float(np.linalg.norm(Z - Z_prev, "fro"))
        if Z_prev is not None:
            # Z_1 >= Z_2 >= ... in the Loewner order
            monotone_violation = max(monotone_violation, -eig_min_sym(Z_prev - Z))
        logger.debug(f"Newton step {j}: residual {residual:.3e}, step {step:.3e}")

        stagnated = Z_prev is not None and step >= 0.5 * prev_step
        if residual <= inner_tol * scale and (step <= inner_tol * scale or stagnated):
            alpha = _abscissa(work, T)
            if not alpha < -tol.stab_tol:
                raise UnstableSolution(f"ARE solution does not stabilize the closed loop (abscissa {alpha:.3e})")
            return InnerSolveReport(
                Z=SymMatrix.symmetrize(sign * Z),
                T=T,
                newton_iters=j,
                residual_norm=residual,
                monotone_violation=monotone_violation,
                abscissa=alpha,
                weight_margin=margin,
            )
        Z_prev = Z
        prev_step = step

    raise MaxItersExceeded(f"Newton-Kleinman did not converge in {max_iters} iterations")
