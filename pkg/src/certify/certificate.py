"""
Certificate gains L for the minimizer channel.

With v = u - K(0)x and v2 = Lx the game decouples into a single-player
problem for the maximizer:

    dX = (A_L X + B1 v1) dt + sum_l (C_lL X + D1_l v1) dw_l
    A_L  = A + B K(0) + B2 L,      C_lL = C_l + D_l K(0) + D2_l L
    Q_L  = Q - S^T R^{-1} S + L^T R22 L,   S_L = R12 L

L is admissible when (A_L, C_lL) is mean-square stable and the ARE of this
problem has a stabilizing solution P_L with R11 + sum_l D1_l^T P_L D1_l < 0.
P_L then bounds every outer iterate from above.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.errors import GtareError, IndefiniteWeight, ShapeMismatch, StabilizerNotFound
from src.model import GtareProblem, gains, residual_G
from src.numerics import SymMatrix, eig_max_sym, eig_min_sym, get_tolerances
from src.riccati.inner_are import (
    DefiniteAre,
    Orientation,
    find_initial_gain,
    newton_kleinman,
    shift_continuation_gain,
)
from src.stability import closed_loop_abscissa

logger = logging.getLogger(__name__)


class FailureReason(str, enum.Enum):
    CLOSED_LOOP_UNSTABLE = "ClosedLoopUnstable"
    ARE_SOLVE_FAILED = "AreSolveFailed"
    SIGN_CONDITION_VIOLATED = "SignConditionViolated"


class DecoupledData(NamedTuple):
    A_L: np.ndarray
    C_L: Tuple[np.ndarray, ...]
    Q_L: SymMatrix
    S_L: np.ndarray


@dataclass(frozen=True)
class CertificateReport:
    L: np.ndarray
    admissible: bool
    P_tilde: Optional[SymMatrix] = None
    failure_reason: Optional[FailureReason] = None
    abscissa: float = float("nan")
    sign_margin: Optional[float] = None
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "L": self.L.tolist(),
            "admissible": self.admissible,
            "P_tilde": None if self.P_tilde is None else self.P_tilde.array.tolist(),
            "failure_reason": None if self.failure_reason is None else self.failure_reason.value,
            "abscissa": self.abscissa,
            "sign_margin": self.sign_margin,
            "message": self.message,
        }


def _as_gain(problem: GtareProblem, L) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    if L.shape != (problem.m2, problem.n):
        raise ShapeMismatch(f"certificate L must be {problem.m2}x{problem.n}, got {L.shape}")
    return L


def decoupled_data(problem: GtareProblem, L) -> DecoupledData:
    L = _as_gain(problem, L)
    zero = np.zeros((problem.n, problem.n))
    K0 = gains(problem, zero).K
    A_L = problem.A + problem.B @ K0 + problem.B2 @ L
    C_L = tuple(
        C + D @ K0 + D2 @ L for C, D, D2 in zip(problem.C, problem.D_stack, problem.D2)
    )
    # G(0) = Q - S^T R^{-1} S
    Q_L = residual_G(problem, zero) + L.T @ problem.R22 @ L
    return DecoupledData(A_L=A_L, C_L=C_L, Q_L=Q_L, S_L=problem.R12 @ L)


def certificate_are(problem: GtareProblem, L) -> DefiniteAre:
    """The maximizer's ARE for the decoupled problem (negative orientation)."""
    data = decoupled_data(problem, L)
    return DefiniteAre(
        A=data.A_L,
        C=data.C_L,
        B=problem.B1,
        D=problem.D1,
        Qc=data.Q_L,
        Sc=data.S_L,
        Rc=SymMatrix.symmetrize(problem.R11),
        orientation=Orientation.NEGATIVE,
    )


def check_certificate(problem: GtareProblem, L, T0: Optional[np.ndarray] = None) -> CertificateReport:
    """
    Decide whether L is admissible and compute the bound P_L.

    Failures are reported, not raised. T0 overrides the zero initial gain of
    the Newton iteration (any gain stabilizing the decoupled loop works).
    """
    tol = get_tolerances()
    L = _as_gain(problem, L)
    data = decoupled_data(problem, L)
    alpha = closed_loop_abscissa(data.A_L, data.C_L)
    if not alpha < -tol.stab_tol:
        logger.info(f"Certificate rejected: decoupled loop unstable (abscissa {alpha:.3e})")
        return CertificateReport(
            L=L,
            admissible=False,
            failure_reason=FailureReason.CLOSED_LOOP_UNSTABLE,
            abscissa=alpha,
            message=f"(A_L, C_L) spectral abscissa {alpha:.3e} is not negative",
        )

    try:
        are = certificate_are(problem, L)
    except IndefiniteWeight as err:
        return CertificateReport(
            L=L,
            admissible=False,
            failure_reason=FailureReason.SIGN_CONDITION_VIOLATED,
            abscissa=alpha,
            message=str(err),
        )

    start = np.zeros((problem.m1, problem.n)) if T0 is None else np.asarray(T0, dtype=float)
    try:
        report = newton_kleinman(are, start)
    except GtareError as err:
        logger.info(f"Certificate rejected: ARE solve failed ({err.name}: {err})")
        return CertificateReport(
            L=L,
            admissible=False,
            failure_reason=FailureReason.ARE_SOLVE_FAILED,
            abscissa=alpha,
            message=f"{err.name}: {err}",
        )

    P_tilde = report.Z
    weight = problem.R11 + sum((D1.T @ P_tilde.array @ D1 for D1 in problem.D1), np.zeros_like(problem.R11))
    sign_margin = -eig_max_sym(weight)
    if not sign_margin > tol.psd_tol:
        return CertificateReport(
            L=L,
            admissible=False,
            P_tilde=P_tilde,
            failure_reason=FailureReason.SIGN_CONDITION_VIOLATED,
            abscissa=alpha,
            sign_margin=sign_margin,
            message=f"R11 + sum D1^T P_L D1 has eigenvalue {-sign_margin:.3e} >= 0",
        )

    logger.info(f"Certificate admissible (abscissa {alpha:.3e}, sign margin {sign_margin:.3e})")
    return CertificateReport(
        L=L,
        admissible=True,
        P_tilde=P_tilde,
        abscissa=alpha,
        sign_margin=sign_margin,
    )


def upper_bound_check(P_tilde, P_k, Z_k) -> float:
    """eig_min(P_L - P_k - Z_k); the iterates stay below P_L when this is >= 0."""
    return eig_min_sym(np.asarray(P_tilde, dtype=float) - np.asarray(P_k, dtype=float) - np.asarray(Z_k, dtype=float))


def candidate_certificates(problem: GtareProblem, scales: Sequence[float] = (0.25, 0.5, 1.0)) -> List[np.ndarray]:
    """
    L = 0 followed by scaled LQR-like gains of the minimizer channel.

    The gains come from the proxy ARE (Qc = I, Rc = I) over (A_L, C_lL)
    at L = 0 with inputs (B2, D2).
    """
    n, m2 = problem.n, problem.m2
    candidates = [np.zeros((m2, n))]
    data = decoupled_data(problem, np.zeros((m2, n)))
    proxy = DefiniteAre.create(
        A=data.A_L,
        C=data.C_L,
        B=problem.B2,
        D=problem.D2,
        Qc=np.eye(n),
        Rc=np.eye(m2),
    )
    try:
        try:
            T0 = find_initial_gain(proxy)
        except StabilizerNotFound:
            T0 = shift_continuation_gain(proxy)
        T = newton_kleinman(proxy, T0).T
    except GtareError as err:
        logger.warning(f"No proxy gain for certificate candidates: {err}")
        return candidates
    candidates.extend(float(s) * T for s in scales)
    return candidates


def search_certificate(
    problem: GtareProblem,
    candidates: Optional[Sequence[np.ndarray]] = None,
) -> Optional[CertificateReport]:
    """First admissible report among the candidates, or None."""
    candidates = candidate_certificates(problem) if candidates is None else candidates
    for i, L in enumerate(candidates):
        report = check_certificate(problem, L)
        if report.admissible:
            logger.info(f"Certificate candidate {i} admissible")
            return report
        logger.debug(f"Certificate candidate {i} rejected: {report.failure_reason}")
    return None
