"""
Dual-layer iteration for the stabilizing solution of the GTARE.

Outer layer: P_0 = 0, P_k = P_{k-1} + Z_{k-1}.
Inner layer: Z_k is the stabilizing solution of the definite ARE over the
minimizer channel (B2, D2) with drift A_k = A + B K(P_k), noise
C_k = C + D K(P_k), constant term M_k = G(P_k) and weight R22(P_k).
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from src.certify import CertificateReport, SaddleReport, check_certificate, saddle_check, upper_bound_check
from src.errors import (
    DomainExit,
    GtareError,
    MaxOuterExceeded,
    NegativeConstantTerm,
    NotInDomain,
    StabilizerNotFound,
    UnstableSolution,
    UnsupportedShape,
)
from src.model import (
    Gains,
    GtareProblem,
    closed_loop,
    coefficient_blocks,
    ensure_full_rank_r,
    ensure_valid,
    gains,
    in_dom_G,
    n_matrix,
    residual_G,
    schur_r22,
)
from src.numerics import SymMatrix, eig_max_sym, eig_min_sym, get_tolerances, solve_linear
from src.numerics.config import continuation_enabled
from src.riccati import (
    DefiniteAre,
    InnerSolveReport,
    find_initial_gain,
    newton_kleinman,
    shift_continuation_gain,
)
from src.stability import closed_loop_abscissa

logger = logging.getLogger(__name__)

# M_k below this eigenvalue is a theory violation, not round-off
NEGATIVE_M_TOL = 1e-6


@dataclass(frozen=True)
class IterationRecord:
    k: int
    P: SymMatrix
    Z: SymMatrix
    A_k: np.ndarray
    C_k: Tuple[np.ndarray, ...]
    M_k: SymMatrix
    N_k: np.ndarray
    z_eigs: Tuple[float, ...]
    m_eigs: Tuple[float, ...]
    z_norm: float
    residual_norm: float
    inner: InnerSolveReport
    a_k_abscissa: float = math.nan
    c_k_defect: float = math.nan
    bound_slack: Optional[float] = None
    recursion_deviation: Optional[float] = None


@dataclass
class SolveOptions:
    outer_tol: Optional[float] = None
    max_outer: Optional[int] = None
    certificate: Optional[np.ndarray] = None
    inner_tol: Optional[float] = None
    inner_max_iters: Optional[int] = None
    use_continuation: Optional[bool] = None
    audit: bool = True
    saddle: bool = False
    observer: Optional[Callable[[IterationRecord], None]] = None

    def resolved(self) -> "SolveOptions":
        """Copy with unset fields filled from the active tolerance record."""
        tol = get_tolerances()
        return SolveOptions(
            outer_tol=tol.outer_tol if self.outer_tol is None else self.outer_tol,
            max_outer=tol.max_outer if self.max_outer is None else self.max_outer,
            certificate=self.certificate,
            inner_tol=tol.inner_tol if self.inner_tol is None else self.inner_tol,
            inner_max_iters=tol.inner_max_iters if self.inner_max_iters is None else self.inner_max_iters,
            use_continuation=continuation_enabled() if self.use_continuation is None else self.use_continuation,
            audit=self.audit,
            saddle=self.saddle,
            observer=self.observer,
        )


@dataclass
class SolveReport:
    P_star: SymMatrix
    gains: Gains
    residual_norm: float
    outer_iters: int
    history: List[IterationRecord]
    stability_abscissa: float
    certificate_used: Optional[np.ndarray] = None
    certificate: Optional[CertificateReport] = None
    r11_eig_max: float = math.nan
    r22_eig_min: float = math.nan
    schur_eig_max: float = math.nan
    saddle: Optional[SaddleReport] = None
    elapsed_seconds: float = 0.0
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "status": "ok",
            "P_star": self.P_star.array.tolist(),
            "K1": self.gains.K1.tolist(),
            "K2": self.gains.K2.tolist(),
            "residual_norm": self.residual_norm,
            "outer_iters": self.outer_iters,
            "stability_abscissa": self.stability_abscissa,
            "r11_eig_max": self.r11_eig_max,
            "r22_eig_min": self.r22_eig_min,
            "schur_eig_max": self.schur_eig_max,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "saddle": None if self.saddle is None else self.saddle.to_dict(),
            "elapsed_seconds": self.elapsed_seconds,
        }


def _subproblem(problem: GtareProblem, P) -> Tuple[DefiniteAre, Gains, SymMatrix]:
    blocks = coefficient_blocks(problem, P)
    K = gains(problem, P, blocks)
    A_k, C_k = closed_loop(problem, P)
    M_k = residual_G(problem, P, blocks)
    are = DefiniteAre(
        A=A_k,
        C=C_k,
        B=problem.B2,
        D=problem.D2,
        Qc=M_k,
        Sc=np.zeros((problem.m2, problem.n)),
        Rc=blocks.R22P,
    )
    return are, K, M_k


def init_subproblem(problem: GtareProblem) -> DefiniteAre:
    """Inner ARE at P = 0: drift A - B R^{-1} S, constant Q - S^T R^{-1} S, weight R22."""
    return _subproblem(problem, np.zeros((problem.n, problem.n)))[0]


def build_subproblem(problem: GtareProblem, P_k) -> DefiniteAre:
    are, _, M_k = _subproblem(problem, P_k)
    m_min = eig_min_sym(M_k)
    if m_min < -NEGATIVE_M_TOL:
        raise NegativeConstantTerm(f"M_k = G(P_k) has eigenvalue {m_min:.3e} < 0")
    return are


def _initial_gain(are: DefiniteAre, hints: List[np.ndarray], options: SolveOptions, k: int) -> np.ndarray:
    try:
        return find_initial_gain(are, hints)
    except StabilizerNotFound:
        if not options.use_continuation:
            raise
        logger.info(f"Outer step {k}: no stabilizing hint, building one by shift continuation")
        return shift_continuation_gain(are)


def _certificate_hint(problem: GtareProblem, P_k, L: np.ndarray) -> np.ndarray:
    """L - (K2(P_k) - K2(0)): player 2 plays the certificate feedback in total."""
    zero = np.zeros((problem.n, problem.n))
    return L + gains(problem, zero).K2 - gains(problem, P_k).K2


def _make_record(
    problem: GtareProblem,
    k: int,
    P_k: np.ndarray,
    are: DefiniteAre,
    inner: InnerSolveReport,
    certificate: Optional[CertificateReport],
) -> IterationRecord:
    tol = get_tolerances()
    Z_k = inner.Z.array
    K = gains(problem, P_k)
    N_k = n_matrix(problem, P_k, Z_k, K)

    P_next = P_k + Z_k
    blocks_next = coefficient_blocks(problem, P_next)
    G_next = residual_G(problem, P_next, blocks_next).array

    # a_k: the loop (A_k + B2 T, C_k + D2 T) with T = -R22(P_k + Z_k)^{-1} N2
    N1, N2 = N_k[: problem.m1], N_k[problem.m1:]
    T_k, _ = solve_linear(blocks_next.R22P.array, -N2, what="R22(P_k + Z_k)")
    a_k = closed_loop_abscissa(
        are.A + problem.B2 @ T_k,
        tuple(C + D2 @ T_k for C, D2 in zip(are.C, problem.D2)),
    )
    if not a_k < -tol.stab_tol:
        logger.warning(f"Outer step {k}: operator of the updated loop has abscissa {a_k:.3e}")

    c_k = _c_k_defect(blocks_next, G_next, N1, N2)
    if c_k > 1e-7:
        logger.warning(f"Outer step {k}: G(P_k + Z_k) identity defect {c_k:.3e}")

    bound_slack = None
    if certificate is not None and certificate.admissible:
        bound_slack = upper_bound_check(certificate.P_tilde, P_k, Z_k)
        if bound_slack < -1e-6:
            logger.warning(f"Outer step {k}: iterate exceeds the certificate bound (slack {bound_slack:.3e})")

    return IterationRecord(
        k=k,
        P=SymMatrix.symmetrize(P_k),
        Z=inner.Z,
        A_k=are.A,
        C_k=are.C,
        M_k=are.Qc,
        N_k=N_k,
        z_eigs=tuple(float(v) for v in inner.Z.eigvalsh()),
        m_eigs=tuple(float(v) for v in are.Qc.eigvalsh()),
        z_norm=inner.Z.norm(),
        residual_norm=float(np.linalg.norm(G_next, "fro")),
        inner=inner,
        a_k_abscissa=a_k,
        c_k_defect=c_k,
        bound_slack=bound_slack,
    )


def _c_k_defect(blocks_next, G_next: np.ndarray, N1: np.ndarray, N2: np.ndarray) -> float:
    """Relative defect of G(P + Z) = -N^T R#(P + Z)^{-1} N with N = N1 - R12 R22^{-1} N2."""
    if N1.shape[0] == 0:
        # no maximizer: G(P + Z) vanishes exactly
        return float(np.linalg.norm(G_next) / max(1.0, np.linalg.norm(G_next)))
    R22 = blocks_next.R22P.array
    R12 = blocks_next.R12P
    X, _ = solve_linear(R22, np.hstack([N2, R12.T]), what="R22(P_k + Z_k)")
    n = N2.shape[1]
    N_hat = N1 - R12 @ X[:, :n]
    schur = blocks_next.R11P.array - R12 @ X[:, n:]
    Y, _ = solve_linear(schur, N_hat, what="Schur complement")
    defect = G_next + N_hat.T @ Y
    return float(np.linalg.norm(defect) / max(1.0, np.linalg.norm(G_next)))


def _inner_solve(problem: GtareProblem, k: int, are: DefiniteAre, hints: List[np.ndarray], options: SolveOptions):
    T0 = _initial_gain(are, hints, options, k)
    return newton_kleinman(are, T0, options.inner_tol, options.inner_max_iters)


def outer_step(
    problem: GtareProblem,
    previous: IterationRecord,
    options: Optional[SolveOptions] = None,
    certificate: Optional[CertificateReport] = None,
) -> IterationRecord:
    """One outer update P_k = P_{k-1} + Z_{k-1} followed by the inner solve for Z_k."""
    options = (options or SolveOptions()).resolved()
    k = previous.k + 1
    P_k = previous.P.array + previous.Z.array
    if not in_dom_G(problem, P_k):
        raise DomainExit(f"P_{k} left Dom G (R22(P) > 0 and R11(P) < 0 no longer both hold)")
    are = build_subproblem(problem, P_k)

    K2_prev = gains(problem, previous.P.array).K2
    K2_now = gains(problem, P_k).K2
    hints = [previous.inner.T, K2_prev + previous.inner.T - K2_now]
    if options.certificate is not None:
        hints.append(_certificate_hint(problem, P_k, np.asarray(options.certificate, dtype=float)))

    inner = _inner_solve(problem, k, are, hints, options)
    record = _make_record(problem, k, P_k, are, inner, certificate)
    if options.audit:
        record = replace(record, recursion_deviation=recursion_audit(problem, previous, record))
    return record


def recursion_audit(problem: GtareProblem, previous: IterationRecord, current: IterationRecord) -> float:
    """
    Max relative deviation between the recursive updates

        A_k = A_{k-1} - B R(P_k)^{-1} N_{k-1},   C_k = C_{k-1} - D R(P_k)^{-1} N_{k-1}
        M_k = -Nh^T R#(P_k)^{-1} Nh,  Nh = N1_{k-1} - R12(P_k) R22(P_k)^{-1} N2_{k-1}

    and the closed forms stored in ``current``.
    """
    P_k = current.P.array
    blocks = coefficient_blocks(problem, P_k)
    X, _ = solve_linear(blocks.RP.array, previous.N_k, what="R(P_k)")

    def rel(recursive: np.ndarray, closed: np.ndarray) -> float:
        return float(np.linalg.norm(recursive - closed) / max(1.0, np.linalg.norm(closed)))

    deviations = [rel(previous.A_k - problem.B @ X, current.A_k)]
    for C_prev, C_now, D in zip(previous.C_k, current.C_k, problem.D_stack):
        deviations.append(rel(C_prev - D @ X, C_now))

    if problem.m1 > 0:
        N1 = previous.N_k[: problem.m1]
        N2 = previous.N_k[problem.m1:]
        Y, _ = solve_linear(blocks.R22P.array, N2, what="R22(P_k)")
        N_hat = N1 - blocks.R12P @ Y
        W, _ = solve_linear(schur_r22(problem, P_k, blocks).array, N_hat, what="Schur complement")
        deviations.append(rel(-N_hat.T @ W, current.M_k.array))
    else:
        deviations.append(rel(np.zeros_like(current.M_k.array), current.M_k.array))
    return max(deviations)


def _converged(record: IterationRecord, outer_tol: float) -> bool:
    return record.z_norm <= outer_tol * max(1.0, record.P.norm())


def solve_gtare(problem: GtareProblem, options: Optional[SolveOptions] = None) -> SolveReport:
    """
    Stabilizing solution of the GTARE by the dual-layer iteration.

    Stops when |Z_k| <= outer_tol * max(1, |P_k|) and reports P* = P_K + Z_K.
    A certificate gain, when given, is checked first; an admissible one adds
    an inner warm-start hint and the upper-bound audit of every iterate.
    """
    started = time.perf_counter()
    options = (options or SolveOptions()).resolved()
    tol = get_tolerances()

    ensure_valid(problem)
    if problem.m2 == 0:
        raise UnsupportedShape("the iteration needs a minimizer channel (m2 > 0)")
    ensure_full_rank_r(problem)
    zero = np.zeros((problem.n, problem.n))
    if not in_dom_G(problem, zero):
        raise NotInDomain("P = 0 is not in Dom G: need R22 > 0 and R11 < 0")

    certificate = None
    if options.certificate is not None:
        certificate = check_certificate(problem, options.certificate)
        if not certificate.admissible:
            logger.warning(f"Certificate not admissible ({certificate.failure_reason.value}); solving without bound audit")

    history: List[IterationRecord] = []
    try:
        are = init_subproblem(problem)
        hints = []
        if options.certificate is not None:
            hints.append(_certificate_hint(problem, zero, np.asarray(options.certificate, dtype=float)))
        inner = _inner_solve(problem, 0, are, hints, options)
        record = _make_record(problem, 0, zero, are, inner, certificate)
        history.append(record)
        _notify(options, record)

        while not _converged(record, options.outer_tol):
            if len(history) >= options.max_outer:
                raise MaxOuterExceeded(
                    f"no convergence after {options.max_outer} outer iterations (|Z| = {record.z_norm:.3e})"
                )
            record = outer_step(problem, record, options, certificate)
            history.append(record)
            _notify(options, record)
    except MaxOuterExceeded:
        raise
    except GtareError as err:
        k = len(history)
        raise type(err)(f"outer iteration {k}: {err}") from err

    P_star = record.P + record.Z
    blocks = coefficient_blocks(problem, P_star)
    K = gains(problem, P_star, blocks)
    residual = residual_G(problem, P_star, blocks).norm()
    A_cl, C_cl = closed_loop(problem, P_star)
    alpha = closed_loop_abscissa(A_cl, C_cl)
    if not alpha < -tol.stab_tol:
        raise UnstableSolution(f"closed loop at P* is not mean-square stable (abscissa {alpha:.3e})")

    report = SolveReport(
        P_star=P_star,
        gains=K,
        residual_norm=residual,
        outer_iters=len(history),
        history=history,
        stability_abscissa=alpha,
        certificate_used=None if certificate is None or not certificate.admissible else certificate.L,
        certificate=certificate,
        r11_eig_max=eig_max_sym(blocks.R11P),
        r22_eig_min=eig_min_sym(blocks.R22P),
    )
    try:
        report.schur_eig_max = eig_max_sym(schur_r22(problem, P_star, blocks))
    except GtareError as err:
        report.notes.append(f"Schur complement unavailable: {err}")
    if not (report.r22_eig_min > tol.psd_tol and report.r11_eig_max < -tol.psd_tol):
        raise DomainExit(
            f"P* is outside Dom G (min eig R22(P*) = {report.r22_eig_min:.3e}, "
            f"max eig R11(P*) = {report.r11_eig_max:.3e})"
        )
    if options.saddle:
        report.saddle = saddle_check(problem, P_star, K)
    report.elapsed_seconds = time.perf_counter() - started
    logger.info(
        f"Converged after {report.outer_iters} outer iterations: residual {residual:.3e}, "
        f"abscissa {alpha:.3e} ({report.elapsed_seconds:.3f}s)"
    )
    return report


def _notify(options: SolveOptions, record: IterationRecord) -> None:
    logger.info(f"Outer step {record.k}: |Z| = {record.z_norm:.3e}, |G(P + Z)| = {record.residual_norm:.3e}")
    if options.observer is not None:
        options.observer(record)
