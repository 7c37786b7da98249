from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from src.errors import InvalidProblem, SingularMatrix, UnsupportedRankDeficientR
from src.numerics import get_tolerances, solve_linear

logger = logging.getLogger(__name__)

# Coefficients of the zero-sum game
#   dX = (AX + B1 u1 + B2 u2) dt + sum_l (C_l X + D1_l u1 + D2_l u2) dw_l
# with running cost [X; u1; u2]^T [[Q, S1^T, S2^T], [S1, R11, R12], [S2, R21, R22]] [X; u1; u2].
# Player 1 maximizes, player 2 minimizes.


def _frozen(value, *, ndmin: int = 2) -> np.ndarray:
    arr = np.array(value, dtype=float, ndmin=ndmin)
    arr.setflags(write=False)
    return arr


def _frozen_list(values: Optional[Sequence]) -> Tuple[np.ndarray, ...]:
    if values is None:
        return ()
    return tuple(_frozen(v) for v in values)


@dataclass(frozen=True)
class GtareProblem:
    n: int
    m1: int
    m2: int
    r: int
    A: np.ndarray
    C: Tuple[np.ndarray, ...]
    B1: np.ndarray
    B2: np.ndarray
    D1: Tuple[np.ndarray, ...]
    D2: Tuple[np.ndarray, ...]
    Q: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    R11: np.ndarray
    R12: np.ndarray
    R22: np.ndarray

    @classmethod
    def from_arrays(
        cls,
        *,
        A,
        B1,
        B2,
        Q,
        R11,
        R22,
        C: Optional[Sequence] = None,
        D1: Optional[Sequence] = None,
        D2: Optional[Sequence] = None,
        S1=None,
        S2=None,
        R12=None,
    ) -> "GtareProblem":
        """
        Build a problem from arrays, deriving the dimensions from their shapes.

        Missing cross terms (S1, S2, R12) default to zero. Missing noise input
        matrices default to zero for every noise channel in C; with C omitted
        the game is deterministic (r = 0).
        """
        A = _frozen(A)
        B1 = _frozen(B1)
        B2 = _frozen(B2)
        n = A.shape[0]
        m1 = B1.shape[1]
        m2 = B2.shape[1]
        C_t = _frozen_list(C)
        r = len(C_t)
        D1_t = _frozen_list(D1) if D1 is not None else tuple(_frozen(np.zeros((n, m1))) for _ in range(r))
        D2_t = _frozen_list(D2) if D2 is not None else tuple(_frozen(np.zeros((n, m2))) for _ in range(r))
        return cls(
            n=n,
            m1=m1,
            m2=m2,
            r=r,
            A=A,
            C=C_t,
            B1=B1,
            B2=B2,
            D1=D1_t,
            D2=D2_t,
            Q=_frozen(Q),
            S1=_frozen(np.zeros((m1, n)) if S1 is None else S1),
            S2=_frozen(np.zeros((m2, n)) if S2 is None else S2),
            R11=_frozen(R11),
            R12=_frozen(np.zeros((m1, m2)) if R12 is None else R12),
            R22=_frozen(R22),
        )

    @property
    def m(self) -> int:
        return self.m1 + self.m2

    @property
    def R21(self) -> np.ndarray:
        return self.R12.T

    @property
    def R(self) -> np.ndarray:
        return np.block([[self.R11, self.R12], [self.R21, self.R22]])

    @property
    def S(self) -> np.ndarray:
        return np.vstack([self.S1, self.S2])

    @property
    def B(self) -> np.ndarray:
        return np.hstack([self.B1, self.B2])

    @property
    def C_stack(self) -> np.ndarray:
        if self.r == 0:
            return np.zeros((0, self.n, self.n))
        return np.stack(self.C)

    @property
    def D_stack(self) -> np.ndarray:
        """(r, n, m1 + m2) stack of [D1_l D2_l]."""
        if self.r == 0:
            return np.zeros((0, self.n, self.m))
        return np.stack([np.hstack([d1, d2]) for d1, d2 in zip(self.D1, self.D2)])

    @property
    def D2_stack(self) -> np.ndarray:
        if self.r == 0:
            return np.zeros((0, self.n, self.m2))
        return np.stack(self.D2)

    def with_changes(self, **changes) -> "GtareProblem":
        """Copy with some coefficient arrays replaced (dimensions re-derived)."""
        fields = {
            "A": self.A, "B1": self.B1, "B2": self.B2, "Q": self.Q,
            "R11": self.R11, "R22": self.R22, "C": self.C, "D1": self.D1,
            "D2": self.D2, "S1": self.S1, "S2": self.S2, "R12": self.R12,
        }
        fields.update(changes)
        return GtareProblem.from_arrays(**fields)


def _check_shape(diagnostics: List[str], name: str, arr: np.ndarray, expected: Tuple[int, int]) -> bool:
    if arr.ndim != 2 or arr.shape != expected:
        diagnostics.append(f"{name} has shape {arr.shape}, expected {expected}")
        return False
    return True


def validate(problem: GtareProblem) -> List[str]:
    """
    Check dimensions, finiteness and symmetry.

    Returns a list of human-readable diagnostics; an empty list means the
    problem is usable.
    """
    diagnostics: List[str] = []
    n, m1, m2, r = problem.n, problem.m1, problem.m2, problem.r

    if n < 1:
        diagnostics.append(f"n must be positive, got {n}")
    for name, value in (("m1", m1), ("m2", m2), ("r", r)):
        if value < 0:
            diagnostics.append(f"{name} must be non-negative, got {value}")
    if diagnostics:
        return diagnostics

    for name, values in (("C", problem.C), ("D1", problem.D1), ("D2", problem.D2)):
        if len(values) != r:
            diagnostics.append(f"{name} has {len(values)} matrices, expected r = {r}")

    expected = [
        ("A", problem.A, (n, n)),
        ("B1", problem.B1, (n, m1)),
        ("B2", problem.B2, (n, m2)),
        ("Q", problem.Q, (n, n)),
        ("S1", problem.S1, (m1, n)),
        ("S2", problem.S2, (m2, n)),
        ("R11", problem.R11, (m1, m1)),
        ("R12", problem.R12, (m1, m2)),
        ("R22", problem.R22, (m2, m2)),
    ]
    expected += [(f"C[{l}]", C, (n, n)) for l, C in enumerate(problem.C)]
    expected += [(f"D1[{l}]", D, (n, m1)) for l, D in enumerate(problem.D1)]
    expected += [(f"D2[{l}]", D, (n, m2)) for l, D in enumerate(problem.D2)]

    shaped = {}
    for name, arr, shape in expected:
        shaped[name] = _check_shape(diagnostics, name, arr, shape)
        if arr.size and not np.all(np.isfinite(arr)):
            diagnostics.append(f"{name} contains non-finite entries")

    tol = get_tolerances()
    for name, arr in (("Q", problem.Q), ("R11", problem.R11), ("R22", problem.R22)):
        if not shaped[name] or arr.size == 0 or not np.all(np.isfinite(arr)):
            continue
        asym = float(np.max(np.abs(arr - arr.T)))
        limit = tol.sym_tol(float(np.max(np.abs(arr))))
        if asym > limit:
            diagnostics.append(f"{name} is not symmetric: max |M - M^T| = {asym:.3e} > {limit:.3e}")

    return diagnostics


def ensure_valid(problem: GtareProblem) -> GtareProblem:
    diagnostics = validate(problem)
    if diagnostics:
        raise InvalidProblem("; ".join(diagnostics))
    return problem


def ensure_full_rank_r(problem: GtareProblem) -> GtareProblem:
    """Reject problems whose R = R(0) is singular (range-condition case)."""
    try:
        solve_linear(problem.R, np.eye(problem.m), what="R")
    except SingularMatrix as err:
        raise UnsupportedRankDeficientR(
            f"R = [[R11, R12], [R21, R22]] is rank deficient; only invertible R(P) is supported ({err})"
        ) from err
    return problem


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def random_problem(
    rng: np.random.Generator,
    n: int,
    m1: int,
    m2: int,
    r: int,
    *,
    noise_scale: float = 0.5,
    input_noise: float = 0.05,
    maximizer_scale: float = 0.3,
    cross_scale: float = 0.2,
) -> GtareProblem:
    """
    Random instance whose weights keep small P inside Dom G.

    A is shifted so its spectral abscissa is -1, each C_l has spectral norm
    noise_scale, R11 = -(I + GG^T), R22 = I + HH^T and Q = I + FF^T.
    """
    A0 = rng.standard_normal((n, n))
    A = A0 - (float(np.max(np.linalg.eigvals(A0).real)) + 1.0) * np.eye(n)
    C = []
    for _ in range(r):
        C0 = rng.standard_normal((n, n))
        C.append(noise_scale * C0 / max(np.linalg.norm(C0, 2), 1e-12))
    G = rng.standard_normal((m1, m1))
    H = rng.standard_normal((m2, m2))
    F = rng.standard_normal((n, n))
    return GtareProblem.from_arrays(
        A=A,
        B1=maximizer_scale * rng.standard_normal((n, m1)),
        B2=rng.standard_normal((n, m2)),
        C=C,
        D1=[input_noise * rng.standard_normal((n, m1)) for _ in range(r)],
        D2=[input_noise * rng.standard_normal((n, m2)) for _ in range(r)],
        Q=_sym(np.eye(n) + F @ F.T),
        S1=cross_scale * rng.standard_normal((m1, n)),
        S2=cross_scale * rng.standard_normal((m2, n)),
        R11=_sym(-(np.eye(m1) + 0.5 * G @ G.T)),
        R12=cross_scale * rng.standard_normal((m1, m2)),
        R22=_sym(np.eye(m2) + 0.5 * H @ H.T),
    )
