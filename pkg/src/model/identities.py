from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from src.model.blocks import (
    Gains,
    closed_loop,
    coefficient_blocks,
    gains,
    n_matrix,
    residual_G,
)
from src.model.problem import GtareProblem
from src.numerics import SymMatrix, solve_linear
from src.stability import apply_lyapunov


def _relative(lhs: np.ndarray, rhs: np.ndarray) -> float:
    return float(np.linalg.norm(lhs - rhs) / max(1.0, np.linalg.norm(lhs)))


def completion_of_squares(problem: GtareProblem, P, theta1, theta2) -> SymMatrix:
    """
    Right-hand side of the completion-of-squares identity for a feedback pair
    Theta = [Theta1; Theta2]:

        L*_Theta(P) + Q + Theta^T R Theta + Theta^T S + S^T Theta
            - (K(P) - Theta)^T R(P) (K(P) - Theta)

    which equals G(P) for every Theta.
    """
    P = np.asarray(P, dtype=float)
    theta = np.vstack([np.asarray(theta1, dtype=float), np.asarray(theta2, dtype=float)])
    blocks = coefficient_blocks(problem, P)
    K = gains(problem, P, blocks).K
    A_t = problem.A + problem.B @ theta
    C_t = problem.C_stack + problem.D_stack @ theta
    gap = K - theta
    out = (
        apply_lyapunov(A_t, C_t, P)
        + problem.Q
        + theta.T @ problem.R @ theta
        + theta.T @ problem.S
        + problem.S.T @ theta
        - gap.T @ blocks.RP.array @ gap
    )
    return SymMatrix.symmetrize(out)


def g_expansion(problem: GtareProblem, P, Z) -> SymMatrix:
    """G(P) + L*_cl(Z) - N(P,Z)^T R(P+Z)^{-1} N(P,Z), which equals G(P + Z)."""
    P = np.asarray(P, dtype=float)
    Z = np.asarray(Z, dtype=float)
    A_cl, C_cl = closed_loop(problem, P)
    C_cl_stack = np.stack(C_cl) if C_cl else np.zeros((0, problem.n, problem.n))
    N = n_matrix(problem, P, Z)
    R_next = coefficient_blocks(problem, P + Z).RP.array
    X, _ = solve_linear(R_next, N, what="R(P+Z)")
    out = residual_G(problem, P).array + apply_lyapunov(A_cl, C_cl_stack, Z) - N.T @ X
    return SymMatrix.symmetrize(out)


def gain_increment(problem: GtareProblem, P, Z) -> Tuple[np.ndarray, np.ndarray]:
    """(K(P+Z) - K(P), -R(P+Z)^{-1} N(P,Z)); the two agree."""
    P = np.asarray(P, dtype=float)
    Z = np.asarray(Z, dtype=float)
    direct = gains(problem, P + Z).K - gains(problem, P).K
    R_next = coefficient_blocks(problem, P + Z).RP.array
    X, _ = solve_linear(R_next, n_matrix(problem, P, Z), what="R(P+Z)")
    return direct, -X


@dataclass(frozen=True)
class IdentityDefects:
    gain_increment: float
    completion_of_squares: float
    expansion: float

    @property
    def worst(self) -> float:
        return max(self.gain_increment, self.completion_of_squares, self.expansion)


def identity_defects(
    problem: GtareProblem,
    P,
    Z,
    thetas: Iterable[Gains] = (),
) -> IdentityDefects:
    """Relative defects of the gain-increment, completion-of-squares and G(P+Z) identities."""
    P = np.asarray(P, dtype=float)
    Z = np.asarray(Z, dtype=float)
    direct, via_n = gain_increment(problem, P, Z)
    G = residual_G(problem, P).array
    cos = max(
        (_relative(G, completion_of_squares(problem, P, t.K1, t.K2).array) for t in thetas),
        default=0.0,
    )
    G_next = residual_G(problem, P + Z).array
    return IdentityDefects(
        gain_increment=_relative(direct, via_n),
        completion_of_squares=cos,
        expansion=_relative(G_next, g_expansion(problem, P, Z).array),
    )
