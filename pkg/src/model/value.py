from __future__ import annotations

import numpy as np

from src.model.blocks import Gains, closed_loop_from_gains
from src.model.problem import GtareProblem
from src.numerics import SymMatrix
from src.stability import solve_generalized_lyapunov


def cost_weight(problem: GtareProblem, feedback: Gains) -> SymMatrix:
    """Integrand weight of the running cost when u1 = K1 x and u2 = K2 x."""
    E = np.vstack([np.eye(problem.n), feedback.K])
    weight = np.block([[problem.Q, problem.S.T], [problem.S, problem.R]])
    return SymMatrix.symmetrize(E.T @ weight @ E)


def closed_loop_value(problem: GtareProblem, feedback: Gains) -> SymMatrix:
    """
    Value matrix Y of the feedback pair: the performance functional from x0 is
    x0^T Y x0. Only meaningful when the closed loop is mean-square stable.
    """
    A_cl, C_cl = closed_loop_from_gains(problem, feedback)
    return solve_generalized_lyapunov(A_cl, C_cl, cost_weight(problem, feedback).array)
