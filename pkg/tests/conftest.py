import json
import math
from pathlib import Path

import numpy as np
import pytest

from src.cli.problem_file import load_problem
from src.model import GtareProblem
from src.numerics import reset_tolerances

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# Deterministic scalar game with a closed-form solution:
# G(p) = -2p + 1 - 3p^2/4, stabilizing root (-4 + 2*sqrt(7))/3.
DET_SCALAR_P_STAR = (-4.0 + 2.0 * math.sqrt(7.0)) / 3.0
# Certificate bound for L = 0 on the same game: p^2 - 8p + 4 = 0, root 4 - 2*sqrt(3).
DET_SCALAR_P_TILDE = 4.0 - 2.0 * math.sqrt(3.0)


@pytest.fixture(autouse=True)
def fresh_tolerances():
    reset_tolerances()
    yield
    reset_tolerances()


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def three_state_problem() -> GtareProblem:
    problem, _ = load_problem(FIXTURES / "three_state_game.json")
    return problem


@pytest.fixture
def three_state_p_star() -> np.ndarray:
    with open(FIXTURES / "three_state_solution.json") as f:
        return np.array(json.load(f)["P_star"])


@pytest.fixture
def scalar_problem() -> GtareProblem:
    problem, _ = load_problem(FIXTURES / "scalar_game.json")
    return problem


@pytest.fixture
def det_scalar_problem() -> GtareProblem:
    return GtareProblem.from_arrays(
        A=[[-1.0]],
        B1=[[1.0]],
        B2=[[1.0]],
        Q=[[1.0]],
        R11=[[-4.0]],
        R22=[[1.0]],
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def scalar_g(p: float, a, c, b1, b2, d1, d2, q, r11, r22, s1=0.0, s2=0.0, r12=0.0) -> float:
    """G(p) of a scalar game with one noise channel, written out by hand."""
    qp = 2.0 * a * p + c * c * p + q
    sp = np.array([b1 * p + d1 * p * c + s1, b2 * p + d2 * p * c + s2])
    rp = np.array([[r11 + d1 * d1 * p, r12 + d1 * d2 * p], [r12 + d1 * d2 * p, r22 + d2 * d2 * p]])
    return float(qp - sp @ np.linalg.solve(rp, sp))


SCALAR_GAME = dict(a=-1.0, c=0.5, b1=0.2, b2=1.0, d1=0.1, d2=0.1, q=1.0, r11=-2.0, r22=1.0)
