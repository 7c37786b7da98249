from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from src.model import Gains, GtareProblem, closed_loop_from_gains, closed_loop_value
from src.numerics import eig_min_sym, get_tolerances
from src.stability import closed_loop_abscissa

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SaddleReport:
    """
    Loewner-order saddle inequalities at P*.

    maximizer_slack is min eig(P* - Y) over player-1 deviations (>= 0 means
    the maximizer cannot gain); minimizer_slack is min eig(Y - P*) over
    player-2 deviations.
    """

    maximizer_slack: float
    minimizer_slack: float
    checked_maximizer: int
    checked_minimizer: int
    skipped_unstable: int
    tolerance: float
    values: List[float] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.maximizer_slack >= -self.tolerance and self.minimizer_slack >= -self.tolerance

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "maximizer_slack": self.maximizer_slack,
            "minimizer_slack": self.minimizer_slack,
            "checked_maximizer": self.checked_maximizer,
            "checked_minimizer": self.checked_minimizer,
            "skipped_unstable": self.skipped_unstable,
            "tolerance": self.tolerance,
        }


def _random_deviations(rng: np.random.Generator, rows: int, cols: int, count: int, scale: float) -> List[np.ndarray]:
    return [scale * rng.standard_normal((rows, cols)) for _ in range(count)]


def saddle_check(
    problem: GtareProblem,
    P_star,
    feedback: Gains,
    maximizer_deviations: Optional[Sequence[np.ndarray]] = None,
    minimizer_deviations: Optional[Sequence[np.ndarray]] = None,
    *,
    rng: Optional[np.random.Generator] = None,
    count: int = 5,
    scale: float = 0.1,
) -> SaddleReport:
    """
    Compare the value of unilateral deviations from (K1, K2) against P*.

    Deviations default to ``count`` random gains of size ``scale`` per
    player. Deviations that destabilize the loop have no finite value and are
    skipped.
    """
    tol = get_tolerances()
    P_star = np.asarray(P_star, dtype=float)
    rng = rng if rng is not None else np.random.default_rng(0)
    if maximizer_deviations is None:
        maximizer_deviations = _random_deviations(rng, problem.m1, problem.n, count, scale)
    if minimizer_deviations is None:
        minimizer_deviations = _random_deviations(rng, problem.m2, problem.n, count, scale)

    skipped = 0
    values: List[float] = []

    def slack(deviated: Gains, sign: float) -> Optional[float]:
        nonlocal skipped
        A_cl, C_cl = closed_loop_from_gains(problem, deviated)
        if not closed_loop_abscissa(A_cl, C_cl) < -tol.stab_tol:
            skipped += 1
            return None
        Y = closed_loop_value(problem, deviated).array
        values.append(float(np.trace(Y)))
        return eig_min_sym(sign * (P_star - Y))

    max_slacks = [
        s for s in (slack(Gains(K1=feedback.K1 + d, K2=feedback.K2), 1.0) for d in maximizer_deviations)
        if s is not None
    ]
    min_slacks = [
        s for s in (slack(Gains(K1=feedback.K1, K2=feedback.K2 + d), -1.0) for d in minimizer_deviations)
        if s is not None
    ]
    report = SaddleReport(
        maximizer_slack=min(max_slacks, default=math.inf),
        minimizer_slack=min(min_slacks, default=math.inf),
        checked_maximizer=len(max_slacks),
        checked_minimizer=len(min_slacks),
        skipped_unstable=skipped,
        tolerance=1e-6 * max(1.0, float(np.linalg.norm(P_star, "fro"))),
        values=values,
    )
    if not report.holds:
        logger.warning(
            f"Saddle inequalities violated: maximizer slack {report.maximizer_slack:.3e}, "
            f"minimizer slack {report.minimizer_slack:.3e}"
        )
    return report
