"""
Closed-loop Monte Carlo for dX = A_cl X dt + sum_l C_cl,l X dw_l with
u1 = K1 X and u2 = K2 X.

Paths are simulated in chunks; path p draws its Brownian increments from a
Philox stream keyed by (seed, p), so results do not depend on the chunk size
or the number of worker threads.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.errors import InvalidSimConfig, NonFinite, ShapeMismatch
from src.model import Gains, GtareProblem, closed_loop_from_gains, closed_loop_value, cost_weight
from src.numerics import get_tolerances, svec, svec_batch, unsvec_basis
from src.numerics.config import sim_chunk, sim_workers
from src.stability import closed_loop_abscissa, second_moment

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    x0: np.ndarray
    dt: float = 1e-3
    horizon: float = 10.0
    paths: int = 1000
    seed: int = 0
    scheme: str = "euler_maruyama"
    keep_paths: int = 1
    store_all: bool = False
    workers: Optional[int] = None
    chunk: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float).ravel())
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise InvalidSimConfig(f"dt must be positive, got {self.dt}")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise InvalidSimConfig(f"horizon must be positive, got {self.horizon}")
        if self.dt > self.horizon:
            raise InvalidSimConfig(f"dt = {self.dt} exceeds horizon = {self.horizon}")
        if self.paths < 1:
            raise InvalidSimConfig(f"paths must be at least 1, got {self.paths}")
        if self.seed < 0:
            raise InvalidSimConfig(f"seed must be non-negative, got {self.seed}")
        if self.scheme != "euler_maruyama":
            raise InvalidSimConfig(f"unknown scheme {self.scheme!r}")
        if self.keep_paths < 0:
            raise InvalidSimConfig(f"keep_paths must be non-negative, got {self.keep_paths}")

    @property
    def steps(self) -> int:
        return max(1, int(round(self.horizon / self.dt)))

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.steps + 1)


@dataclass
class TrajectoryBatch:
    times: np.ndarray
    mean_states: np.ndarray
    mean_square_norm: np.ndarray
    sample_states: np.ndarray
    sample_u1: np.ndarray
    sample_u2: np.ndarray
    terminal_states: np.ndarray
    cost_samples: np.ndarray
    config: SimConfig
    states: Optional[np.ndarray] = None
    abscissa: float = math.nan


@dataclass
class _ChunkResult:
    state_sum: np.ndarray
    square_sum: np.ndarray
    samples: np.ndarray
    terminal: np.ndarray
    costs: np.ndarray
    states: Optional[np.ndarray] = None


def _increments(cfg: SimConfig, start: int, stop: int, r: int) -> np.ndarray:
    """(paths, steps, r) Brownian increments, one Philox stream per path."""
    scale = math.sqrt(cfg.dt)
    out = np.empty((stop - start, cfg.steps, r))
    for i, p in enumerate(range(start, stop)):
        bitgen = np.random.Philox(key=np.array([cfg.seed, p], dtype=np.uint64))
        out[i] = scale * np.random.Generator(bitgen).standard_normal((cfg.steps, r))
    return out


def _simulate_chunk(
    A_cl: np.ndarray,
    C_cl: np.ndarray,
    W: np.ndarray,
    cfg: SimConfig,
    start: int,
    stop: int,
) -> _ChunkResult:
    n = A_cl.shape[0]
    steps = cfg.steps
    count = stop - start
    dW = _increments(cfg, start, stop, C_cl.shape[0])
    keep = max(0, min(cfg.keep_paths, stop) - start)

    X = np.tile(cfg.x0, (count, 1))
    state_sum = np.empty((steps + 1, n))
    square_sum = np.empty(steps + 1)
    samples = np.empty((keep, steps + 1, n))
    states = np.empty((count, steps + 1, n)) if cfg.store_all else None

    def record(j: int, X: np.ndarray) -> np.ndarray:
        state_sum[j] = X.sum(axis=0)
        square_sum[j] = float(np.einsum("pi,pi->", X, X))
        samples[:, j] = X[:keep]
        if states is not None:
            states[:, j] = X
        return np.einsum("pi,ij,pj->p", X, W, X)

    running = record(0, X)
    costs = np.zeros(count)
    for j in range(steps):
        drift = X @ A_cl.T
        noise = np.einsum("pn,lmn,pl->pm", X, C_cl, dW[:, j])
        X = X + cfg.dt * drift + noise
        if not np.all(np.isfinite(X)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(X), axis=1))[0])
            raise NonFinite(f"trajectory overflow on path {start + bad} at step {j + 1}")
        nxt = record(j + 1, X)
        costs += 0.5 * cfg.dt * (running + nxt)
        running = nxt

    return _ChunkResult(
        state_sum=state_sum,
        square_sum=square_sum,
        samples=samples,
        terminal=X,
        costs=costs,
        states=states,
    )


def simulate(problem: GtareProblem, feedback: Gains, cfg: SimConfig) -> TrajectoryBatch:
    """Euler-Maruyama paths of the closed loop, with trapezoidal cost per path."""
    if cfg.x0.shape != (problem.n,):
        raise ShapeMismatch(f"x0 must have length {problem.n}, got {cfg.x0.shape[0]}")
    if feedback.K1.shape != (problem.m1, problem.n) or feedback.K2.shape != (problem.m2, problem.n):
        raise ShapeMismatch("gain shapes do not match the problem")

    A_cl, C_cl = closed_loop_from_gains(problem, feedback)
    C_stack = np.stack(C_cl) if C_cl else np.zeros((0, problem.n, problem.n))
    W = cost_weight(problem, feedback).array
    alpha = closed_loop_abscissa(A_cl, C_cl)
    if not alpha < -get_tolerances().stab_tol:
        logger.warning(f"Simulating a closed loop that is not mean-square stable (abscissa {alpha:.3e})")

    chunk = cfg.chunk or sim_chunk()
    workers = cfg.workers or sim_workers()
    bounds = [(s, min(s + chunk, cfg.paths)) for s in range(0, cfg.paths, chunk)]
    logger.info(
        f"Simulating {cfg.paths} paths x {cfg.steps} steps in {len(bounds)} chunks on {workers} worker(s)"
    )
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda b: _simulate_chunk(A_cl, C_stack, W, cfg, *b), bounds))
    else:
        results = [_simulate_chunk(A_cl, C_stack, W, cfg, *b) for b in bounds]

    # combined in chunk order so the sums do not depend on the schedule
    state_sum = np.zeros((cfg.steps + 1, problem.n))
    square_sum = np.zeros(cfg.steps + 1)
    for res in results:
        state_sum += res.state_sum
        square_sum += res.square_sum
    samples = np.concatenate([res.samples for res in results], axis=0)

    return TrajectoryBatch(
        times=cfg.times,
        mean_states=state_sum / cfg.paths,
        mean_square_norm=square_sum / cfg.paths,
        sample_states=samples,
        sample_u1=samples @ feedback.K1.T,
        sample_u2=samples @ feedback.K2.T,
        terminal_states=np.concatenate([res.terminal for res in results], axis=0),
        cost_samples=np.concatenate([res.costs for res in results]),
        config=cfg,
        states=np.concatenate([res.states for res in results], axis=0) if cfg.store_all else None,
        abscissa=alpha,
    )


def estimate_cost(problem: GtareProblem, batch: TrajectoryBatch) -> Tuple[float, float]:
    """Mean and standard error of the truncated cost over paths."""
    costs = batch.cost_samples
    mean = float(np.mean(costs))
    if costs.size < 2:
        return mean, 0.0
    return mean, float(np.std(costs, ddof=1) / math.sqrt(costs.size))


@dataclass(frozen=True)
class TruncationTail:
    horizon: float
    expected_tail: float
    abscissa: float
    decay_factor: float


def truncation_tail(problem: GtareProblem, feedback: Gains, cfg: SimConfig) -> TruncationTail:
    """
    Expected cost beyond the last simulated time T = steps * dt, E[X(T)^T Y X(T)]
    with Y the closed-loop value matrix. decay_factor is exp(alpha * T).
    """
    A_cl, C_cl = closed_loop_from_gains(problem, feedback)
    alpha = closed_loop_abscissa(A_cl, C_cl)
    Y = closed_loop_value(problem, feedback).array
    end = float(cfg.times[-1])
    moment = second_moment(A_cl, C_cl, cfg.x0, end).array
    return TruncationTail(
        horizon=end,
        expected_tail=float(np.trace(Y @ moment)),
        abscissa=alpha,
        decay_factor=math.exp(alpha * end),
    )


def discrete_expected_cost(problem: GtareProblem, feedback: Gains, cfg: SimConfig) -> float:
    """
    Exact expectation of the simulated (Euler-Maruyama, trapezoid) cost.

    The scheme propagates E[X X^T] by M -> (I + dt A) M (I + dt A)^T + dt sum C M C^T.
    """
    n = problem.n
    A_cl, C_cl = closed_loop_from_gains(problem, feedback)
    C_stack = np.stack(C_cl) if C_cl else np.zeros((0, n, n))
    F = np.eye(n) + cfg.dt * A_cl
    basis = unsvec_basis(n)
    images = F @ basis @ F.T + cfg.dt * np.einsum("lij,bjk,lmk->bim", C_stack, basis, C_stack)
    step = svec_batch(images).T
    w = svec(cost_weight(problem, feedback))

    m = svec(np.outer(cfg.x0, cfg.x0))
    values = np.empty(cfg.steps + 1)
    values[0] = w @ m
    for j in range(1, cfg.steps + 1):
        m = step @ m
        values[j] = w @ m
    return float(cfg.dt * (values.sum() - 0.5 * (values[0] + values[-1])))


@dataclass(frozen=True)
class ValueCheck:
    estimate: float
    stderr: float
    value: float
    tail: float
    discretization: float
    allowance: float

    @property
    def deviation(self) -> float:
        return abs(self.estimate - self.value)

    @property
    def passed(self) -> bool:
        return self.deviation <= self.allowance

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "stderr": self.stderr,
            "value": self.value,
            "tail": self.tail,
            "discretization": self.discretization,
            "allowance": self.allowance,
            "deviation": self.deviation,
            "passed": self.passed,
        }


def value_check(problem: GtareProblem, feedback: Gains, batch: TrajectoryBatch, sigmas: float = 3.0) -> ValueCheck:
    """
    Compare the Monte Carlo cost with x0^T Y x0.

    allowance = sigmas * stderr + tail + |discrete expectation - (value - tail)|.
    """
    cfg = batch.config
    mean, stderr = estimate_cost(problem, batch)
    Y = closed_loop_value(problem, feedback).array
    value = float(cfg.x0 @ Y @ cfg.x0)
    tail = truncation_tail(problem, feedback, cfg).expected_tail
    discretization = abs(discrete_expected_cost(problem, feedback, cfg) - (value - tail))
    allowance = sigmas * stderr + abs(tail) + discretization + 1e-12 * max(1.0, abs(value))
    return ValueCheck(
        estimate=mean,
        stderr=stderr,
        value=value,
        tail=tail,
        discretization=discretization,
        allowance=allowance,
    )
