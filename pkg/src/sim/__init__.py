"""Closed-loop Monte Carlo simulation and cost estimation."""

from .montecarlo import (
    SimConfig,
    TrajectoryBatch,
    TruncationTail,
    ValueCheck,
    discrete_expected_cost,
    estimate_cost,
    simulate,
    truncation_tail,
    value_check,
)

__all__ = [
    'SimConfig',
    'TrajectoryBatch',
    'TruncationTail',
    'ValueCheck',
    'discrete_expected_cost',
    'estimate_cost',
    'simulate',
    'truncation_tail',
    'value_check',
]
