"""CSV emission for outer-iteration traces and simulated trajectories."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd

from src.sim import TrajectoryBatch
from src.solver import IterationRecord

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def trace_frame(history: Sequence[IterationRecord], n: int) -> pd.DataFrame:
    """
    One row per outer record: k, z_norm, residual_norm, the n eigenvalues of
    Z_k and M_k in ascending order, then the per-step audit quantities.
    """
    rows = []
    for record in history:
        row = {"k": record.k, "z_norm": record.z_norm, "residual_norm": record.residual_norm}
        row.update({f"z_eig_{i + 1}": v for i, v in enumerate(record.z_eigs)})
        row.update({f"m_eig_{i + 1}": v for i, v in enumerate(record.m_eigs)})
        row["newton_iters"] = record.inner.newton_iters
        row["a_k_abscissa"] = record.a_k_abscissa
        row["c_k_defect"] = record.c_k_defect
        row["bound_slack"] = np.nan if record.bound_slack is None else record.bound_slack
        row["recursion_deviation"] = np.nan if record.recursion_deviation is None else record.recursion_deviation
        rows.append(row)

    columns = (
        ["k", "z_norm", "residual_norm"]
        + [f"z_eig_{i + 1}" for i in range(n)]
        + [f"m_eig_{i + 1}" for i in range(n)]
        + ["newton_iters", "a_k_abscissa", "c_k_defect", "bound_slack", "recursion_deviation"]
    )
    return pd.DataFrame(rows, columns=columns)


def trajectory_frame(batch: TrajectoryBatch, stride: int = 1) -> pd.DataFrame:
    """t, per-state mean, the first sample path and its controls, every ``stride`` steps."""
    stride = max(1, int(stride))
    n = batch.mean_states.shape[1]
    idx = np.arange(0, batch.times.shape[0], stride)
    data = {"t": batch.times[idx]}
    for i in range(n):
        data[f"mean_x{i + 1}"] = batch.mean_states[idx, i]
    if batch.sample_states.shape[0] > 0:
        for i in range(n):
            data[f"path_x{i + 1}"] = batch.sample_states[0, idx, i]
        for i in range(batch.sample_u1.shape[2]):
            data[f"u1_{i + 1}"] = batch.sample_u1[0, idx, i]
        for i in range(batch.sample_u2.shape[2]):
            data[f"u2_{i + 1}"] = batch.sample_u2[0, idx, i]
    data["mean_sq_norm"] = batch.mean_square_norm[idx]
    return pd.DataFrame(data)


def write_csv(path: Union[str, Path], frame: pd.DataFrame) -> None:
    path = Path(path)
    if not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(frame)} rows to {path}")


def read_trace(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path)
