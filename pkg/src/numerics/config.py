"""
Tolerance and runtime configuration.

All numerical thresholds live in one frozen record so there is a single place
to audit them. Values come from ``GTARE_*`` environment variables, optionally
stored in a local .env file.
"""

from __future__ import annotations

import logging
import os
import threading
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

logger = logging.getLogger(__name__)


def _load_env() -> None:
    """Load .env from the CWD chain and from the repository root without overriding real env."""
    try:
        load_dotenv(override=False)
        root_env = Path(__file__).resolve().parents[2] / ".env"
        if root_env.exists():
            load_dotenv(dotenv_path=root_env, override=False)
    except Exception:
        # Fail-open: a broken .env must never stop a solve
        pass


_load_env()


def _env_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    return raw.strip().lower() in ("1", "true", "yes", "on")


@dataclass(frozen=True)
class Tolerances:
    sym_tol_rel: float = 1e-12
    psd_tol: float = 1e-8
    lin_tol: float = 1e-10
    cond_warn: float = 1e12
    singular_rcond: float = 1e-14
    stab_tol: float = 1e-9
    lyap_tol: float = 1e-10
    inner_tol: float = 1e-11
    inner_max_iters: int = 50
    outer_tol: float = 1e-7
    max_outer: int = 100
    raise_ill_conditioned: bool = False

    @classmethod
    def from_env(cls) -> "Tolerances":
        """
        Build the record from GTARE_<FIELD> variables, e.g. GTARE_PSD_TOL=1e-9.
        Unparseable values are logged and replaced by the default.
        """
        values = {}
        for f in fields(cls):
            key = f"GTARE_{f.name.upper()}"
            raw = os.getenv(key)
            if raw is None or not raw.strip():
                continue
            try:
                if f.type in ("bool", bool):
                    values[f.name] = _env_bool(key, f.default)
                elif f.type in ("int", int):
                    values[f.name] = int(raw)
                else:
                    values[f.name] = float(raw)
            except ValueError:
                logger.warning(f"Ignoring {key}={raw!r}: not a valid {f.type}")
        return cls(**values)

    def sym_tol(self, scale: float) -> float:
        """Absolute symmetry tolerance for a matrix whose largest entry is ``scale``."""
        return self.sym_tol_rel * max(1.0, scale)


_tolerances: Optional[Tolerances] = None
_tolerances_lock = threading.Lock()


def get_tolerances() -> Tolerances:
    """Get or create the process-wide tolerance record."""
    global _tolerances
    if _tolerances is None:
        with _tolerances_lock:
            if _tolerances is None:
                _tolerances = Tolerances.from_env()
    return _tolerances


def reset_tolerances() -> None:
    """Forget the cached record so the next call re-reads the environment."""
    global _tolerances
    with _tolerances_lock:
        _tolerances = None


def sim_workers() -> int:
    return max(1, int(os.getenv("GTARE_SIM_WORKERS", "1")))


def sim_chunk() -> int:
    return max(1, int(os.getenv("GTARE_SIM_CHUNK", "256")))


def continuation_enabled() -> bool:
    return _env_bool("GTARE_CONTINUATION", True)
