"""
JSON problem, solution and certificate files.

A problem file is one JSON object with integer fields n, m1, m2, r and
row-major nested arrays A, C (list of r matrices), B1, B2, D1 (list), D2
(list), Q, S1, S2, R11, R12, R22; an optional L holds a certificate gain.
Floats are written with Python's shortest round-trip repr, so write-then-read
is exact.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from src.errors import ProblemFileError, ShapeMismatch
from src.model import Gains, GtareProblem, ensure_valid, gains
from src.numerics import SymMatrix

logger = logging.getLogger(__name__)

MATRIX_FIELDS = ("A", "B1", "B2", "Q", "S1", "S2", "R11", "R12", "R22")
LIST_FIELDS = ("C", "D1", "D2")
DIM_FIELDS = ("n", "m1", "m2", "r")
OPTIONAL_FIELDS = ("L",)
KNOWN_FIELDS = frozenset(DIM_FIELDS + MATRIX_FIELDS + LIST_FIELDS + OPTIONAL_FIELDS)

PathLike = Union[str, Path]


def read_json(path: PathLike) -> Dict[str, Any]:
    path = Path(path)
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except FileNotFoundError as err:
        raise ProblemFileError(f"file not found: {path}") from err
    except (OSError, json.JSONDecodeError) as err:
        raise ProblemFileError(f"cannot read {path}: {err}") from err
    if not isinstance(data, dict):
        raise ProblemFileError(f"{path} must contain a JSON object")
    return data


def _matrix(data: Dict[str, Any], name: str, rows: int, cols: int) -> np.ndarray:
    try:
        arr = np.array(data[name], dtype=float)
    except (TypeError, ValueError) as err:
        raise ProblemFileError(f"field {name!r} is not a numeric matrix: {err}") from err
    if arr.size == 0:
        return np.zeros((rows, cols))
    if arr.ndim != 2:
        raise ProblemFileError(f"field {name!r} must be a nested array of rows, got {arr.ndim}-d data")
    return arr


def _dimension(data: Dict[str, Any], name: str) -> int:
    value = data[name]
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ProblemFileError(f"field {name!r} must be a non-negative integer, got {value!r}")
    return value


def problem_from_dict(data: Dict[str, Any], *, strict: bool = True) -> Tuple[GtareProblem, Optional[np.ndarray]]:
    """Parse a problem object; unknown fields raise (strict) or log a warning (lax)."""
    unknown = sorted(set(data) - KNOWN_FIELDS)
    if unknown:
        if strict:
            raise ProblemFileError(f"unknown fields: {', '.join(unknown)}")
        logger.warning(f"Ignoring unknown fields: {', '.join(unknown)}")

    missing = [name for name in DIM_FIELDS + MATRIX_FIELDS if name not in data]
    if missing:
        raise ProblemFileError(f"missing fields: {', '.join(missing)}")
    n, m1, m2, r = (_dimension(data, name) for name in DIM_FIELDS)

    shapes = {
        "A": (n, n), "B1": (n, m1), "B2": (n, m2), "Q": (n, n), "S1": (m1, n),
        "S2": (m2, n), "R11": (m1, m1), "R12": (m1, m2), "R22": (m2, m2),
    }
    matrices = {name: _matrix(data, name, *shapes[name]) for name in MATRIX_FIELDS}

    lists: Dict[str, List[np.ndarray]] = {}
    for name, cols in (("C", n), ("D1", m1), ("D2", m2)):
        values = data.get(name, [])
        if not isinstance(values, list):
            raise ProblemFileError(f"field {name!r} must be a list of matrices")
        lists[name] = [_matrix({name: v}, name, n, cols) for v in values]

    for arr in list(matrices.values()) + [a for values in lists.values() for a in values]:
        arr.setflags(write=False)

    problem = GtareProblem(
        n=n,
        m1=m1,
        m2=m2,
        r=r,
        C=tuple(lists["C"]),
        D1=tuple(lists["D1"]),
        D2=tuple(lists["D2"]),
        **matrices,
    )
    L = _matrix(data, "L", m2, n) if "L" in data else None
    return problem, L


def load_problem(
    path: PathLike,
    *,
    strict: bool = True,
    check: bool = True,
) -> Tuple[GtareProblem, Optional[np.ndarray]]:
    problem, L = problem_from_dict(read_json(path), strict=strict)
    if check:
        ensure_valid(problem)
    logger.info(f"Loaded problem {path} (n={problem.n}, m1={problem.m1}, m2={problem.m2}, r={problem.r})")
    return problem, L


def problem_to_dict(problem: GtareProblem, L: Optional[np.ndarray] = None) -> Dict[str, Any]:
    data: Dict[str, Any] = {"n": problem.n, "m1": problem.m1, "m2": problem.m2, "r": problem.r}
    data["A"] = problem.A.tolist()
    data["C"] = [C.tolist() for C in problem.C]
    data["B1"] = problem.B1.tolist()
    data["B2"] = problem.B2.tolist()
    data["D1"] = [D.tolist() for D in problem.D1]
    data["D2"] = [D.tolist() for D in problem.D2]
    for name in ("Q", "S1", "S2", "R11", "R12", "R22"):
        data[name] = getattr(problem, name).tolist()
    if L is not None:
        data["L"] = np.asarray(L, dtype=float).tolist()
    return data


def write_json(path: PathLike, data: Dict[str, Any]) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(data, f, indent=2)
        f.write("\n")
    logger.info(f"Wrote {path}")


def write_problem(path: PathLike, problem: GtareProblem, L: Optional[np.ndarray] = None) -> None:
    write_json(path, problem_to_dict(problem, L))


def _square(data: Dict[str, Any], key: str, n: int) -> np.ndarray:
    arr = np.array(data[key], dtype=float, ndmin=2)
    if arr.shape != (n, n):
        raise ShapeMismatch(f"{key} must be {n}x{n}, got {arr.shape}")
    return arr


def load_solution_matrix(path: PathLike, problem: GtareProblem) -> SymMatrix:
    """P from a file with a ``P`` or ``P_star`` field."""
    data = read_json(path)
    for key in ("P", "P_star"):
        if key in data:
            return SymMatrix(_square(data, key, problem.n))
    raise ProblemFileError(f"{path} has no 'P' or 'P_star' field")


def load_gains(path: PathLike, problem: GtareProblem) -> Gains:
    """Gains from explicit K1/K2 fields, or K(P) when the file holds P."""
    data = read_json(path)
    if "K1" in data and "K2" in data:
        K1 = np.array(data["K1"], dtype=float, ndmin=2)
        K2 = np.array(data["K2"], dtype=float, ndmin=2)
        if problem.m1 == 0 and K1.size == 0:
            K1 = np.zeros((0, problem.n))
        if K1.shape != (problem.m1, problem.n) or K2.shape != (problem.m2, problem.n):
            raise ShapeMismatch(f"gain shapes {K1.shape}, {K2.shape} do not match the problem")
        return Gains(K1=K1, K2=K2)
    return gains(problem, load_solution_matrix(path, problem).array)


def load_certificate(path: PathLike, problem: GtareProblem) -> np.ndarray:
    data = read_json(path)
    if "L" not in data:
        raise ProblemFileError(f"{path} has no 'L' field")
    L = np.array(data["L"], dtype=float, ndmin=2)
    if L.shape != (problem.m2, problem.n):
        raise ShapeMismatch(f"certificate L must be {problem.m2}x{problem.n}, got {L.shape}")
    return L
