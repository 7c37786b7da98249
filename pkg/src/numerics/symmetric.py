"""
Symmetric matrices and their coordinates.

``svec`` maps S^n isometrically onto R^{n(n+1)/2}: the upper triangle is read
row by row and off-diagonal entries are scaled by sqrt(2), so that
<svec(S1), svec(S2)> = Tr(S1^T S2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple, Union

import numpy as np
import scipy.linalg

from src.errors import AsymmetricMatrix, NonTriangularLength, ShapeMismatch
from src.numerics.config import get_tolerances

ArrayLike = Union[np.ndarray, "SymMatrix", list]


class SymMatrix:
    """
    Square real symmetric matrix.

    Construction checks symmetry against sym_tol (relative to the largest
    entry) and stores the symmetrized part (M + M^T)/2 as a read-only array.
    Use ``SymMatrix.symmetrize`` to skip the check, e.g. for solver output.
    """

    __slots__ = ("_data",)

    def __init__(self, entries: ArrayLike, sym_tol: float | None = None):
        data = np.array(_as_array(entries), dtype=float)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ShapeMismatch(f"SymMatrix needs a square 2-d array, got shape {data.shape}")
        scale = float(np.max(np.abs(data))) if data.size else 0.0
        tol = sym_tol if sym_tol is not None else get_tolerances().sym_tol(scale)
        if data.size:
            asym = float(np.max(np.abs(data - data.T)))
            if asym > tol:
                raise AsymmetricMatrix(f"max |M - M^T| = {asym:.3e} exceeds tolerance {tol:.3e}")
        data = 0.5 * (data + data.T)
        data.setflags(write=False)
        self._data = data

    @classmethod
    def symmetrize(cls, entries: ArrayLike) -> "SymMatrix":
        data = np.asarray(_as_array(entries), dtype=float)
        return cls(0.5 * (data + data.T), sym_tol=math.inf)

    @classmethod
    def zeros(cls, n: int) -> "SymMatrix":
        return cls(np.zeros((n, n)))

    @classmethod
    def identity(cls, n: int) -> "SymMatrix":
        return cls(np.eye(n))

    @property
    def array(self) -> np.ndarray:
        return self._data

    @property
    def dim(self) -> int:
        return self._data.shape[0]

    @property
    def shape(self) -> Tuple[int, int]:
        return self._data.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._data
        return self._data.astype(dtype)

    def __add__(self, other: ArrayLike) -> "SymMatrix":
        return SymMatrix.symmetrize(self._data + _as_array(other))

    __radd__ = __add__

    def __sub__(self, other: ArrayLike) -> "SymMatrix":
        return SymMatrix.symmetrize(self._data - _as_array(other))

    def __rsub__(self, other: ArrayLike) -> "SymMatrix":
        return SymMatrix.symmetrize(_as_array(other) - self._data)

    def __neg__(self) -> "SymMatrix":
        return SymMatrix.symmetrize(-self._data)

    def __mul__(self, scalar: float) -> "SymMatrix":
        return SymMatrix.symmetrize(float(scalar) * self._data)

    __rmul__ = __mul__

    def norm(self) -> float:
        """Frobenius norm."""
        return float(np.linalg.norm(self._data, "fro"))

    def eigvalsh(self) -> np.ndarray:
        if self.dim == 0:
            return np.zeros(0)
        return scipy.linalg.eigvalsh(self._data)

    def allclose(self, other: ArrayLike, rtol: float = 1e-10, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self._data, _as_array(other), rtol=rtol, atol=atol))

    def __repr__(self) -> str:
        return f"SymMatrix({self._data.tolist()!r})"


def _as_array(value: ArrayLike) -> np.ndarray:
    if isinstance(value, SymMatrix):
        return value.array
    return np.asarray(value, dtype=float)


@dataclass(frozen=True)
class SpectrumSummary:
    eigenvalues: Tuple[complex, ...]
    max_real_part: float


def spectrum_summary(matrix: np.ndarray) -> SpectrumSummary:
    """Eigenvalues of a general square matrix and their largest real part."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return SpectrumSummary(eigenvalues=(), max_real_part=-math.inf)
    eigs = scipy.linalg.eigvals(matrix)
    return SpectrumSummary(
        eigenvalues=tuple(complex(v) for v in eigs),
        max_real_part=float(np.max(eigs.real)),
    )


@lru_cache(maxsize=64)
def _svec_layout(n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows, cols = np.triu_indices(n)
    scale = np.where(rows == cols, 1.0, math.sqrt(2.0))
    for arr in (rows, cols, scale):
        arr.setflags(write=False)
    return rows, cols, scale


def svec_dim(n: int) -> int:
    return n * (n + 1) // 2


def svec(S: ArrayLike) -> np.ndarray:
    data = _as_array(S)
    if data.ndim != 2 or data.shape[0] != data.shape[1]:
        raise ShapeMismatch(f"svec needs a square matrix, got shape {data.shape}")
    rows, cols, scale = _svec_layout(data.shape[0])
    return data[rows, cols] * scale


def svec_batch(stack: np.ndarray) -> np.ndarray:
    """svec applied to every matrix of a (k, n, n) stack; returns (k, n(n+1)/2)."""
    rows, cols, scale = _svec_layout(stack.shape[-1])
    return stack[:, rows, cols] * scale


def triangular_root(length: int) -> int:
    n = (math.isqrt(8 * length + 1) - 1) // 2
    if svec_dim(n) != length:
        raise NonTriangularLength(f"length {length} is not a triangular number n(n+1)/2")
    return n


def unsvec(v: ArrayLike) -> SymMatrix:
    vec = np.asarray(v, dtype=float).ravel()
    n = triangular_root(vec.size)
    rows, cols, scale = _svec_layout(n)
    out = np.zeros((n, n))
    values = vec / scale
    out[rows, cols] = values
    out[cols, rows] = values
    return SymMatrix(out, sym_tol=math.inf)


def unsvec_basis(n: int) -> np.ndarray:
    """Stack of unsvec(e_j) for j = 0..n(n+1)/2-1, shape (N, n, n)."""
    rows, cols, scale = _svec_layout(n)
    N = svec_dim(n)
    basis = np.zeros((N, n, n))
    idx = np.arange(N)
    basis[idx, rows, cols] = 1.0 / scale
    basis[idx, cols, rows] = 1.0 / scale
    return basis


def eig_min_sym(S: ArrayLike) -> float:
    """Smallest eigenvalue of a symmetric matrix (+inf for an empty matrix)."""
    data = _as_array(S)
    if data.size == 0:
        return math.inf
    return float(scipy.linalg.eigvalsh(0.5 * (data + data.T), subset_by_index=[0, 0])[0])


def eig_max_sym(S: ArrayLike) -> float:
    data = _as_array(S)
    if data.size == 0:
        return -math.inf
    n = data.shape[0]
    return float(scipy.linalg.eigvalsh(0.5 * (data + data.T), subset_by_index=[n - 1, n - 1])[0])


def is_psd(S: ArrayLike, psd_tol: float | None = None) -> bool:
    tol = get_tolerances().psd_tol if psd_tol is None else psd_tol
    return eig_min_sym(S) >= -tol
