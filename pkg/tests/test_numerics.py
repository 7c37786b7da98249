import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.errors import AsymmetricMatrix, IllConditioned, NonTriangularLength, ShapeMismatch, SingularMatrix
from src.numerics import (
    SymMatrix,
    eig_max_sym,
    eig_min_sym,
    get_tolerances,
    is_psd,
    reset_tolerances,
    solve_linear,
    spectrum_summary,
    svec,
    svec_dim,
    unsvec,
    unsvec_basis,
)


class TestSymMatrix:
    """Construction, symmetry checks and arithmetic."""

    def test_symmetric_input_is_kept(self):
        S = SymMatrix([[1.0, 2.0], [2.0, 3.0]])
        assert_allclose(S.array, [[1.0, 2.0], [2.0, 3.0]])
        assert S.dim == 2

    def test_asymmetric_input_rejected(self):
        with pytest.raises(AsymmetricMatrix):
            SymMatrix([[1.0, 2.0], [2.5, 3.0]])

    def test_tiny_asymmetry_is_symmetrized(self):
        S = SymMatrix([[1.0, 2.0], [2.0 + 1e-14, 3.0]])
        assert S.array[0, 1] == S.array[1, 0]

    def test_non_square_rejected(self):
        with pytest.raises(ShapeMismatch):
            SymMatrix(np.zeros((2, 3)))

    def test_array_is_read_only(self):
        S = SymMatrix.identity(2)
        with pytest.raises(ValueError):
            S.array[0, 0] = 5.0

    def test_arithmetic_stays_symmetric(self):
        S = SymMatrix([[2.0, 1.0], [1.0, 2.0]])
        T = 2.0 * S - SymMatrix.identity(2)
        assert_allclose(T.array, [[3.0, 2.0], [2.0, 3.0]])
        assert_allclose((-T).array, -T.array)

    def test_norm_is_frobenius(self):
        assert SymMatrix([[3.0, 0.0], [0.0, 4.0]]).norm() == pytest.approx(5.0)


class TestSvec:
    """Isometric coordinates of symmetric matrices."""

    def test_layout(self):
        assert_allclose(svec([[1.0, 2.0], [2.0, 3.0]]), [1.0, 2.0 * math.sqrt(2.0), 3.0])

    def test_inner_product_is_trace(self, rng):
        X = rng.standard_normal((4, 4))
        Y = rng.standard_normal((4, 4))
        S1, S2 = X + X.T, Y + Y.T
        assert float(svec(S1) @ svec(S2)) == pytest.approx(float(np.trace(S1 @ S2)))

    @pytest.mark.parametrize("n", range(1, 11))
    def test_unsvec_inverts_svec(self, rng, n):
        X = rng.standard_normal((n, n))
        S = X + X.T
        v = svec(S)
        assert v.shape == (svec_dim(n),)
        assert_allclose(unsvec(v).array, S, atol=1e-13)
        assert_allclose(svec(unsvec(v)), v, atol=1e-13)

    def test_non_triangular_length(self):
        with pytest.raises(NonTriangularLength):
            unsvec(np.zeros(4))

    def test_basis_is_orthonormal(self):
        basis = unsvec_basis(3)
        gram = np.einsum("aij,bij->ab", basis, basis)
        assert basis.shape == (svec_dim(3), 3, 3)
        assert_allclose(gram, np.eye(svec_dim(3)), atol=1e-14)


class TestEigenvalues:
    """Extreme eigenvalues and spectra."""

    def test_extremes(self):
        S = np.diag([-2.0, 0.5, 3.0])
        assert eig_min_sym(S) == pytest.approx(-2.0)
        assert eig_max_sym(S) == pytest.approx(3.0)

    @pytest.mark.parametrize("eps", [0.1, 1.0])
    def test_shift_moves_extremes(self, rng, eps):
        X = rng.standard_normal((5, 5))
        S = X + X.T
        shifted = S + eps * np.eye(5)
        assert eig_min_sym(shifted) == pytest.approx(eig_min_sym(S) + eps, abs=1e-10)
        assert eig_max_sym(shifted) == pytest.approx(eig_max_sym(S) + eps, abs=1e-10)

    def test_empty_matrix_conventions(self):
        assert eig_min_sym(np.zeros((0, 0))) == math.inf
        assert eig_max_sym(np.zeros((0, 0))) == -math.inf

    def test_is_psd_uses_tolerance(self):
        assert is_psd(np.diag([1.0, -1e-10]))
        assert not is_psd(np.diag([1.0, -1e-6]))

    def test_spectrum_summary(self):
        summary = spectrum_summary(np.array([[0.0, 1.0], [-1.0, -0.5]]))
        assert len(summary.eigenvalues) == 2
        assert summary.max_real_part == pytest.approx(-0.25)


class TestSolveLinear:
    """LU solves with conditioning checks."""

    def test_solves_and_reports_condition(self):
        A = np.array([[4.0, 1.0], [2.0, 3.0]])
        X, cond = solve_linear(A, np.eye(2))
        assert_allclose(A @ X, np.eye(2), atol=1e-14)
        assert 1.0 <= cond < 10.0

    def test_vector_rhs(self):
        x, _ = solve_linear(np.diag([2.0, 4.0]), np.array([2.0, 2.0]))
        assert_allclose(x, [1.0, 0.5])

    def test_singular_matrix(self):
        with pytest.raises(SingularMatrix):
            solve_linear(np.array([[1.0, 2.0], [2.0, 4.0]]), np.eye(2))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            solve_linear(np.eye(2), np.ones((3, 1)))

    def test_empty_system(self):
        X, cond = solve_linear(np.zeros((0, 0)), np.zeros((0, 2)))
        assert X.shape == (0, 2)
        assert cond == 1.0

    def test_ill_conditioned_warns_by_default(self, caplog):
        A = np.diag([1.0, 1e-13])
        with caplog.at_level("WARNING"):
            solve_linear(A, np.eye(2))
        assert "ill-conditioned" in caplog.text

    def test_ill_conditioned_raises_when_configured(self, monkeypatch):
        monkeypatch.setenv("GTARE_RAISE_ILL_CONDITIONED", "true")
        reset_tolerances()
        with pytest.raises(IllConditioned):
            solve_linear(np.diag([1.0, 1e-13]), np.eye(2))


class TestTolerances:
    """Environment-driven configuration."""

    def test_defaults(self):
        tol = get_tolerances()
        assert tol.psd_tol == 1e-8
        assert tol.outer_tol == 1e-7
        assert tol.max_outer == 100

    def test_env_override(self, monkeypatch):
        monkeypatch.setenv("GTARE_OUTER_TOL", "1e-9")
        monkeypatch.setenv("GTARE_MAX_OUTER", "7")
        reset_tolerances()
        tol = get_tolerances()
        assert tol.outer_tol == 1e-9
        assert tol.max_outer == 7

    def test_bad_value_falls_back(self, monkeypatch):
        monkeypatch.setenv("GTARE_PSD_TOL", "tiny")
        reset_tolerances()
        assert get_tolerances().psd_tol == 1e-8

    def test_record_is_cached(self):
        assert get_tolerances() is get_tolerances()
