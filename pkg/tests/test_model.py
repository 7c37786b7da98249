import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.errors import InvalidProblem, ShapeMismatch, SingularRP, UnsupportedRankDeficientR
from src.model import (
    Gains,
    GtareProblem,
    closed_loop,
    closed_loop_value,
    coefficient_blocks,
    completion_of_squares,
    cost_weight,
    ensure_full_rank_r,
    ensure_valid,
    g_expansion,
    gain_increment,
    gains,
    identity_defects,
    in_dom_G,
    n_matrix,
    random_problem,
    residual_G,
    schur_r22,
    validate,
)
from tests.conftest import SCALAR_GAME, scalar_g


class TestProblem:
    """Construction and validation of game data."""

    def test_from_arrays_defaults(self, det_scalar_problem):
        p = det_scalar_problem
        assert (p.n, p.m1, p.m2, p.r) == (1, 1, 1, 0)
        assert_allclose(p.S, np.zeros((2, 1)))
        assert_allclose(p.R, np.diag([-4.0, 1.0]))
        assert p.C_stack.shape == (0, 1, 1)
        assert p.D_stack.shape == (0, 1, 2)

    def test_loaded_fixture_dimensions(self, three_state_problem):
        p = three_state_problem
        assert (p.n, p.m1, p.m2, p.r) == (3, 3, 3, 2)
        assert p.D_stack.shape == (2, 3, 6)
        assert_allclose(p.B, np.hstack([p.B1, p.B2]))
        assert validate(p) == []

    def test_arrays_are_read_only(self, det_scalar_problem):
        with pytest.raises(ValueError):
            det_scalar_problem.A[0, 0] = 1.0

    def test_wrong_shape_reported(self, det_scalar_problem):
        bad = det_scalar_problem.with_changes(S1=np.zeros((2, 1)))
        diagnostics = validate(bad)
        assert any("S1 has shape" in d for d in diagnostics)
        with pytest.raises(InvalidProblem):
            ensure_valid(bad)

    def test_asymmetric_weight_reported(self, three_state_problem):
        Q = np.array(three_state_problem.Q)
        Q[0, 1] += 0.1
        diagnostics = validate(three_state_problem.with_changes(Q=Q))
        assert any("Q is not symmetric" in d for d in diagnostics)

    def test_non_finite_reported(self, det_scalar_problem):
        diagnostics = validate(det_scalar_problem.with_changes(A=[[np.nan]]))
        assert any("non-finite" in d for d in diagnostics)

    def test_noise_list_length_reported(self, scalar_problem):
        bad = GtareProblem(**{**scalar_problem.__dict__, "D2": ()})
        assert any("D2 has 0 matrices" in d for d in validate(bad))

    def test_rank_deficient_r_rejected(self, det_scalar_problem):
        with pytest.raises(UnsupportedRankDeficientR):
            ensure_full_rank_r(det_scalar_problem.with_changes(R11=[[0.0]]))

    def test_random_problem_starts_in_domain(self, rng):
        problem = random_problem(rng, 3, 2, 2, 2)
        assert validate(problem) == []
        assert in_dom_G(problem, np.zeros((3, 3)))


class TestGtareMap:
    """Coefficient blocks, gains and the residual G(P)."""

    def test_scalar_closed_form(self, det_scalar_problem):
        p = 0.3
        assert residual_G(det_scalar_problem, [[p]]).array[0, 0] == pytest.approx(-2 * p + 1 - 0.75 * p * p)
        K = gains(det_scalar_problem, [[p]])
        assert_allclose(K.K1, [[p / 4]])
        assert_allclose(K.K2, [[-p]])

    def test_noisy_scalar_matches_hand_formula(self, scalar_problem):
        for p in (0.0, 0.25, 0.8):
            assert residual_G(scalar_problem, [[p]]).array[0, 0] == pytest.approx(scalar_g(p, **SCALAR_GAME))

    def test_residual_at_zero(self, three_state_problem):
        p = three_state_problem
        expected = p.Q - p.S.T @ np.linalg.solve(p.R, p.S)
        assert_allclose(residual_G(p, np.zeros((3, 3))).array, expected, atol=1e-12)

    def test_blocks_partition(self, three_state_problem, three_state_p_star):
        blocks = coefficient_blocks(three_state_problem, three_state_p_star)
        assert_allclose(blocks.S1P, blocks.SP[:3])
        assert_allclose(blocks.R12P, blocks.RP.array[:3, 3:])
        assert blocks.R22P.shape == (3, 3)

    @pytest.mark.parametrize("field", ["QP", "SP", "RP"])
    def test_blocks_are_affine(self, three_state_problem, rng, field):
        def block(P):
            value = getattr(coefficient_blocks(three_state_problem, P), field)
            return np.asarray(getattr(value, "array", value))

        X = rng.standard_normal((3, 3))
        Y = rng.standard_normal((3, 3))
        X, Y = X + X.T, Y + Y.T
        zero = np.zeros((3, 3))
        assert_allclose(block(2.0 * X - 0.5 * Y), 2.0 * block(X) - 0.5 * block(Y) - 0.5 * block(zero), atol=1e-10)

    def test_printed_solution_is_in_domain(self, three_state_problem, three_state_p_star):
        assert in_dom_G(three_state_problem, three_state_p_star)

    def test_noise_inputs_are_indexed_player_first(self, three_state_problem, three_state_p_star):
        # D1 = [D_11, D_12], D2 = [D_21, D_22]
        assert three_state_problem.D1[1][0, 0] == pytest.approx(0.005681)
        assert three_state_problem.D2[0][0, 0] == pytest.approx(0.009843)
        assert residual_G(three_state_problem, three_state_p_star).norm() <= 5e-4

    def test_indefinite_r22_leaves_domain(self, det_scalar_problem):
        assert not in_dom_G(det_scalar_problem.with_changes(R22=[[-1.0]]), [[0.0]])

    def test_schur_complement(self, det_scalar_problem):
        assert_allclose(schur_r22(det_scalar_problem, [[0.0]]).array, [[-4.0]])

    def test_singular_r_of_p(self):
        problem = GtareProblem.from_arrays(
            A=[[-1.0]], B1=[[1.0]], B2=[[1.0]], Q=[[1.0]], R11=[[-1.0]], R22=[[1.0]],
            C=[[[0.0]]], D1=[[[1.0]]], D2=[[[0.0]]],
        )
        # R11(P) = -1 + P vanishes at P = 1
        with pytest.raises(SingularRP):
            gains(problem, [[1.0]])

    def test_shape_checked(self, det_scalar_problem):
        with pytest.raises(ShapeMismatch):
            residual_G(det_scalar_problem, np.zeros((2, 2)))

    def test_closed_loop(self, det_scalar_problem):
        A_cl, C_cl = closed_loop(det_scalar_problem, [[0.4]])
        assert_allclose(A_cl, [[-1.0 + 0.1 - 0.4]])
        assert C_cl == ()


class TestIdentities:
    """Algebraic identities behind the iteration."""

    def test_defects_are_round_off(self, rng):
        problem = random_problem(rng, 3, 2, 2, 2)
        P = np.zeros((3, 3))
        X = rng.standard_normal((3, 3))
        Z = 0.05 * (X @ X.T)
        thetas = [Gains(K1=rng.standard_normal((2, 3)), K2=rng.standard_normal((2, 3))) for _ in range(3)]
        defects = identity_defects(problem, P, Z, thetas)
        assert defects.worst < 1e-10

    def test_completion_of_squares_at_the_gain(self, three_state_problem, three_state_p_star):
        K = gains(three_state_problem, three_state_p_star)
        rhs = completion_of_squares(three_state_problem, three_state_p_star, K.K1, K.K2)
        assert_allclose(rhs.array, residual_G(three_state_problem, three_state_p_star).array, atol=1e-10)

    def test_expansion(self, three_state_problem, rng):
        X = rng.standard_normal((3, 3))
        Z = 0.01 * (X + X.T)
        P = np.eye(3)
        assert_allclose(
            g_expansion(three_state_problem, P, Z).array,
            residual_G(three_state_problem, P + Z).array,
            atol=1e-10,
        )

    def test_gain_increment(self, scalar_problem):
        direct, via_n = gain_increment(scalar_problem, [[0.1]], [[0.2]])
        assert_allclose(direct, via_n, atol=1e-13)

    def test_n_matrix_is_linear(self, three_state_problem, rng):
        P = 0.5 * np.eye(3)
        Z1, Z2 = (0.1 * (X + X.T) for X in (rng.standard_normal((3, 3)), rng.standard_normal((3, 3))))
        total = n_matrix(three_state_problem, P, Z1 + Z2)
        parts = n_matrix(three_state_problem, P, Z1) + n_matrix(three_state_problem, P, Z2)
        assert_allclose(total, parts, atol=1e-13)


class TestValue:
    """Cost weight and value matrix of a fixed feedback pair."""

    def test_scalar_value(self, det_scalar_problem):
        feedback = Gains(K1=np.array([[0.1]]), K2=np.array([[-0.5]]))
        assert cost_weight(det_scalar_problem, feedback).array[0, 0] == pytest.approx(1.21)
        # A_cl = -1.4, so Y = 1.21 / 2.8
        assert closed_loop_value(det_scalar_problem, feedback).array[0, 0] == pytest.approx(1.21 / 2.8)

    def test_value_at_saddle_equals_solution(self, three_state_problem, three_state_p_star):
        feedback = gains(three_state_problem, three_state_p_star)
        Y = closed_loop_value(three_state_problem, feedback).array
        assert_allclose(Y, three_state_p_star, atol=1e-3)


class TestIdentitySuite:
    """Identities on random (problem, P, Z) triples."""

    def test_random_triples(self, rng):
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(1, 5))
            m1 = int(rng.integers(1, 3))
            m2 = int(rng.integers(1, 3))
            r = int(rng.integers(0, 3))
            problem = random_problem(rng, n, m1, m2, r)
            X = rng.standard_normal((n, n))
            Y = rng.standard_normal((n, n))
            P = 0.1 * (X @ X.T)
            Z = 0.05 * (Y + Y.T)
            thetas = [Gains(K1=rng.standard_normal((m1, n)), K2=rng.standard_normal((m2, n)))]
            worst = max(worst, identity_defects(problem, P, Z, thetas).worst)
        assert worst <= 1e-9
