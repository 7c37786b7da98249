import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.errors import InvalidSimConfig, NonFinite, ShapeMismatch
from src.model import Gains, closed_loop_value, gains
from src.sim import (
    SimConfig,
    discrete_expected_cost,
    estimate_cost,
    simulate,
    truncation_tail,
    value_check,
)
from src.solver import solve_gtare
from tests.conftest import DET_SCALAR_P_STAR


@pytest.fixture
def scalar_feedback(scalar_problem) -> Gains:
    return solve_gtare(scalar_problem).gains


class TestSimConfig:
    """Validation of simulation settings."""

    def test_defaults(self):
        cfg = SimConfig(x0=[1.0, 1.0, 1.0])
        assert cfg.steps == 10000
        assert cfg.times[-1] == pytest.approx(10.0)
        assert cfg.x0.shape == (3,)

    @pytest.mark.parametrize(
        "overrides",
        [
            {"dt": 0.0},
            {"dt": -1e-3},
            {"horizon": 0.0},
            {"dt": 2.0, "horizon": 1.0},
            {"paths": 0},
            {"seed": -1},
            {"scheme": "milstein"},
            {"keep_paths": -1},
        ],
    )
    def test_invalid(self, overrides):
        with pytest.raises(InvalidSimConfig):
            SimConfig(x0=[1.0], **overrides)


class TestSimulate:
    """Euler-Maruyama paths of the closed loop."""

    def test_zero_initial_state(self, scalar_problem, scalar_feedback):
        batch = simulate(scalar_problem, scalar_feedback, SimConfig(x0=[0.0], dt=0.01, horizon=1.0, paths=20))
        assert np.all(batch.mean_states == 0.0)
        assert np.all(batch.cost_samples == 0.0)
        assert np.all(batch.sample_u2 == 0.0)

    def test_deterministic_loop_matches_recursion(self, det_scalar_problem):
        feedback = gains(det_scalar_problem, [[DET_SCALAR_P_STAR]])
        cfg = SimConfig(x0=[2.0], dt=0.01, horizon=3.0, paths=4)
        batch = simulate(det_scalar_problem, feedback, cfg)
        mean, stderr = estimate_cost(det_scalar_problem, batch)
        assert stderr == pytest.approx(0.0, abs=1e-12)
        assert mean == pytest.approx(discrete_expected_cost(det_scalar_problem, feedback, cfg), rel=1e-10)
        a_cl = -1.0 - 0.75 * DET_SCALAR_P_STAR
        assert batch.terminal_states[0, 0] == pytest.approx(2.0 * (1.0 + 0.01 * a_cl) ** cfg.steps, rel=1e-10)

    def test_chunking_does_not_change_paths(self, scalar_problem, scalar_feedback):
        base = dict(x0=[1.0], dt=0.01, horizon=1.0, paths=30, seed=11)
        serial = simulate(scalar_problem, scalar_feedback, SimConfig(chunk=30, workers=1, **base))
        threaded = simulate(scalar_problem, scalar_feedback, SimConfig(chunk=7, workers=3, **base))
        assert_allclose(threaded.cost_samples, serial.cost_samples, rtol=1e-12)
        assert_allclose(threaded.mean_states, serial.mean_states, rtol=1e-12, atol=1e-15)

    def test_seed_changes_paths(self, scalar_problem, scalar_feedback):
        base = dict(x0=[1.0], dt=0.01, horizon=1.0, paths=10)
        a = simulate(scalar_problem, scalar_feedback, SimConfig(seed=1, **base))
        b = simulate(scalar_problem, scalar_feedback, SimConfig(seed=2, **base))
        assert not np.allclose(a.cost_samples, b.cost_samples)

    def test_stored_shapes(self, scalar_problem, scalar_feedback):
        cfg = SimConfig(x0=[1.0], dt=0.1, horizon=1.0, paths=5, keep_paths=2, store_all=True)
        batch = simulate(scalar_problem, scalar_feedback, cfg)
        assert batch.sample_states.shape == (2, 11, 1)
        assert batch.sample_u1.shape == (2, 11, 1)
        assert batch.states.shape == (5, 11, 1)
        assert batch.terminal_states.shape == (5, 1)
        assert_allclose(batch.states[:2], batch.sample_states)

    def test_x0_shape_checked(self, scalar_problem, scalar_feedback):
        with pytest.raises(ShapeMismatch):
            simulate(scalar_problem, scalar_feedback, SimConfig(x0=[1.0, 2.0], dt=0.1, horizon=1.0))

    def test_overflow_reported(self, det_scalar_problem, caplog):
        feedback = Gains(K1=np.zeros((1, 1)), K2=np.array([[100.0]]))
        cfg = SimConfig(x0=[1.0], dt=0.1, horizon=50.0, paths=2)
        with caplog.at_level("WARNING"), pytest.raises(NonFinite):
            simulate(det_scalar_problem, feedback, cfg)
        assert "not mean-square stable" in caplog.text


class TestCostChecks:
    """Truncation tails and the value comparison."""

    def test_scalar_tail(self, scalar_problem, scalar_feedback):
        cfg = SimConfig(x0=[1.5], dt=0.01, horizon=2.0, paths=1)
        tail = truncation_tail(scalar_problem, scalar_feedback, cfg)
        Y = closed_loop_value(scalar_problem, scalar_feedback).array[0, 0]
        assert tail.expected_tail == pytest.approx(Y * 2.25 * math.exp(tail.abscissa * 2.0), rel=1e-9)
        assert tail.decay_factor == pytest.approx(math.exp(tail.abscissa * 2.0))

    def test_tail_starts_at_last_simulated_time(self, scalar_problem, scalar_feedback):
        # three steps of 0.3 end at 0.9, short of the requested horizon
        cfg = SimConfig(x0=[1.0], dt=0.3, horizon=1.0, paths=1)
        tail = truncation_tail(scalar_problem, scalar_feedback, cfg)
        Y = closed_loop_value(scalar_problem, scalar_feedback).array[0, 0]
        assert tail.horizon == pytest.approx(0.9)
        assert tail.decay_factor == pytest.approx(math.exp(tail.abscissa * 0.9))
        assert tail.expected_tail == pytest.approx(Y * math.exp(tail.abscissa * 0.9), rel=1e-9)

    def test_discrete_cost_approaches_value(self, scalar_problem, scalar_feedback):
        cfg = SimConfig(x0=[1.0], dt=1e-3, horizon=20.0, paths=1)
        Y = closed_loop_value(scalar_problem, scalar_feedback).array[0, 0]
        assert discrete_expected_cost(scalar_problem, scalar_feedback, cfg) == pytest.approx(Y, rel=1e-2)

    def test_value_check_scalar(self, scalar_problem, scalar_feedback):
        cfg = SimConfig(x0=[1.0], dt=0.01, horizon=5.0, paths=400, seed=3)
        batch = simulate(scalar_problem, scalar_feedback, cfg)
        check = value_check(scalar_problem, scalar_feedback, batch)
        assert check.passed
        assert check.to_dict()["allowance"] >= 3.0 * check.stderr

    @pytest.mark.slow
    def test_value_check_three_state(self, three_state_problem):
        report = solve_gtare(three_state_problem)
        cfg = SimConfig(x0=np.ones(3), dt=1e-3, horizon=10.0, paths=2000, seed=0)
        batch = simulate(three_state_problem, report.gains, cfg)
        check = value_check(three_state_problem, report.gains, batch)
        assert check.value == pytest.approx(15.096, abs=1e-2)
        assert check.passed
