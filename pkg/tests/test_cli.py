import json
import logging

import numpy as np
import pandas as pd
import pytest

from src.cli import main, problem_from_dict, problem_to_dict, write_json, write_problem
from src.errors import ProblemFileError
from tests.conftest import DET_SCALAR_P_STAR, DET_SCALAR_P_TILDE, FIXTURES

THREE_STATE = str(FIXTURES / "three_state_game.json")
THREE_STATE_SOLUTION = str(FIXTURES / "three_state_solution.json")
SCALAR = str(FIXTURES / "scalar_game.json")


@pytest.fixture(autouse=True)
def restore_root_logger():
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def run(capsys, *argv):
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


@pytest.fixture
def det_scalar_file(tmp_path, det_scalar_problem):
    path = tmp_path / "det_scalar.json"
    write_problem(path, det_scalar_problem)
    return path


class TestSolveCommand:
    def test_three_state(self, capsys, tmp_path, three_state_p_star):
        trace = tmp_path / "trace.csv"
        out = tmp_path / "solution.json"
        code, payload = run(capsys, "solve", THREE_STATE, "--trace", str(trace), "--out", str(out))
        assert code == 0
        assert payload["status"] == "ok"
        assert np.max(np.abs(np.array(payload["P_star"]) - three_state_p_star)) <= 1e-4

        lines = trace.read_text().strip().splitlines()
        assert len(lines) == payload["outer_iters"] + 1
        assert lines[0].startswith("k,z_norm,residual_norm,z_eig_1")
        assert json.loads(out.read_text())["P_star"] == payload["P_star"]

    def test_deterministic_scalar(self, capsys, det_scalar_file):
        code, payload = run(capsys, "solve", str(det_scalar_file), "--saddle")
        assert code == 0
        assert payload["P_star"][0][0] == pytest.approx(DET_SCALAR_P_STAR, abs=1e-9)

    def test_not_in_domain(self, capsys, tmp_path, det_scalar_problem):
        path = tmp_path / "indefinite.json"
        write_problem(path, det_scalar_problem.with_changes(R22=[[-1.0]]))
        code, payload = run(capsys, "solve", str(path))
        assert code == 2
        assert payload["status"] == "error"
        assert payload["error"] == "NotInDomain"

    def test_missing_file(self, capsys, tmp_path):
        code, payload = run(capsys, "solve", str(tmp_path / "absent.json"))
        assert code == 1
        assert payload["error"] == "ProblemFileError"

    def test_max_outer(self, capsys):
        code, payload = run(capsys, "solve", THREE_STATE, "--max-outer", "2")
        assert code == 2
        assert payload["error"] == "MaxOuterExceeded"


class TestResidualCommand:
    def test_printed_solution(self, capsys):
        code, payload = run(capsys, "residual", THREE_STATE, THREE_STATE_SOLUTION)
        assert code == 0
        # the printed P* is rounded to six decimals; its residual is about 1.5e-4
        assert payload["residual_norm"] <= 5e-4
        assert payload["in_dom"] is True

    def test_wrong_shape(self, capsys, tmp_path):
        path = tmp_path / "p.json"
        write_json(path, {"P": [[1.0, 0.0], [0.0, 1.0]]})
        code, payload = run(capsys, "residual", THREE_STATE, str(path))
        assert code == 1
        assert payload["error"] == "ShapeMismatch"


class TestCertificateCommand:
    def test_admissible(self, capsys, tmp_path, det_scalar_file):
        code, payload = run(capsys, "certificate", str(det_scalar_file))
        assert code == 0
        assert payload["status"] == "ok"
        assert payload["P_tilde"][0][0] == pytest.approx(DET_SCALAR_P_TILDE, abs=1e-9)

    def test_unstable_gain_rejected(self, capsys, tmp_path, det_scalar_file):
        path = tmp_path / "L.json"
        write_json(path, {"L": [[2.0]]})
        code, payload = run(capsys, "certificate", str(det_scalar_file), str(path))
        assert code == 3
        assert payload["status"] == "rejected"
        assert payload["failure_reason"] == "ClosedLoopUnstable"

    def test_gain_from_problem_file(self, capsys, tmp_path, det_scalar_problem):
        path = tmp_path / "with_l.json"
        write_problem(path, det_scalar_problem, L=np.array([[2.0]]))
        code, _ = run(capsys, "certificate", str(path))
        assert code == 3

    def test_dimension_mismatch(self, capsys, tmp_path, det_scalar_file):
        path = tmp_path / "L.json"
        write_json(path, {"L": [[0.0], [0.0]]})
        code, payload = run(capsys, "certificate", str(det_scalar_file), str(path))
        assert code == 1
        assert payload["error"] == "ShapeMismatch"


class TestValidateCommand:
    def test_valid(self, capsys):
        code, payload = run(capsys, "validate", THREE_STATE)
        assert code == 0
        assert payload == {"status": "ok", "diagnostics": []}

    def test_asymmetric_q(self, capsys, tmp_path):
        data = json.loads((FIXTURES / "three_state_game.json").read_text())
        data["Q"][0][1] += 1.0
        path = tmp_path / "asym.json"
        write_json(path, data)
        code, payload = run(capsys, "validate", str(path))
        assert code == 1
        assert any("Q is not symmetric" in d for d in payload["diagnostics"])

    def test_unknown_field(self, capsys, tmp_path, det_scalar_problem):
        data = problem_to_dict(det_scalar_problem)
        data["comment"] = "scalar game"
        path = tmp_path / "extra.json"
        write_json(path, data)
        code, payload = run(capsys, "validate", str(path))
        assert code == 1
        assert payload["error"] == "ProblemFileError"
        code, payload = run(capsys, "--lax", "validate", str(path))
        assert code == 0


class TestSimulateCommand:
    @pytest.fixture
    def scalar_solution(self, capsys, tmp_path):
        out = tmp_path / "solution.json"
        assert main(["solve", SCALAR, "--out", str(out)]) == 0
        capsys.readouterr()
        return out

    def test_zero_initial_state(self, capsys, tmp_path, scalar_solution):
        csv = tmp_path / "paths.csv"
        code, payload = run(
            capsys, "simulate", SCALAR, str(scalar_solution),
            "--x0", "0", "--dt", "0.01", "--horizon", "1", "--paths", "20", "--out", str(csv),
        )
        assert code == 0
        assert payload["cost_mean"] == 0.0
        frame = pd.read_csv(csv)
        assert len(frame) == 101
        assert (frame.drop(columns="t").to_numpy() == 0.0).all()

    def test_same_seed_same_bytes(self, capsys, tmp_path, scalar_solution):
        outputs = []
        for name in ("a.csv", "b.csv"):
            csv = tmp_path / name
            args = ["simulate", SCALAR, str(scalar_solution), "--dt", "0.01", "--horizon", "1",
                    "--paths", "50", "--seed", "9", "--out", str(csv), "--stride", "10"]
            code, payload = run(capsys, *args)
            assert code == 0
            outputs.append((csv.read_bytes(), payload["cost_mean"]))
        assert outputs[0] == outputs[1]
        assert "value_check" in payload

    def test_x0_length_checked(self, capsys, scalar_solution):
        code, payload = run(capsys, "simulate", SCALAR, str(scalar_solution), "--x0", "1,2")
        assert code == 1
        assert payload["error"] == "InvalidSimConfig"

    def test_invalid_step(self, capsys, scalar_solution):
        code, payload = run(capsys, "simulate", SCALAR, str(scalar_solution), "--dt", "0")
        assert code == 1
        assert payload["error"] == "InvalidSimConfig"


class TestProblemFiles:
    def test_write_then_read(self, tmp_path, three_state_problem):
        path = tmp_path / "copy.json"
        write_problem(path, three_state_problem, L=np.zeros((3, 3)))
        problem, L = problem_from_dict(json.loads(path.read_text()))
        np.testing.assert_array_equal(problem.A, three_state_problem.A)
        np.testing.assert_array_equal(problem.D2[1], three_state_problem.D2[1])
        np.testing.assert_array_equal(L, np.zeros((3, 3)))

    def test_missing_field(self, det_scalar_problem):
        data = problem_to_dict(det_scalar_problem)
        del data["R22"]
        with pytest.raises(ProblemFileError, match="R22"):
            problem_from_dict(data)
