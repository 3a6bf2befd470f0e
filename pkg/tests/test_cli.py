import io
import json
import logging

import numpy as np
import pytest

from varmatch.cli import dumps, main, parse_problem, problem_to_json
from varmatch.covdata import CovSequence
from varmatch.matpoly import MatPoly, PseudoPoly

AR1 = {"m": 1, "n": 1, "covariances": [[[1.3333333333333333]], [[0.6666666666666666]]],
       "ma": {"type": "trivial"}}


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestSolve:
    def test_ar1_fixture(self, tmp_path, capsys):
        code, out, err = run(["solve", write(tmp_path, "p.json", AR1)], capsys)
        assert code == 0
        sol = json.loads(out)
        np.testing.assert_allclose(np.array(sol["ar"]).ravel(), [1, -0.5], atol=1e-10)
        diag = sol["diagnostics"]
        assert diag["verified"] and diag["max_deviation"] < 1e-8
        assert diag["path"][-1]["t"] == 1.0
        assert set(diag["theorem1"]) == {"detPn", "traceP0", "lambda_min", "holds"}
        assert "residual" in err

    def test_identity_fixture(self, tmp_path, capsys):
        doc = {"m": 2, "n": 1, "covariances": [np.eye(2).tolist(), np.zeros((2, 2)).tolist()],
               "ma": {"type": "trivial"}}
        code, out, _ = run(["solve", write(tmp_path, "p.json", doc)], capsys)
        assert code == 0
        np.testing.assert_allclose(json.loads(out)["ar"], MatPoly.identity(2, 1).coeffs, atol=1e-12)

    def test_not_pd_exit_2(self, tmp_path, capsys):
        doc = {"m": 1, "n": 1, "covariances": [[[1.0]], [[1.1]]], "ma": {"type": "trivial"}}
        code, out, err = run(["solve", write(tmp_path, "p.json", doc)], capsys)
        assert code == 2
        assert "T_n not positive definite" in err
        assert "diagnostics" in json.loads(out)

    def test_p_zero_on_circle_exit_2(self, tmp_path, capsys):
        doc = dict(AR1, ma={"type": "pseudo", "coefficients": [[[2.0]], [[1.0]]]})
        code, _, err = run(["solve", write(tmp_path, "p.json", doc)], capsys)
        assert code == 2 and "P not positive" in err

    def test_singular_Bn_warns(self, tmp_path, capsys, caplog):
        doc = dict(AR1, ma={"type": "polynomial", "coefficients": [[[1.0]], [[0.0]]]})
        with caplog.at_level(logging.WARNING):
            code, out, _ = run(["solve", write(tmp_path, "p.json", doc)], capsys)
        assert "det P_n" in caplog.text
        assert json.loads(out)["diagnostics"]["theorem1"]["holds"] is False
        # pure AR data with B = 1 is matched exactly despite the warning
        assert code == 0

    @pytest.mark.parametrize("doc", [
        {"m": 1, "n": 1, "covariances": [[[1.0]]]},
        {"m": 1, "covariances": [[[1.0]], [[0.1]]]},
        {"m": 1, "n": 1, "covariances": [[[1.0]], [["x"]]]},
        {"m": 1, "n": 1, "covariances": [[[1.0]], [[0.1]]], "ma": {"type": "bogus"}},
        {"m": 1, "n": 1, "covariances": [[[1.0]], [[0.1]]], "options": {"nonsense": 1}},
        [1, 2, 3],
    ])
    def test_invalid_input_exit_1(self, tmp_path, capsys, doc):
        code, _, _ = run(["solve", write(tmp_path, "p.json", doc)], capsys)
        assert code == 1

    def test_non_finite_exit_1(self, tmp_path, capsys):
        path = tmp_path / "p.json"
        path.write_text('{"m": 1, "n": 0, "covariances": [[[NaN]]]}')
        assert run(["solve", str(path)], capsys)[0] == 1

    def test_missing_file_exit_1(self, tmp_path, capsys):
        assert run(["solve", str(tmp_path / "nope.json")], capsys)[0] == 1

    def test_stalled_exit_3(self, tmp_path, capsys):
        code, out, _ = run(["generate", "--seed", "1", "--m", "2", "--n", "2"], capsys)
        doc = json.loads(out)
        doc["options"] = {"dt_min": 1e-3, "dt_init": 1e-3, "dt_growth": 1.0, "newton_max_iter": 1,
                          "corrector_max_iter": 1, "newton_tol": 1e-15}
        code, out, _ = run(["solve", write(tmp_path, "p.json", doc)], capsys)
        assert code == 3
        assert "diagnostics" in json.loads(out)

    def test_flags_and_out(self, tmp_path, capsys):
        out = tmp_path / "sol.json"
        code, stdout, _ = run(["solve", write(tmp_path, "p.json", AR1), "--out", str(out), "--tol",
                               "1e-12", "--oracle", "fft", "--grid", "1024", "--no-normalize"], capsys)
        assert code == 0 and stdout == ""
        assert json.loads(out.read_text())["diagnostics"]["normalized"] is False

    def test_stdin(self, monkeypatch, capsys):
        monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(AR1)))
        code, out, _ = run(["solve", "-"], capsys)
        assert code == 0 and json.loads(out)["diagnostics"]["verified"]

    def test_batch(self, tmp_path, capsys):
        src = tmp_path / "in"
        src.mkdir()
        write(src, "a.json", AR1)
        write(src, "b.json", {"m": 1, "n": 1, "covariances": [[[1.0]], [[1.1]]]})
        code, _, _ = run(["solve", "--batch", str(src), "--out", str(tmp_path / "res")], capsys)
        assert code == 2
        assert sorted(p.name for p in (tmp_path / "res").iterdir()) == ["a.json", "b.json"]


class TestOtherCommands:
    def test_factor(self, tmp_path, capsys):
        code, out, _ = run(["factor", write(tmp_path, "p.json", {"m": 1, "n": 1,
                                                                  "coefficients": [[[2.5]], [[1.0]]]})],
                           capsys)
        assert code == 0
        np.testing.assert_allclose(np.array(json.loads(out)["coefficients"]).ravel(),
                                   [1.414214, 0.707107], atol=1e-6)

    def test_factor_not_positive(self, tmp_path, capsys):
        doc = {"m": 1, "n": 1, "coefficients": [[[1.0]], [[0.6]]]}
        assert run(["factor", write(tmp_path, "p.json", doc)], capsys)[0] == 2

    @pytest.mark.parametrize("oracle", ["linear", "fft", "both"])
    def test_cov(self, tmp_path, capsys, oracle):
        doc = {"m": 1, "n": 1, "ar": [[[1.0]], [[-0.5]]], "ma": {"type": "trivial"}}
        code, out, _ = run(["cov", write(tmp_path, "m.json", doc), "--oracle", oracle], capsys)
        assert code == 0
        np.testing.assert_allclose(np.array(json.loads(out)["covariances"]).ravel(), [4 / 3, 2 / 3],
                                   atol=1e-10)

    def test_verify(self, tmp_path, capsys):
        prob = write(tmp_path, "p.json", AR1)
        good = write(tmp_path, "good.json", {"ar": [[[1.0]], [[-0.5]]]})
        bad = write(tmp_path, "bad.json", {"ar": [[[1.0]], [[0.0]]]})
        code, out, _ = run(["verify", prob, good], capsys)
        assert code == 0 and json.loads(out)["verified"]
        code, out, _ = run(["verify", prob, bad], capsys)
        assert code == 4
        # A = 1 gives Sigma = (1, 0): max(1/3 / (7/3), (2/3) / (5/3)) = 0.4
        assert json.loads(out)["max_deviation"] == pytest.approx(0.4, rel=1e-9)

    def test_generate_solve_round_trip(self, tmp_path, capsys):
        code, out, _ = run(["generate", "--seed", "42", "--m", "2", "--n", "1"], capsys)
        assert code == 0
        code, out, _ = run(["solve", write(tmp_path, "p.json", json.loads(out))], capsys)
        assert code == 0 and json.loads(out)["diagnostics"]["verified"]

    def test_jacobian_check(self, tmp_path, capsys):
        code, out, _ = run(["jacobian-check", "--seed", "3"], capsys)
        assert code == 0 and json.loads(out)["max_relative_deviation"] <= 1e-5
        doc = {"m": 1, "n": 1, "ar": [[[1.0]], [[0.5]]], "covariances": [[[1.0]], [[0.2]]]}
        code, out, _ = run(["jacobian-check", write(tmp_path, "j.json", doc)], capsys)
        assert code == 0


class TestSerialization:
    def test_problem_round_trip(self):
        rng = np.random.default_rng(0)
        data = CovSequence(rng.normal(size=(3, 2, 2)) + np.array([5 * np.eye(2), 0 * np.eye(2), 0 * np.eye(2)]))
        for ma in (None, MatPoly(np.tril(rng.normal(size=(3, 2, 2)))),
                   PseudoPoly([5 * np.eye(2), rng.normal(size=(2, 2)), rng.normal(size=(2, 2))])):
            text = dumps(problem_to_json(data, ma, {"newton_tol": 1e-11}))
            d2, ma2, opts = parse_problem(json.loads(text))
            assert np.array_equal(d2.C, data.C)
            assert opts == {"newton_tol": 1e-11}
            assert (ma2 is None and ma is None) or ma2 == ma
            assert dumps(problem_to_json(d2, ma2, opts)) == text

    def test_solution_round_trip(self, tmp_path, capsys):
        _, out, _ = run(["solve", write(tmp_path, "p.json", AR1)], capsys)
        assert dumps(json.loads(out)) == out


class TestDeterminism:
    def test_generate_bytes(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for f in (a, b):
            assert main(["generate", "--seed", "7", "--m", "3", "--n", "2", "--out", str(f)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_solve_bytes(self, tmp_path, capsys):
        prob = tmp_path / "p.json"
        main(["generate", "--seed", "5", "--m", "2", "--n", "2", "--out", str(prob)])
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for f in (a, b):
            assert main(["solve", str(prob), "--out", str(f)]) == 0
        assert a.read_bytes() == b.read_bytes()
