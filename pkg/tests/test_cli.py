import json

import numpy as np
import pytest

from motkit.cli import main


@pytest.fixture()
def pair_file(tmp_path):
    doc = {"mu": {"type": "discrete", "atoms": [[-0.5, 0.5], [0.5, 0.5]]},
           "nu": {"type": "discrete", "atoms": [[-2.0, 0.5], [2.0, 0.5]]}}
    path = tmp_path / "pair.json"
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture()
def reversed_file(tmp_path):
    doc = {"mu": {"type": "discrete", "atoms": [[-1.0, 0.5], [1.0, 0.5]]},
           "nu": {"type": "discrete", "atoms": [[0.0, 1.0]]}}
    path = tmp_path / "rev.json"
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture()
def overlap_file(tmp_path):
    doc = {"mu": {"type": "discrete",
                  "atoms": [[-0.5, 0.4], [0.5, 0.4], [1.0, 0.2]]},
           "nu": {"type": "discrete",
                  "atoms": [[-2.0, 0.4], [2.0, 0.4], [1.0, 0.2]]}}
    path = tmp_path / "overlap.json"
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture()
def radial_file(tmp_path):
    doc = {"dim": 2,
           "mu": {"type": "radial-grid",
                  "r": list(np.linspace(0.0, 1.0, 26)),
                  "f": [1.0 / np.pi] * 25},
           "nu": {"type": "radial-atoms", "atoms": [[2.0, 1.0]]}}
    path = tmp_path / "radial.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestCheckOrder:
    def test_in_order_exit_zero(self, pair_file, capsys):
        assert main(["check-order", pair_file]) == 0
        assert json.loads(capsys.readouterr().out)["in_order"] is True

    def test_reversed_exit_one(self, reversed_file, capsys):
        assert main(["check-order", reversed_file]) == 1
        rep = json.loads(capsys.readouterr().out)
        assert abs(rep["worst_k"]) < 1e-9

    def test_missing_file_exit_two(self, tmp_path):
        assert main(["check-order", str(tmp_path / "nope.json")]) == 2

    def test_malformed_file_exit_two(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text("{not json")
        assert main(["check-order", str(path)]) == 2


class TestSolve:
    def test_auto_matches_lp(self, pair_file, tmp_path, capsys):
        out_a = tmp_path / "auto.json"
        out_l = tmp_path / "lp.json"
        assert main(["solve", pair_file, "--out", str(out_a)]) == 0
        assert main(["solve", pair_file, "--method", "lp", "--out", str(out_l)]) == 0
        c_auto = json.loads(out_a.read_text())["cost"]
        c_lp = json.loads(out_l.read_text())["cost"]
        assert abs(c_auto - c_lp) <= 1e-8
        assert "method=sweep" in capsys.readouterr().out

    def test_overlap_keeps_diagonal(self, overlap_file, tmp_path):
        out = tmp_path / "c.json"
        assert main(["solve", overlap_file, "--out", str(out)]) == 0
        entries = json.loads(out.read_text())["entries"]
        assert any(x == y == 1.0 and w == 0.2 for x, y, w in entries)

    def test_bad_exponent_exit_two(self, pair_file):
        assert main(["solve", pair_file, "--p", "1.5"]) == 2

    def test_infeasible_exit_one(self, reversed_file):
        assert main(["solve", reversed_file]) == 1

    def test_forced_sweep_on_overlapping_support_exit_two(self, tmp_path):
        doc = {"mu": {"type": "discrete", "atoms": [[-0.5, 0.5], [0.5, 0.5]]},
               "nu": {"type": "discrete",
                      "atoms": [[-2.0, 0.4], [0.0, 0.2], [2.0, 0.4]]}}
        path = tmp_path / "notsep.json"
        path.write_text(json.dumps(doc))
        assert main(["solve", str(path), "--method", "sweep"]) == 2
        assert main(["solve", str(path), "--method", "lp"]) == 0

    def test_deterministic_outputs(self, pair_file, tmp_path):
        out1 = tmp_path / "c1.json"
        out2 = tmp_path / "c2.json"
        main(["solve", pair_file, "--out", str(out1)])
        main(["solve", pair_file, "--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_grid_marginals_both_sides(self, tmp_path, capsys):
        # grid mu inside (-1, 1), grid nu on the two tails
        doc = {"mu": {"type": "grid", "lo": -1.0, "hi": 1.0, "n": 4,
                      "values": [0.75, 0.25, 0.25, 0.75]},
               "nu": {"type": "grid", "lo": -3.0, "hi": 3.0, "n": 6,
                      "values": [0.25, 0.25, 0.0, 0.0, 0.25, 0.25]}}
        path = tmp_path / "grids.json"
        path.write_text(json.dumps(doc))
        assert main(["solve", str(path), "--p", "0.5"]) == 0
        out = capsys.readouterr().out
        assert "method=sweep" in out

    def test_maps_csv_written(self, pair_file, tmp_path):
        csv = tmp_path / "m.csv"
        main(["solve", pair_file, "--maps-csv", str(csv)])
        lines = csv.read_text().splitlines()
        assert lines[0] == "x,S,T,lambda_minus,lambda_plus"
        assert len(lines) == 3


class TestSolveRadial:
    def test_costs_agree(self, radial_file, tmp_path, capsys):
        out = tmp_path / "lift.json"
        assert main(["solve-radial", radial_file, "--n", "200",
                     "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["dim"] == 2
        assert abs(doc["cost"] - doc["cost_ddim"]) <= 1e-9

    def test_origin_atom_exit_two(self, tmp_path):
        doc = {"dim": 2,
               "mu": {"type": "radial-atoms", "atoms": [[0.0, 1.0]]},
               "nu": {"type": "radial-atoms", "atoms": [[2.0, 1.0]]}}
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        assert main(["solve-radial", str(path)]) == 2

    def test_samples_summary(self, radial_file, capsys):
        assert main(["solve-radial", radial_file, "--n", "100",
                     "--samples", "20000", "--seed", "5"]) == 0
        out = capsys.readouterr().out
        summary = json.loads(out.strip().splitlines()[-1])
        assert summary["samples"] == 20000
        assert summary["martingale_mean_max_se"] < 4.0

    def test_induced_csv(self, radial_file, tmp_path):
        csv = tmp_path / "induced.csv"
        main(["solve-radial", radial_file, "--n", "100",
              "--induced-csv", str(csv)])
        lines = csv.read_text().splitlines()
        assert lines[0] == "marginal,position,mass"
        assert any(line.startswith("mu,") for line in lines[1:])
        assert any(line.startswith("nu,") for line in lines[1:])


class TestVerify:
    def test_solver_output_clean(self, pair_file, tmp_path):
        out = tmp_path / "c.json"
        main(["solve", pair_file, "--out", str(out)])
        assert main(["verify", "--coupling", str(out),
                     "--marginals", pair_file]) == 0

    def test_corrupted_coupling_exit_one(self, pair_file, tmp_path, capsys):
        out = tmp_path / "c.json"
        main(["solve", pair_file, "--out", str(out)])
        doc = json.loads(out.read_text())
        doc["entries"][0][2] += 1e-3
        out.write_text(json.dumps(doc))
        capsys.readouterr()
        assert main(["verify", "--coupling", str(out),
                     "--marginals", pair_file]) == 1
        rep = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert rep["residuals"]["row"] > 1e-4

    def test_planted_configuration_exit_one(self, pair_file, tmp_path, capsys):
        doc = {"entries": [[0.0, -2.0, 0.25], [0.0, 2.0, 0.25],
                           [-1.0, 1.0, 0.5]], "cost": None, "maps": None}
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        pair = tmp_path / "pair2.json"
        pair.write_text(json.dumps({
            "mu": {"type": "discrete", "atoms": [[0.0, 0.5], [-1.0, 0.5]]},
            "nu": {"type": "discrete",
                   "atoms": [[-2.0, 0.25], [1.0, 0.5], [2.0, 0.25]]}}))
        assert main(["verify", "--coupling", str(bad),
                     "--marginals", str(pair)]) == 1
        rep = json.loads(capsys.readouterr().out)
        assert rep["forbidden"]


class TestDeformCheck:
    def test_half_exponent(self, tmp_path, capsys):
        out = tmp_path / "curve.csv"
        assert main(["deform-check", "--q", "0.5", "--seed", "7",
                     "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,C"
        assert len(lines) == 1 + 101

    def test_quadratic_constant(self):
        assert main(["deform-check", "--q", "2.0"]) == 0

    def test_cubic_fails(self):
        assert main(["deform-check", "--q", "3.0"]) == 1

    def test_nonpositive_exponent_exit_two(self):
        assert main(["deform-check", "--q", "-1.0"]) == 2

    def test_deterministic_csv(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["deform-check", "--q", "0.5", "--seed", "7", "--out", str(a)])
        main(["deform-check", "--q", "0.5", "--seed", "7", "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()


class TestOracle:
    def test_min_objective(self, pair_file, capsys):
        assert main(["oracle", pair_file, "--p", "1.0"]) == 0
        assert "objective=1.875" in capsys.readouterr().out

    def test_infeasible_exit_one(self, reversed_file):
        assert main(["oracle", reversed_file]) == 1

    def test_max_sense(self, pair_file, capsys):
        assert main(["oracle", pair_file, "--sense", "max"]) == 0
        out = capsys.readouterr().out
        assert float(out.split("=")[1]) >= 1.875 - 1e-12
