import json

import numpy as np
import pytest

from motkit import (CostSpec, Coupling, DiscreteMeasure, InputError,
                    NotInConvexOrderError, SeparationError,
                    SeparationInterval, cost, coupling_matrix,
                    detect_separation, is_symmetric, reflection_residual,
                    solve_lp, solve_sweep, symmetric_solve, validate_coupling)
from motkit.mot1d import (read_coupling_json, write_coupling_json,
                          write_maps_csv)
from instances import separated_instance, six_atom_symmetric_nu, triangular_grid
from motkit import quantize

I_UNIT = SeparationInterval(-1.0, 1.0)
NU_SYM = DiscreteMeasure([-2.0, 2.0], [0.5, 0.5])


def two_atom_row_oracle(mu, nu):
    """Independent oracle when nu has one atom per side: each row's split is
    the unique solution of a 2x2 mass/barycenter linear system."""
    y1, y2 = nu.positions
    rows = {}
    for x, m in zip(mu.positions, mu.masses):
        A = np.array([[1.0, 1.0], [y1, y2]])
        w = np.linalg.solve(A, np.array([m, m * x]))
        rows[float(x)] = {float(y1): w[0], float(y2): w[1]}
    return rows


class TestSweepExamples:
    def test_point_mass_forced_split(self):
        mu = DiscreteMeasure([0.0], [1.0])
        pi, maps = solve_sweep(mu, NU_SYM, I_UNIT)
        assert sorted(pi.entries()) == [(0.0, -2.0, 0.5), (0.0, 2.0, 0.5)]
        assert cost(pi, 1.0) == 2.0
        assert cost(pi, 0.5) == pytest.approx(np.sqrt(2.0), abs=1e-15)

    def test_two_atom_rows_match_linear_system(self):
        mu = DiscreteMeasure([-0.5, 0.5], [0.5, 0.5])
        pi, _ = solve_sweep(mu, NU_SYM, I_UNIT)
        oracle = two_atom_row_oracle(mu, NU_SYM)
        for x, ys, ws in pi.rows():
            for y, w in zip(ys, ws):
                assert w == pytest.approx(oracle[x][float(y)], abs=1e-12)
        assert oracle[-0.5][-2.0] == pytest.approx(0.3125)
        assert oracle[-0.5][2.0] == pytest.approx(0.1875)
        assert cost(pi, 1.0) == pytest.approx(1.875, abs=1e-12)

    def test_random_two_atom_nu_matches_oracle(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            k = int(rng.integers(1, 12))
            xs = rng.uniform(-0.9, 0.9, k)
            ws = rng.uniform(0.1, 1.0, k)
            mu = DiscreteMeasure(xs, ws / ws.sum())
            ylo, yhi = float(rng.uniform(-3, -1.1)), float(rng.uniform(1.1, 3))
            oracle = two_atom_row_oracle(mu, DiscreteMeasure([ylo, yhi], [1, 1]))
            wlo = sum(r[ylo] for r in oracle.values())
            whi = sum(r[yhi] for r in oracle.values())
            nu = DiscreteMeasure([ylo, yhi], [wlo, whi])
            pi, _ = solve_sweep(mu, nu, I_UNIT)
            for x, ys, ws_ in pi.rows():
                for y, w in zip(ys, ws_):
                    assert w == pytest.approx(oracle[x][float(y)], abs=1e-11)


class TestSweepAgainstLp:
    def test_random_separated_instances(self):
        rng = np.random.default_rng(29)
        for _ in range(30):
            mu, nu = separated_instance(rng)
            interval = detect_separation(mu, nu)
            assert interval is not None
            pi, _ = solve_sweep(mu, nu, interval)
            mat = coupling_matrix(pi, mu, nu)
            for p in (0.5, 1.0):
                sol = solve_lp(mu, nu, p)
                assert sol.status == "optimal"
                assert abs(cost(pi, p) - sol.objective) <= 1e-8
                assert np.abs(mat - sol.matrix).max() <= 1e-7

    def test_invariants_on_solver_output(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            mu, nu = separated_instance(rng)
            pi, _ = solve_sweep(mu, nu, detect_separation(mu, nu))
            rep = validate_coupling(pi, mu, nu)
            assert rep.max_residual() <= 1e-9

    def test_row_supports_decrease(self):
        # stronger than the map check: whole per-side supports of later rows
        # sit at or below the earlier rows' supports
        rng = np.random.default_rng(101)
        for _ in range(10):
            mu, nu = separated_instance(rng)
            interval = detect_separation(mu, nu)
            pi, _ = solve_sweep(mu, nu, interval)
            rows = pi.rows()
            for (x1, ys1, ws1), (x2, ys2, ws2) in zip(rows, rows[1:]):
                assert x1 < x2
                for side in ("lower", "upper"):
                    if side == "lower":
                        s1 = ys1[(ys1 <= interval.a) & (ws1 > 1e-12)]
                        s2 = ys2[(ys2 <= interval.a) & (ws2 > 1e-12)]
                    else:
                        s1 = ys1[(ys1 >= interval.b) & (ws1 > 1e-12)]
                        s2 = ys2[(ys2 >= interval.b) & (ws2 > 1e-12)]
                    if len(s1) and len(s2):
                        assert s2.max() <= s1.min() + 1e-12

    def test_contiguity_per_side(self):
        # each row consumes a contiguous run of the nu atom list per side
        rng = np.random.default_rng(37)
        for _ in range(10):
            mu, nu = separated_instance(rng)
            interval = detect_separation(mu, nu)
            pi, _ = solve_sweep(mu, nu, interval)
            lower = np.sort(nu.positions[nu.positions <= interval.a])
            upper = np.sort(nu.positions[nu.positions >= interval.b])
            for _, ys, ws in pi.rows():
                real = ys[ws > 1e-9 * ws.sum()]
                for side in (lower, upper):
                    hit = np.nonzero(np.isin(side, real))[0]
                    if len(hit) > 1:
                        assert np.all(np.diff(hit) == 1)


class TestTwoPointSupport:
    def test_quantized_rows_thin_out(self):
        nu = six_atom_symmetric_nu()
        fractions = {}
        for n in (250, 1000):
            mu = quantize(triangular_grid(n))
            interval = detect_separation(mu, nu)
            pi, _ = solve_sweep(mu, nu, interval)
            from motkit import count_targets_per_side
            counts = count_targets_per_side(pi, interval.a, interval.b)
            assert all(lo <= 2 and hi <= 2 for lo, hi in counts)
            multi = sum(1 for lo, hi in counts if lo > 1 or hi > 1)
            fractions[n] = multi / len(counts)
        assert fractions[1000] < fractions[250]


class TestSymmetricSolve:
    def test_symmetric_two_atoms(self):
        mu = DiscreteMeasure([-0.5, 0.5], [0.5, 0.5])
        pi = symmetric_solve(mu, NU_SYM, I_UNIT)
        assert reflection_residual(pi) <= 1e-10

    def test_quantized_triangular_symmetric(self):
        mu = quantize(triangular_grid(80))
        pi = symmetric_solve(mu, NU_SYM, I_UNIT)
        assert reflection_residual(pi) <= 1e-10

    def test_shifted_rejected(self):
        mu = DiscreteMeasure([-0.4, 0.6], [0.5, 0.5])
        assert not is_symmetric(mu)
        with pytest.raises(InputError):
            symmetric_solve(mu, NU_SYM, I_UNIT)


class TestPreconditions:
    def test_separation_violated_mu(self):
        mu = DiscreteMeasure([0.0, 1.5], [0.5, 0.5])
        with pytest.raises(SeparationError):
            solve_sweep(mu, NU_SYM, I_UNIT)

    def test_separation_violated_nu(self):
        nu = DiscreteMeasure([-2.0, 0.5, 2.0], [0.4, 0.2, 0.4])
        with pytest.raises(SeparationError):
            solve_sweep(DiscreteMeasure([0.0], [1.0]), nu, I_UNIT)

    def test_not_in_convex_order(self):
        mu = DiscreteMeasure([-0.5, 0.5], [0.5, 0.5])
        nu = DiscreteMeasure([-2.0, 2.0], [0.7, 0.3])  # mean off
        with pytest.raises(NotInConvexOrderError):
            solve_sweep(mu, nu, I_UNIT)

    def test_cost_spec_ranges(self):
        CostSpec(1.0)
        CostSpec(1.5, extended=True)
        with pytest.raises(InputError):
            CostSpec(1.5)
        with pytest.raises(InputError):
            CostSpec(2.0, extended=True)
        with pytest.raises(InputError):
            CostSpec(0.0)


class TestSeparationDetection:
    def test_detects_gap(self):
        mu = DiscreteMeasure([-0.5, 0.5], [0.5, 0.5])
        interval = detect_separation(mu, NU_SYM)
        assert interval is not None
        assert interval.a <= -0.5 and interval.b >= 0.5

    def test_overlap_returns_none(self):
        mu = DiscreteMeasure([-0.5, 0.5], [0.5, 0.5])
        nu = DiscreteMeasure([-2.0, 0.0, 2.0], [0.4, 0.2, 0.4])
        assert detect_separation(mu, nu) is None


class TestSerialization:
    def test_coupling_roundtrip(self, tmp_path):
        mu = DiscreteMeasure([-0.5, 0.5], [0.5, 0.5])
        pi, maps = solve_sweep(mu, NU_SYM, I_UNIT)
        path = tmp_path / "c.json"
        write_coupling_json(path, pi, cost(pi, 1.0), maps)
        pi2, c2, maps2 = read_coupling_json(path)
        assert c2 == pytest.approx(1.875)
        assert sorted(pi2.entries()) == sorted(pi.entries())
        assert np.allclose(maps2.lower, maps.lower)

    def test_maps_csv_header(self, tmp_path):
        mu = DiscreteMeasure([-0.5, 0.5], [0.5, 0.5])
        _, maps = solve_sweep(mu, NU_SYM, I_UNIT)
        path = tmp_path / "m.csv"
        write_maps_csv(path, maps)
        lines = path.read_text().splitlines()
        assert lines[0] == "x,S,T,lambda_minus,lambda_plus"
        assert len(lines) == 1 + len(maps)

    def test_malformed_coupling_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"rows": []}))
        with pytest.raises(InputError):
            read_coupling_json(path)
