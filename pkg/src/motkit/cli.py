"""Command-line surface.

Commands: check-order, solve, solve-radial, verify, deform-check, oracle.
Exit codes: 0 ok / 1 mathematical negative / 2 input error / 3 numerical
failure. All commands are deterministic under fixed seed and inputs.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .errors import (InputError, MotkitError, NotInConvexOrderError,
                     SolverFailureError)
from . import lp as lp_mod
from .measures import (as_discrete, common_mass_split, convex_order_check,
                       load_marginal_pair)
from .mot1d import (Coupling, cost, detect_separation, read_coupling_json,
                    solve_sweep, write_coupling_json, write_maps_csv)
from .radial import load_radial_pair, sample_lifted, solve_radial
from .verify import (check_decreasing, curve_is_constant,
                     curve_is_strictly_decreasing, deformation_curve,
                     detect_forbidden, random_deformation_instance,
                     validate_coupling)

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _emit(doc: dict, path: str | None):
    text = json.dumps(doc, sort_keys=True)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _require_p(p: float):
    if not (0.0 < p <= 1.0):
        raise InputError(f"cost exponent p={p} outside (0, 1]")


def cmd_check_order(args) -> int:
    mu, nu = load_marginal_pair(args.input)
    report = convex_order_check(as_discrete(mu), as_discrete(nu), tol=args.tol)
    _emit(report.to_dict(), args.out)
    return EXIT_OK if report.in_order else EXIT_NEGATIVE


def cmd_solve(args) -> int:
    _require_p(args.p)
    mu, nu = load_marginal_pair(args.input)
    mu, nu = as_discrete(mu), as_discrete(nu)
    common, mu_bar, nu_bar = common_mass_split(mu, nu)
    report = convex_order_check(mu_bar, nu_bar, tol=args.tol)
    if not report.in_order:
        _emit(report.to_dict(), None)
        return EXIT_NEGATIVE

    diag = list(zip(common.positions, common.positions, common.masses))
    maps = None
    method = args.method
    if len(mu_bar) == 0:
        entries = diag
    else:
        interval = detect_separation(mu_bar, nu_bar)
        if method == "auto":
            method = "sweep" if interval is not None else "lp"
        if method == "sweep":
            if interval is None:
                raise InputError("marginals are not separated; use --method lp")
            pi, maps = solve_sweep(mu_bar, nu_bar, interval, tol=args.tol)
        else:
            sol = lp_mod.solve_lp(mu_bar, nu_bar, args.p)
            if sol.status == "infeasible":
                print("infeasible")
                return EXIT_NEGATIVE
            if sol.status != "optimal":
                raise SolverFailureError(f"LP failed: {sol.message}")
            pi = sol.coupling
        entries = diag + pi.entries()

    full = Coupling.from_entries(entries)
    total_cost = cost(full, args.p)
    if args.out:
        write_coupling_json(args.out, full, total_cost, maps)
    if args.maps_csv and maps is not None:
        write_maps_csv(args.maps_csv, maps)
    print(f"method={method} cost={total_cost!r}")
    return EXIT_OK


def cmd_solve_radial(args) -> int:
    _require_p(args.p)
    dim, mu, nu = load_radial_pair(args.input)
    lifted, c1 = solve_radial(mu, nu, args.p, n=args.n)
    cd = lifted.cost_ddim(args.p)
    if abs(cd - c1) > 1e-9 * max(1.0, abs(c1)):
        raise SolverFailureError(f"lifted cost {cd!r} disagrees with base {c1!r}")
    if args.out:
        write_coupling_json(args.out, lifted.base, c1, lifted.maps,
                            extra={"dim": dim, "cost_ddim": cd})
    if args.induced_csv:
        with open(args.induced_csv, "w") as fh:
            fh.write("marginal,position,mass\n")
            src = lifted.base.source_marginal()
            tgt = lifted.base.target_marginal()
            for name, m in (("mu", src), ("nu", tgt)):
                for x, w in zip(m.positions, m.masses):
                    fh.write(f"{name},{float(x)!r},{float(w)!r}\n")
    print(f"cost_1d={c1!r} cost_ddim={cd!r}")
    if args.samples:
        x, y = sample_lifted(lifted, args.samples, args.seed)
        delta = y - x
        se = delta.std(axis=0, ddof=1) / np.sqrt(args.samples)
        mean_in_se = np.abs(delta.mean(axis=0)) / np.where(se > 0, se, 1.0)
        radii = np.linalg.norm(x, axis=1)
        base = lifted.base
        edges = np.linspace(0.0, float(np.abs(base.xs).max()) * 1.0001, 9)
        expect, _ = np.histogram(np.abs(base.xs), bins=edges, weights=base.masses)
        expect = expect / base.total_mass()
        got, _ = np.histogram(radii, bins=edges)
        got = got / args.samples
        summary = {
            "samples": args.samples,
            "martingale_mean_max_se": float(mean_in_se.max()),
            "annulus_max_gap": float(np.abs(got - expect).max()),
        }
        print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_verify(args) -> int:
    pi, _, maps = read_coupling_json(args.coupling)
    mu, nu = load_marginal_pair(args.marginals)
    mu, nu = as_discrete(mu), as_discrete(nu)
    rep = validate_coupling(pi, mu, nu, tol=args.tol)
    forbidden = detect_forbidden(pi)
    decreasing = None if maps is None else check_decreasing(maps)
    doc = {
        "forbidden": [c.as_tuple() for c in forbidden],
        "residuals": rep.to_dict(),
        "decreasing": decreasing,
    }
    _emit(doc, args.out)
    clean = rep.ok(args.tol) and not forbidden and decreasing is not False
    return EXIT_OK if clean else EXIT_NEGATIVE


def cmd_deform_check(args) -> int:
    if args.q <= 0:
        raise InputError("exponent q must be positive")
    if args.grid < 2:
        raise InputError("grid must have at least 2 points")
    rng = np.random.default_rng(args.seed)
    all_ok = True
    first_curve = None
    for _ in range(args.instances):
        inst = random_deformation_instance(rng, args.q)
        curve = deformation_curve(inst, args.grid)
        if first_curve is None:
            first_curve = curve
        ok = curve_is_strictly_decreasing(curve) or curve_is_constant(curve)
        all_ok = all_ok and ok
    if args.out and first_curve is not None:
        with open(args.out, "w") as fh:
            fh.write("t,C\n")
            for t, c in first_curve:
                fh.write(f"{t!r},{c!r}\n")
    print(f"q={args.q!r} instances={args.instances} monotone={all_ok}")
    return EXIT_OK if all_ok else EXIT_NEGATIVE


def cmd_oracle(args) -> int:
    _require_p(args.p)
    mu, nu = load_marginal_pair(args.input)
    sol = lp_mod.solve_lp(as_discrete(mu), as_discrete(nu), args.p, sense=args.sense)
    if sol.status == "infeasible":
        print("infeasible")
        return EXIT_NEGATIVE
    if sol.status != "optimal":
        raise SolverFailureError(f"LP failed: {sol.message}")
    if args.out:
        write_coupling_json(args.out, sol.coupling, sol.objective)
    print(f"objective={sol.objective!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="motkit",
                                 description="martingale transport toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, with_p=True):
        p.add_argument("--tol", type=float, default=1e-9)
        p.add_argument("--out", default=None)
        if with_p:
            p.add_argument("--p", type=float, default=1.0)

    p = sub.add_parser("check-order", help="convex-order check of a marginal pair")
    p.add_argument("input")
    common(p, with_p=False)
    p.set_defaults(func=cmd_check_order)

    p = sub.add_parser("solve", help="solve a 1-D martingale transport instance")
    p.add_argument("input")
    p.add_argument("--method", choices=("auto", "sweep", "lp"), default="auto")
    p.add_argument("--maps-csv", default=None)
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("solve-radial", help="solve a radially symmetric instance")
    p.add_argument("input")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--samples", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--induced-csv", default=None)
    common(p)
    p.set_defaults(func=cmd_solve_radial)

    p = sub.add_parser("verify", help="verify a coupling against marginals")
    p.add_argument("--coupling", required=True)
    p.add_argument("--marginals", required=True)
    common(p, with_p=False)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("deform-check", help="circular deformation monotonicity check")
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_deform_check)

    p = sub.add_parser("oracle", help="direct LP solve (min or max)")
    p.add_argument("input")
    p.add_argument("--sense", choices=("min", "max"), default="min")
    common(p)
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NotInConvexOrderError as exc:
        print(f"not in convex order: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except MotkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
