"""Radially symmetric marginals: reduction to the line, lifting, symmetry.

A radially symmetric measure on R^d with radial density f induces, along any
one-dimensional subspace through the origin, the even signed-radius density

    f0(r) = (S/2) f(|r|) |r|^(d-1),   S = surface area of the unit sphere,

normalized so the induced measure carries the full d-dimensional mass. The
optimal martingale coupling between two such measures decomposes along rays:
solving the induced 1-D problem and attaching a uniformly random direction
reproduces the d-dimensional optimizer, whose disintegration at x lives on
the line {a x}. The d-dimensional cost equals the 1-D cost along each ray,
because |r u - s u| = |r - s| for unit u.

Spherical-shell marginals (uniform measure on |x| = r) are the atomic
counterpart: each shell of mass m induces the symmetric atom pair
(m/2) at +-r. Shells at r = 0 are rejected; the reduction needs no mass at
the origin.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NotInConvexOrderError, SolverFailureError
from .measures import (DiscreteMeasure, GridDensity, common_mass_split,
                       convex_order_check, quantize)
from .mot1d import (Coupling, TransportMaps, cost, detect_separation,
                    reflection_residual, solve_sweep)
from . import lp as lp_mod


def unit_sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d."""
    if d < 1:
        raise InputError("dimension must be >= 1")
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@dataclass(frozen=True)
class RadialProfile:
    """Piecewise-constant radial density on cells of a grid 0 = r0 < ... < rK."""

    dim: int
    radii: np.ndarray   # K+1 edges, starting at 0
    values: np.ndarray  # K cell densities

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        f = np.asarray(self.values, dtype=float)
        if self.dim < 2:
            raise InputError("radial profiles require dim >= 2")
        if len(r) < 2 or r[0] != 0.0 or np.any(np.diff(r) <= 0):
            raise InputError("radius grid must be 0 = r0 < ... < rK")
        if len(f) != len(r) - 1 or np.any(f < 0) or np.any(~np.isfinite(f)):
            raise InputError("need one finite nonnegative value per cell")
        r.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", f)
        if self.total_mass() <= 0:
            raise InputError("profile has zero total mass")

    def total_mass(self) -> float:
        s = unit_sphere_area(self.dim)
        shell = (self.radii[1:] ** self.dim - self.radii[:-1] ** self.dim) / self.dim
        return float(s * np.dot(self.values, shell))

    def radial_cdf(self, s) -> np.ndarray:
        """Mass of the ball of radius s (vectorized, exact per cell)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        lo = self.radii[:-1]
        hi = self.radii[1:]
        reach = np.clip(s[:, None], lo[None, :], hi[None, :])
        shells = (reach ** self.dim - lo[None, :] ** self.dim) / self.dim
        return unit_sphere_area(self.dim) * shells @ self.values


@dataclass(frozen=True)
class RadialAtoms:
    """Uniform spherical shells |x| = r with given total masses."""

    dim: int
    radii: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        w = np.asarray(self.masses, dtype=float)
        if self.dim < 2:
            raise InputError("radial atoms require dim >= 2")
        if len(r) != len(w) or len(r) == 0:
            raise InputError("radii and masses must be nonempty and equal length")
        if np.any(r <= 0):
            raise InputError("shell radii must be > 0 (no mass at the origin)")
        if np.any(w <= 0):
            raise InputError("shell masses must be > 0")
        order = np.argsort(r)
        r, w = r[order], w[order]
        r.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "masses", w)

    def total_mass(self) -> float:
        return float(self.masses.sum())


def induce_1d(rp: RadialProfile, n: int | None = None) -> GridDensity:
    """Signed-radius density induced on [-rK, rK], averaged per grid cell.

    Cell masses are exact integrals of (S/2) f(|r|) |r|^(d-1), so the total
    equals the d-dimensional mass to rounding. Default n keeps two target
    cells per radial cell when the input grid is uniform.
    """
    R = float(rp.radii[-1])
    if n is None:
        widths = np.diff(rp.radii)
        if np.max(widths) - np.min(widths) > 1e-12 * R:
            raise InputError("non-uniform radial grid: pass an explicit n")
        n = 2 * (len(rp.radii) - 1)
    if n < 2:
        raise InputError("need at least 2 cells")
    # integer-offset edges are exactly mirror-symmetric, unlike linspace
    edges = (2.0 * np.arange(n + 1) - n) * (R / n)
    lo, hi = edges[:-1], edges[1:]
    # mass on [lo, hi] of the even density, via the one-sided radial cdf
    half = 0.5 * (rp.radial_cdf(np.abs(hi)) - rp.radial_cdf(np.abs(lo)))
    straddle = (lo < 0) & (hi > 0)
    masses = np.abs(half)
    if straddle.any():
        masses[straddle] = 0.5 * (rp.radial_cdf(np.abs(hi[straddle]))
                                  + rp.radial_cdf(np.abs(lo[straddle])))
    values = masses / (edges[1] - edges[0])
    return GridDensity(-R, R, n, values)


def induced_atoms(ra: RadialAtoms) -> DiscreteMeasure:
    """Signed-radius atoms of shell marginals: (m/2) at -r and +r."""
    pos = np.concatenate([-ra.radii[::-1], ra.radii])
    w = np.concatenate([ra.masses[::-1] / 2, ra.masses / 2])
    return DiscreteMeasure(pos, w, dim=1)


def _to_induced(marginal, n: int) -> DiscreteMeasure:
    if isinstance(marginal, RadialProfile):
        return quantize(induce_1d(marginal, n))
    if isinstance(marginal, RadialAtoms):
        return induced_atoms(marginal)
    raise InputError("radial marginal must be RadialProfile or RadialAtoms")


def symmetrize_coupling(pi: Coupling) -> Coupling:
    """Average a 1-D coupling with its reflection through the origin."""
    agg = {}
    for sign in (1.0, -1.0):
        for x, y, w in zip(pi.xs, pi.ys, pi.masses):
            key = (float(sign * x), float(sign * y))
            agg[key] = agg.get(key, 0.0) + 0.5 * w
    entries = [(x, y, w) for (x, y), w in sorted(agg.items())]
    return Coupling.from_entries(entries)


@dataclass(frozen=True)
class LiftedCoupling:
    """1-D signed-radius coupling plus the ambient dimension it lifts to.

    A base entry (r, s, m) stands for mass m transported from r*u to s*u
    with u uniform on the unit sphere; positive target sign means the same
    ray as the source.
    """

    base: Coupling
    dim: int
    maps: TransportMaps | None = None

    def cost_1d(self, p: float) -> float:
        return cost(self.base, p)

    def cost_ddim(self, p: float) -> float:
        """Cost evaluated through d-dimensional points on a fixed ray."""
        if len(self.base) == 0:
            return 0.0
        e = np.zeros(self.dim)
        e[0] = 1.0
        x = self.base.xs[:, None] * e[None, :]
        y = self.base.ys[:, None] * e[None, :]
        dist = np.linalg.norm(x - y, axis=1)
        return float(np.dot(self.base.masses, dist ** p))


def solve_radial(mu, nu, p: float, n: int = 400):
    """Reduce, solve on the line, and lift. Returns (LiftedCoupling, cost).

    Both marginals must share the ambient dimension; density marginals are
    quantized at n cells. Common mass between the induced marginals stays on
    the diagonal; the disjoint remainder is solved by the frontier sweep when
    separated, otherwise by the LP oracle (then symmetrized). Raises
    NotInConvexOrderError with refinement advice when quantization broke the
    convex order.
    """
    if not (0.0 < p <= 1.0):
        raise InputError("cost exponent must lie in (0, 1]")
    if n < 2:
        raise InputError("need n >= 2 quantization cells")
    dim = getattr(mu, "dim", None)
    if dim is None or getattr(nu, "dim", None) != dim:
        raise InputError("marginals must share the ambient dimension")

    mu1 = _to_induced(mu, n)
    nu1 = _to_induced(nu, n)
    report = convex_order_check(mu1, nu1, tol=1e-8)
    if not report.in_order:
        raise NotInConvexOrderError(
            "induced marginals fail the convex-order check (worst gap "
            f"{report.worst_gap:.3e}); refine the quantization (n={n}) or "
            "check the input profiles", report=report)

    common, mu_bar, nu_bar = common_mass_split(mu1, nu1)
    diag = [(float(x), float(x), float(w))
            for x, w in zip(common.positions, common.masses)]

    maps = None
    if len(mu_bar) == 0:
        base = Coupling.from_entries(diag)
    else:
        interval = detect_separation(mu_bar, nu_bar)
        if interval is not None:
            pi, maps = solve_sweep(mu_bar, nu_bar, interval)
            resid = reflection_residual(pi)
            if resid > 1e-9:
                raise SolverFailureError(
                    f"symmetric radial instance gave asymmetric coupling ({resid:.3e})",
                    residual=resid)
        else:
            sol = lp_mod.solve_lp(mu_bar, nu_bar, p)
            if sol.status != "optimal":
                raise SolverFailureError(
                    f"LP path failed on induced marginals: {sol.status} {sol.message}")
            pi = symmetrize_coupling(sol.coupling)
        entries = diag + list(zip(pi.xs, pi.ys, pi.masses))
        base = Coupling.from_entries(entries)

    lifted = LiftedCoupling(base, dim, maps)
    return lifted, lifted.cost_1d(p)


def sample_lifted(lc: LiftedCoupling, count: int, seed: int):
    """Draw (X, Y) pairs from the lifted coupling; deterministic per seed.

    Returns arrays of shape (count, dim). Directions are normalized Gaussian
    vectors, i.e. uniform on the sphere.
    """
    if count < 1:
        raise InputError("count must be >= 1")
    base = lc.base
    if len(base) == 0:
        raise InputError("empty coupling")
    rng = np.random.default_rng(seed)
    weights = base.masses / base.masses.sum()
    idx = rng.choice(len(base), size=count, p=weights)
    u = rng.normal(size=(count, lc.dim))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    x = base.xs[idx, None] * u
    y = base.ys[idx, None] * u
    return x, y


def rotation_group_2d(n: int = 360):
    """n evenly spaced planar rotation matrices, the finite stand-in for
    averaging over the full rotation group."""
    if n < 1:
        raise InputError("need at least one rotation")
    out = []
    for k in range(n):
        t = 2.0 * math.pi * k / n
        out.append(np.array([[math.cos(t), -math.sin(t)],
                             [math.sin(t), math.cos(t)]]))
    return out


def rotate_pushforward(pi: Coupling, M: np.ndarray) -> Coupling:
    """Apply an orthogonal map to both coordinates of a coupling."""
    M = np.asarray(M, dtype=float)
    if pi.dim < 2:
        raise InputError("rotation needs dim >= 2 couplings")
    if M.shape != (pi.dim, pi.dim):
        raise InputError("matrix shape must match the coupling dimension")
    if np.abs(M.T @ M - np.eye(pi.dim)).max() > 1e-12:
        raise InputError("matrix is not orthogonal within 1e-12")
    return Coupling(pi.xs @ M.T, pi.ys @ M.T, pi.masses, pi.dim)


def _radii_of(m: DiscreteMeasure) -> np.ndarray:
    if m.dim == 1:
        return np.abs(m.positions)
    return np.linalg.norm(m.positions, axis=1)


def r_equivalent(phi: DiscreteMeasure, psi: DiscreteMeasure, edges,
                 tol: float = 1e-9) -> bool:
    """Same mass on every annulus (per `edges`) and, atom by atom, the same
    radius multiset with matching masses."""
    if phi.dim != psi.dim:
        raise InputError("measures must share dim")
    edges = np.asarray(edges, dtype=float)
    r1, r2 = _radii_of(phi), _radii_of(psi)
    h1, _ = np.histogram(r1, bins=edges, weights=phi.masses)
    h2, _ = np.histogram(r2, bins=edges, weights=psi.masses)
    if np.abs(h1 - h2).max(initial=0.0) > tol:
        return False
    # exact multiset comparison: cluster all radii, compare per-cluster mass
    allr = np.sort(np.concatenate([r1, r2]))
    if len(allr) == 0:
        return True
    reps = [allr[0]]
    for r in allr[1:]:
        if r - reps[-1] > tol:
            reps.append(r)
    reps = np.asarray(reps)

    def cluster_masses(radii, w):
        out = np.zeros(len(reps))
        idx = np.searchsorted(reps, radii)
        for i, (j, r) in enumerate(zip(idx, radii)):
            cands = [k for k in (j - 1, j) if 0 <= k < len(reps)]
            k = min(cands, key=lambda k: abs(reps[k] - r))
            out[k] += w[i]
        return out

    gap = np.abs(cluster_masses(r1, phi.masses) - cluster_masses(r2, psi.masses))
    return bool(gap.max(initial=0.0) <= tol)


def l_symmetrize_2d(phi: DiscreteMeasure, direction) -> DiscreteMeasure:
    """Average a planar measure with its reflection across the line spanned
    by `direction`; the result is symmetric about that line and costs the
    same to any point on it."""
    if phi.dim != 2:
        raise InputError("l_symmetrize_2d requires dim=2")
    u = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(u)
    if norm == 0:
        raise InputError("line direction must be nonzero")
    u = u / norm
    refl = 2.0 * np.outer(u, u) - np.eye(2)
    pos = np.vstack([phi.positions, phi.positions @ refl.T])
    w = np.concatenate([phi.masses / 2, phi.masses / 2])
    return DiscreteMeasure(pos, w, dim=2)


# ---------------------------------------------------------------------------
# Radial spec files:
# {"dim": d, "mu": {"type": "radial-grid", "r": [...], "f": [...]}, "nu": ...}
# with {"type": "radial-atoms", "atoms": [[r, mass], ...]} for shells.
# ---------------------------------------------------------------------------

def _radial_from_dict(d: dict, dim: int):
    try:
        kind = d["type"]
        if kind == "radial-grid":
            return RadialProfile(dim, d["r"], d["f"])
        if kind == "radial-atoms":
            atoms = d["atoms"]
            return RadialAtoms(dim, [a[0] for a in atoms], [a[1] for a in atoms])
    except (KeyError, TypeError, IndexError) as exc:
        raise InputError(f"malformed radial marginal: {exc}") from exc
    raise InputError(f"unknown radial marginal type {kind!r}")


def load_radial_pair(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
        dim = int(doc["dim"])
        return dim, _radial_from_dict(doc["mu"], dim), _radial_from_dict(doc["nu"], dim)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"cannot read radial spec {path}: {exc}") from exc
