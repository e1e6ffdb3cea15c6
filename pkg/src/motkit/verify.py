"""Structural verifiers for martingale couplings.

Three kinds of certificates:

* forbidden-configuration search: in an optimal 1-D coupling no source atom x
  may split to targets y- < y+ while another source x' couples to a target y'
  strictly between them with x' placed so the three-point swap

      t d(x,y-) + (1-t) d(x,y+) + d(x',y')
      ->  t d(x',y-) + (1-t) d(x',y+) + d(x,y')     (t y- + (1-t) y+ = y')

  strictly lowers cost. For concave |.|^p, 0 < p <= 1, that happens exactly
  in the two patterns  y- < x' < x <= y'  and  y' <= x < x' < y+.

* monotone frontier maps: the per-row deepest targets of a sweep solution
  must be nonincreasing in the source position, with repeats allowed only
  while the same partially consumed target atom is shared.

* circular deformation: sliding a symmetric mass pair along a circle toward
  the vertical axis strictly lowers the transport cost from an off-center
  point whenever h'(s)/s is strictly decreasing (h(s) = s^q, 0 < q < 2);
  at q = 2 the cost curve is exactly flat.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .measures import POSITION_TOL, DiscreteMeasure
from .mot1d import Coupling, TransportMaps

DETECT_MASS_TOL = 1e-10


@dataclass(frozen=True)
class ForbiddenConfig:
    """A three-point configuration whose swap strictly improves the cost."""

    x: float
    y_minus: float
    y_plus: float
    x_prime: float
    y_prime: float
    pattern: str  # "A": y- < x' < x <= y'   "B": y' <= x < x' < y+

    def as_tuple(self):
        return (self.x, self.y_minus, self.y_plus, self.x_prime,
                self.y_prime, self.pattern)


def detect_forbidden(pi: Coupling, tol: float = DETECT_MASS_TOL):
    """Exhaustively search the support of a 1-D coupling for forbidden
    three-point configurations. Entries with mass <= tol are ignored.

    For every source atom x with a target pair y- < y+ the whole support is
    scanned for entries (x', y') with y- < y' < y+ in pattern A
    (y- < x' < x <= y') or pattern B (y' <= x < x' < y+); the scan is
    vectorized over entries, keeping the search exhaustive at desk scale.
    """
    if pi.dim != 1:
        raise InputError("detector supports dim=1 couplings")
    keep = pi.masses > tol
    ex = pi.xs[keep]
    ey = pi.ys[keep]
    found = []
    for x, ys, ws in pi.rows():
        ys = np.sort(ys[ws > tol])
        if len(ys) < 2:
            continue
        for i in range(len(ys)):
            for k in range(i + 1, len(ys)):
                y_m, y_p = float(ys[i]), float(ys[k])
                between = (ey > y_m) & (ey < y_p)
                mask_a = between & (ex > y_m) & (ex < x) & (ey >= x)
                mask_b = between & (ey <= x) & (ex > x) & (ex < y_p)
                for idx in np.nonzero(mask_a)[0]:
                    found.append(ForbiddenConfig(x, y_m, y_p,
                                                 float(ex[idx]), float(ey[idx]), "A"))
                for idx in np.nonzero(mask_b)[0]:
                    found.append(ForbiddenConfig(x, y_m, y_p,
                                                 float(ex[idx]), float(ey[idx]), "B"))
    return found


def swap_gain(x: float, y_minus: float, y_plus: float, x_prime: float,
              y_prime: float, p: float) -> float:
    """Cost saved by the three-point swap; positive iff the configuration
    is forbidden. Equals G(x) - G(x') for
    G(z) = t|z-y-|^p + (1-t)|z-y+|^p - |z-y'|^p with t y- + (1-t) y+ = y'."""
    if not (y_minus < y_prime < y_plus):
        raise InputError("need y_minus < y_prime < y_plus")
    if not (0.0 < p <= 1.0):
        raise InputError("cost exponent must lie in (0, 1]")
    t = (y_plus - y_prime) / (y_plus - y_minus)
    if not (0.0 < t < 1.0):
        raise InputError(f"degenerate barycenter weight t={t}")

    def G(z):
        return (t * abs(z - y_minus) ** p + (1 - t) * abs(z - y_plus) ** p
                - abs(z - y_prime) ** p)

    return G(x) - G(x_prime)


def check_decreasing(maps: TransportMaps, tol: float = 1e-12) -> bool:
    """True iff both frontier maps are nonincreasing along the rows, with
    equal values allowed only across a shared, partially consumed atom."""
    for vals, fracs in ((maps.lower, maps.lower_frac),
                        (maps.upper, maps.upper_frac)):
        for i in range(len(vals) - 1):
            if vals[i + 1] > vals[i] + tol:
                return False
            if abs(vals[i + 1] - vals[i]) <= tol:
                # same atom: the earlier row must have left mass in it and
                # consumption can only grow
                if fracs[i] >= 1.0 - tol:
                    return False
                if fracs[i + 1] < fracs[i] - tol:
                    return False
    return True


@dataclass(frozen=True)
class DeformationInstance:
    """Geometry for the circular deformation check.

    Mass starts as a symmetric pair (+-a, z) on the circle of radius r and
    slides along it toward the vertical axis; the transport cost is measured
    from the off-axis point (0, b). The cost profile is h(s) = s^q.
    """

    b: float
    r: float
    z: float
    q: float
    a: float | None = None  # derived from r, z when omitted

    def __post_init__(self):
        if self.r <= 0 or abs(self.z) >= self.r:
            raise InputError("need |z| < r with r > 0")
        if self.b == 0:
            raise InputError("barycenter height b must be nonzero")
        if self.q <= 0:
            raise InputError("cost exponent q must be positive")
        a = math.sqrt(self.r ** 2 - self.z ** 2)
        if self.a is not None and abs(self.a - a) > 1e-9:
            raise InputError("a is inconsistent with r, z")
        object.__setattr__(self, "a", a)

    def north_south(self, t):
        """Heights of the north/south point pair at deformation time t."""
        zn = self.z + t * (self.r - self.z)
        zs = self.z - t * (self.r + self.z)
        return zn, zs


def deformation_curve(inst: DeformationInstance, t_grid: int = 101):
    """Transport cost C(t) of the deforming four-point measure on a uniform
    t grid over [0, 1]. Distances use the circle identity
    ||point(t) - (0,b)||^2 = r^2 + b^2 - 2 b height(t)."""
    if t_grid < 2:
        raise InputError("need at least 2 grid points")
    r, b, z, q = inst.r, inst.b, inst.z, inst.q
    ts = np.linspace(0.0, 1.0, t_grid)
    zn, zs = inst.north_south(ts)
    dn = np.sqrt(r * r + b * b - 2 * b * zn)
    ds = np.sqrt(r * r + b * b - 2 * b * zs)
    w_n = (r + z) / (2 * r)
    w_s = (r - z) / (2 * r)
    C = w_n * dn ** q + w_s * ds ** q
    return [(float(t), float(c)) for t, c in zip(ts, C)]


def random_deformation_instance(rng: np.random.Generator, q: float) -> DeformationInstance:
    """Draw a well-conditioned random geometry for the deformation check."""
    while True:
        r = rng.uniform(0.2, 2.0)
        z = rng.uniform(-0.9, 0.9) * r
        b = rng.uniform(0.1, 2.0) * rng.choice([-1.0, 1.0])
        if abs(abs(b) - r) > 0.05:
            return DeformationInstance(b=float(b), r=float(r), z=float(z), q=q)


def curve_is_strictly_decreasing(curve, tol: float = 0.0) -> bool:
    vals = np.asarray([c for _, c in curve])
    return bool(np.all(np.diff(vals) < -tol))


def curve_is_constant(curve, tol: float = 1e-12) -> bool:
    vals = np.asarray([c for _, c in curve])
    return bool(vals.max() - vals.min() <= tol)


def count_targets_per_side(pi: Coupling, a: float, b: float,
                           rel_tol: float = 1e-9):
    """Per row of a separated coupling, how many nu atoms it touches on each
    tail. Entries below rel_tol of the row mass are ignored. Returns a list
    of (n_lower, n_upper) ordered by the source position."""
    out = []
    for _, ys, ws in pi.rows():
        cut = rel_tol * float(ws.sum())
        real = ys[ws > cut]
        out.append((int((real <= a).sum()), int((real >= b).sum())))
    return out


@dataclass(frozen=True)
class ValidationReport:
    """Marginal and barycenter residuals of a coupling against (mu, nu)."""

    row_residual: float
    column_residual: float
    barycenter_residual: float

    def max_residual(self) -> float:
        return max(self.row_residual, self.column_residual,
                   self.barycenter_residual)

    def ok(self, tol: float) -> bool:
        return self.max_residual() <= tol

    def to_dict(self) -> dict:
        return {
            "row": self.row_residual,
            "column": self.column_residual,
            "barycenter": self.barycenter_residual,
        }


def _marginal_residual(points, weights, measure: DiscreteMeasure, dim: int):
    """Max deviation between aggregated point masses and measure atoms,
    counting mass at unmatched positions in full."""
    agg = {}
    for pt, w in zip(points, weights):
        key = tuple(np.round(np.atleast_1d(pt) / POSITION_TOL).astype(np.int64))
        agg[key] = agg.get(key, 0.0) + w
    resid = 0.0
    used = set()
    for pos, mass in zip(measure.positions, measure.masses):
        key = tuple(np.round(np.atleast_1d(pos) / POSITION_TOL).astype(np.int64))
        got = 0.0
        for shift in _key_neighborhood(key, dim):
            if shift in agg:
                got += agg[shift]
                used.add(shift)
        resid = max(resid, abs(got - mass))
    for key, w in agg.items():
        if key not in used:
            resid = max(resid, abs(w))
    return resid


def _key_neighborhood(key, dim):
    """Rounding a position to the tolerance lattice can land on either side
    of a cell edge in any coordinate, so match the full 3^d neighborhood."""
    if dim == 1:
        return [(key[0] - 1,), key, (key[0] + 1,)]
    return [tuple(k + d for k, d in zip(key, shift))
            for shift in itertools.product((-1, 0, 1), repeat=dim)]


def validate_coupling(pi: Coupling, mu: DiscreteMeasure, nu: DiscreteMeasure,
                      tol: float = 1e-9) -> ValidationReport:
    """Report the worst row-marginal, column-marginal, and row-barycenter
    residuals of a coupling against its intended marginals."""
    if len(pi) == 0:
        worst = max(mu.total_mass(), nu.total_mass())
        return ValidationReport(worst, worst, 0.0)
    row = _marginal_residual(pi.xs, pi.masses, mu, pi.dim)
    col = _marginal_residual(pi.ys, pi.masses, nu, pi.dim)
    bary = 0.0
    if pi.dim == 1:
        for x, ys, ws in pi.rows():
            bary = max(bary, abs(float(np.dot(ys, ws)) - x * float(ws.sum())))
    else:
        seen = {}
        for x, y, w in zip(pi.xs, pi.ys, pi.masses):
            key = tuple(np.round(x / POSITION_TOL).astype(np.int64))
            acc = seen.setdefault(key, [np.zeros(pi.dim), 0.0, x])
            acc[0] = acc[0] + w * y
            acc[1] += w
            seen[key] = acc
        for moment, w, x in seen.values():
            bary = max(bary, float(np.abs(moment - w * x).max()))
    return ValidationReport(row, col, bary)
