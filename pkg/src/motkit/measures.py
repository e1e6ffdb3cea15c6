"""Finite atomic measures, density quantization, convex order, common mass.

Conventions
-----------
A measure is a finite list of atoms (position, mass) with every mass > 0.
Positions are scalars for dim=1 (kept strictly increasing) or d-vectors for
dim>1. Atoms closer than ``POSITION_TOL`` are merged at construction, at the
mass-weighted mean position, so first moments survive the merge exactly.

Convex order on the line is decided through call functions: with equal total
mass and equal mean, mu precedes nu iff the gap

    R(k) = integral (x-k)+ dnu - integral (x-k)+ dmu

is nonnegative for every real k. R is piecewise linear with kinks only at
atom positions, so evaluating it on the merged support is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError

POSITION_TOL = 1e-12   # absolute merge tolerance for atom positions
MASS_TOL = 1e-10       # default tolerance on masses / call-function gaps


def _merge_sorted_1d(positions: np.ndarray, masses: np.ndarray):
    """Merge atoms whose positions lie within POSITION_TOL (inputs sorted)."""
    if len(positions) == 0:
        return positions, masses
    breaks = np.nonzero(np.diff(positions) > POSITION_TOL)[0] + 1
    groups = np.split(np.arange(len(positions)), breaks)
    out_pos = np.empty(len(groups))
    out_mass = np.empty(len(groups))
    for g, idx in enumerate(groups):
        if len(idx) == 1:   # keep untouched positions bit-exact
            out_pos[g] = positions[idx[0]]
            out_mass[g] = masses[idx[0]]
            continue
        w = masses[idx]
        out_mass[g] = w.sum()
        out_pos[g] = float(np.dot(positions[idx], w) / out_mass[g])
    return out_pos, out_mass


def _merge_nd(positions: np.ndarray, masses: np.ndarray):
    """Pairwise merge for vector atoms (desk-scale O(n^2) union by proximity)."""
    n = len(positions)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if np.max(np.abs(positions[i] - positions[j])) <= POSITION_TOL:
                parent[find(j)] = find(i)
    clusters = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(i)
    out_pos = []
    out_mass = []
    for idx in clusters.values():
        if len(idx) == 1:
            out_mass.append(masses[idx[0]])
            out_pos.append(positions[idx[0]])
            continue
        w = masses[idx]
        out_mass.append(w.sum())
        out_pos.append(np.average(positions[idx], axis=0, weights=w))
    order = np.lexsort(np.asarray(out_pos).T[::-1])
    return np.asarray(out_pos)[order], np.asarray(out_mass)[order]


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finite atomic measure on R (dim=1) or R^d (dim>1).

    positions: shape (n,) for dim=1, (n, d) otherwise; masses: shape (n,),
    all strictly positive. The empty measure (n=0) is allowed so that
    common-mass residuals are representable.
    """

    positions: np.ndarray
    masses: np.ndarray
    dim: int = 1

    def __post_init__(self):
        pos = np.atleast_1d(np.asarray(self.positions, dtype=float))
        w = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if self.dim < 1:
            raise InputError("dim must be >= 1")
        if self.dim == 1:
            if pos.ndim != 1:
                raise InputError("dim=1 measure needs scalar positions")
        else:
            pos = pos.reshape(-1, self.dim) if pos.size else pos.reshape(0, self.dim)
        if len(pos) != len(w):
            raise InputError("positions and masses must have equal length")
        if np.any(~np.isfinite(pos)) or np.any(~np.isfinite(w)):
            raise InputError("positions and masses must be finite")
        if np.any(w <= 0):
            raise InputError("every atom mass must be > 0")
        if len(pos):
            if self.dim == 1:
                order = np.argsort(pos, kind="stable")
                pos, w = _merge_sorted_1d(pos[order], w[order])
            else:
                pos, w = _merge_nd(pos, w)
        pos.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "masses", w)

    @classmethod
    def from_atoms(cls, atoms, dim: int = 1) -> "DiscreteMeasure":
        """Build from an iterable of (position, mass) pairs."""
        atoms = list(atoms)
        if not atoms:
            return cls.empty(dim)
        pos = np.asarray([a[0] for a in atoms], dtype=float)
        w = np.asarray([a[1] for a in atoms], dtype=float)
        return cls(pos, w, dim)

    @classmethod
    def empty(cls, dim: int = 1) -> "DiscreteMeasure":
        shape = (0,) if dim == 1 else (0, dim)
        return cls(np.zeros(shape), np.zeros(0), dim)

    def __len__(self) -> int:
        return len(self.masses)

    def total_mass(self) -> float:
        return float(self.masses.sum())

    def mean(self):
        """Mass-weighted mean position (0 for the empty measure)."""
        if len(self) == 0:
            return 0.0 if self.dim == 1 else np.zeros(self.dim)
        m = np.dot(self.masses, self.positions) / self.masses.sum()
        return float(m) if self.dim == 1 else m

    def atoms(self):
        return list(zip(self.positions, self.masses))


@dataclass(frozen=True)
class GridDensity:
    """Piecewise-constant density on [lo, hi] split into n equal cells."""

    lo: float
    hi: float
    n: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.hi > self.lo):
            raise InputError("need finite hi > lo")
        if self.n < 1 or len(vals) != self.n:
            raise InputError(f"values must have length n={self.n}")
        if np.any(~np.isfinite(vals)) or np.any(vals < 0):
            raise InputError("density values must be finite and >= 0")
        if vals.sum() <= 0:
            raise InputError("grid density has zero total mass")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def cell_width(self) -> float:
        return (self.hi - self.lo) / self.n

    def midpoints(self) -> np.ndarray:
        # centered form: exactly antisymmetric midpoints on symmetric grids
        center = 0.5 * (self.lo + self.hi)
        offsets = 2 * np.arange(self.n) + 1 - self.n
        return center + offsets * ((self.hi - self.lo) / (2 * self.n))

    def total_mass(self) -> float:
        return float(self.values.sum() * self.cell_width)


@dataclass(frozen=True)
class OrderReport:
    """Outcome of a convex-order check between two 1-D measures."""

    in_order: bool
    mass_gap: float      # nu total mass - mu total mass
    mean_gap: float      # nu first moment - mu first moment
    worst_k: float       # k minimizing the call-function gap
    worst_gap: float     # that minimal gap (negative = dominance violated)

    def to_dict(self) -> dict:
        return {
            "in_order": self.in_order,
            "mass_gap": self.mass_gap,
            "mean_gap": self.mean_gap,
            "worst_k": self.worst_k,
            "worst_gap": self.worst_gap,
        }


def quantize(g: GridDensity, normalize: bool = False) -> DiscreteMeasure:
    """Collapse each grid cell to one atom at its midpoint.

    The midpoint is the conditional mean of a constant-density cell, so total
    mass and mean are preserved exactly. Zero-mass cells produce no atom.
    With normalize=True masses are rescaled to total 1.
    """
    masses = g.values * g.cell_width
    total = masses.sum()
    if total <= 0:
        raise InputError("grid density has zero total mass")
    if normalize:
        masses = masses / total
    keep = masses > 0
    return DiscreteMeasure(g.midpoints()[keep], masses[keep], dim=1)


def call_function(m: DiscreteMeasure, ks) -> np.ndarray:
    """integral (x-k)+ dm for each strike k (vectorized over k)."""
    ks = np.atleast_1d(np.asarray(ks, dtype=float))
    if len(m) == 0:
        return np.zeros(len(ks))
    return np.maximum(m.positions[None, :] - ks[:, None], 0.0) @ m.masses


def convex_order_check(mu: DiscreteMeasure, nu: DiscreteMeasure,
                       tol: float = MASS_TOL) -> OrderReport:
    """Decide whether mu precedes nu in convex order (1-D only).

    Checks equal mass, equal mean, and call-function dominance at every kink
    of the piecewise-linear gap, i.e. at every atom position of either
    measure. That finite set is exhaustive for atomic measures.
    """
    if mu.dim != 1 or nu.dim != 1:
        raise InputError("convex order check requires dim=1 measures")
    mass_gap = nu.total_mass() - mu.total_mass()
    mean_gap = float(np.dot(nu.masses, nu.positions) - np.dot(mu.masses, mu.positions))
    ks = np.union1d(mu.positions, nu.positions)
    if len(ks) == 0:
        return OrderReport(True, mass_gap, mean_gap, 0.0, 0.0)
    gaps = call_function(nu, ks) - call_function(mu, ks)
    worst = int(np.argmin(gaps))
    in_order = (abs(mass_gap) <= tol and abs(mean_gap) <= tol
                and gaps[worst] >= -tol)
    return OrderReport(bool(in_order), mass_gap, mean_gap,
                       float(ks[worst]), float(gaps[worst]))


def common_mass_split(mu: DiscreteMeasure, nu: DiscreteMeasure):
    """Split into (common, mu_bar, nu_bar) with common = pointwise min.

    Atom positions are matched within POSITION_TOL. The residuals satisfy
    mu = common + mu_bar, nu = common + nu_bar and share no atom position.
    """
    if mu.dim != nu.dim:
        raise InputError("measures must share the same dim")
    dim = mu.dim
    mu_pos, mu_w = mu.positions, mu.masses.copy()
    nu_pos, nu_w = nu.positions, nu.masses.copy()
    common = []
    if dim == 1:
        i = j = 0
        while i < len(mu_pos) and j < len(nu_pos):
            d = mu_pos[i] - nu_pos[j]
            if abs(d) <= POSITION_TOL:
                c = min(mu_w[i], nu_w[j])
                common.append((mu_pos[i], c))
                mu_w[i] -= c
                nu_w[j] -= c
                i += 1
                j += 1
            elif d < 0:
                i += 1
            else:
                j += 1
    else:
        for i in range(len(mu_pos)):
            for j in range(len(nu_pos)):
                if nu_w[j] > 0 and np.max(np.abs(mu_pos[i] - nu_pos[j])) <= POSITION_TOL:
                    c = min(mu_w[i], nu_w[j])
                    if c > 0:
                        common.append((mu_pos[i], c))
                        mu_w[i] -= c
                        nu_w[j] -= c
                    break

    def residual(pos, w):
        keep = w > 0
        return DiscreteMeasure(pos[keep], w[keep], dim) if keep.any() \
            else DiscreteMeasure.empty(dim)

    common_m = DiscreteMeasure.from_atoms(common, dim) if common \
        else DiscreteMeasure.empty(dim)
    return common_m, residual(mu_pos, mu_w), residual(nu_pos, nu_w)


def moments(m: DiscreteMeasure):
    """(total mass, mean) as exact atomic sums."""
    return m.total_mass(), m.mean()


# ---------------------------------------------------------------------------
# Marginal spec files: {"mu": M, "nu": M} with M either
#   {"type": "discrete", "atoms": [[pos, mass], ...]}
#   {"type": "grid", "lo": a, "hi": b, "n": n, "values": [...]}
# ---------------------------------------------------------------------------

def _marginal_from_dict(d: dict):
    try:
        kind = d["type"]
        if kind == "discrete":
            return DiscreteMeasure.from_atoms(d["atoms"])
        if kind == "grid":
            return GridDensity(float(d["lo"]), float(d["hi"]),
                               int(d["n"]), d["values"])
    except (KeyError, TypeError, IndexError) as exc:
        raise InputError(f"malformed marginal spec: {exc}") from exc
    raise InputError(f"unknown marginal type {kind!r}")


def load_marginal_pair(path):
    """Read a marginal spec file; grid marginals are returned unquantized."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
        return _marginal_from_dict(doc["mu"]), _marginal_from_dict(doc["nu"])
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"cannot read marginal spec {path}: {exc}") from exc


def as_discrete(m, normalize: bool = False) -> DiscreteMeasure:
    """Quantize grid marginals; pass discrete ones through."""
    if isinstance(m, GridDensity):
        return quantize(m, normalize=normalize)
    return m
