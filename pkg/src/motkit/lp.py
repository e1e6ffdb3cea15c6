"""Brute-force LP oracle for the discrete martingale transport problem.

The coupling weights pi[i, j] >= 0 over source atoms (x_i, mu_i) and target
atoms (y_j, nu_j) are constrained by

    row sums        sum_j pi[i, j]          = mu_i          (m rows)
    column sums     sum_i pi[i, j]          = nu_j          (n rows)
    row barycenters sum_j y_j[k] pi[i, j]   = x_i[k] mu_i   (d*m rows)

and the objective is sum pi[i, j] |x_i - y_j|^p. The system is solved by a
self-contained dense two-phase simplex (full tableau, Dantzig pricing with a
Bland's-rule fallback once the objective stalls). Instances are desk scale,
so determinism and transparency beat sparse performance here; infeasibility
of phase 1 is exactly the convex-order failure of the marginals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, SolverFailureError
from .measures import DiscreteMeasure
from .mot1d import Coupling

PIVOT_TOL = 1e-9
FEAS_TOL_FACTOR = 1e-8     # phase-1 residual threshold, times total mass
RESIDUAL_RTOL = 1e-9       # feasibility residual gate on reported optima
MAX_VARIABLES = 250_000


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int):
    T[row] /= T[row, col]
    other = T[:, col].copy()
    other[row] = 0.0
    T -= other[:, None] * T[row][None, :]
    basis[row] = col


def _run_phase(T: np.ndarray, basis: np.ndarray, n_cols: int, maxiter: int,
               stall_limit: int):
    """Pivot until optimal. Returns (status, iterations).

    n_cols restricts entering variables to the first n_cols columns. Dantzig
    pricing switches permanently to Bland's rule after stall_limit iterations
    without objective progress.
    """
    m = len(basis)
    bland = False
    stall = 0
    best = np.inf
    for it in range(maxiter):
        obj_row = T[-1, :n_cols]
        if bland:
            cand = np.nonzero(obj_row < -PIVOT_TOL)[0]
            if len(cand) == 0:
                return "optimal", it
            col = int(cand[0])
        else:
            col = int(np.argmin(obj_row))
            if obj_row[col] >= -PIVOT_TOL:
                return "optimal", it
        ratios = np.full(m, np.inf)
        pos = T[:m, col] > PIVOT_TOL
        ratios[pos] = T[:m, -1][pos] / T[:m, col][pos]
        if not pos.any():
            return "unbounded", it
        best_ratio = ratios.min()
        thresh = best_ratio + 1e-12 * max(1.0, abs(best_ratio))
        ties = np.nonzero(ratios <= thresh)[0]
        row = int(ties[np.argmin(basis[ties])])
        _pivot(T, basis, row, col)
        cur = -T[-1, -1]
        if cur < best - 1e-12 * max(1.0, abs(best)):
            best = cur
            stall = 0
        else:
            stall += 1
            if stall > stall_limit:
                bland = True
    return "maxiter", maxiter


def simplex_solve(A: np.ndarray, b: np.ndarray, c: np.ndarray,
                  feas_tol: float):
    """min c@v subject to A v = b, v >= 0 (dense two-phase simplex).

    Returns (status, v, iterations, message); status is one of
    optimal / infeasible / failure. Redundant equality rows are dropped
    after phase 1.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    flip = b < 0
    A = np.where(flip[:, None], -A, A)
    b = np.abs(b)

    T = np.zeros((m + 2, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = c
    T[m + 1, :n] = -A.sum(axis=0)
    T[m + 1, -1] = -b.sum()
    basis = np.arange(n, n + m)

    maxiter = max(2000, 25 * (m + n))
    stall_limit = 10 * (m + n)
    status, it1 = _run_phase(T, basis, n + m, maxiter, stall_limit)
    if status != "optimal":
        return "failure", None, it1, f"phase 1 ended with {status}"
    phase1_obj = -T[-1, -1]
    if phase1_obj > feas_tol:
        return "infeasible", None, it1, f"phase-1 residual {phase1_obj:.3e}"

    T = T[:-1]
    # Drive leftover artificial variables out of the basis; a row where no
    # structural column can pivot is redundant and is dropped.
    keep = np.ones(m, dtype=bool)
    for i in range(m):
        if basis[i] >= n:
            cols = np.nonzero(np.abs(T[i, :n]) > PIVOT_TOL)[0]
            if len(cols):
                _pivot(T, basis, i, int(cols[0]))
            else:
                keep[i] = False
    if not keep.all():
        T = np.vstack([T[:m][keep], T[m:]])
        basis = basis[keep]
    T = np.delete(T, np.s_[n:n + m], axis=1)

    status, it2 = _run_phase(T, basis, n, maxiter, stall_limit)
    if status != "optimal":
        return "failure", None, it1 + it2, f"phase 2 ended with {status}"
    v = np.zeros(n)
    v[basis] = T[:len(basis), -1]
    v[v < 0] = 0.0
    return "optimal", v, it1 + it2, ""


@dataclass(frozen=True)
class MotLp:
    """Assembled LP data for a martingale (or plain) transport instance."""

    mu: DiscreteMeasure
    nu: DiscreteMeasure
    p: float
    sense: str = "min"
    martingale: bool = True
    cost_matrix: np.ndarray | None = None
    A: np.ndarray = field(init=False, repr=False)
    b: np.ndarray = field(init=False, repr=False)
    C: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mu, nu = self.mu, self.nu
        if mu.dim != nu.dim:
            raise InputError("marginals must share dim")
        if len(mu) == 0 or len(nu) == 0:
            raise InputError("marginals must be nonempty")
        m, n, d = len(mu), len(nu), mu.dim
        if m * n > MAX_VARIABLES:
            raise InputError(f"instance too large: {m}x{n} > {MAX_VARIABLES} variables")
        if self.sense not in ("min", "max"):
            raise InputError("sense must be 'min' or 'max'")
        if self.cost_matrix is not None:
            C = np.asarray(self.cost_matrix, dtype=float)
            if C.shape != (m, n):
                raise InputError("cost matrix shape mismatch")
        else:
            if self.p <= 0:
                raise InputError("cost exponent must be positive")
            if d == 1:
                dist = np.abs(mu.positions[:, None] - nu.positions[None, :])
            else:
                dist = np.linalg.norm(
                    mu.positions[:, None, :] - nu.positions[None, :, :], axis=2)
            C = dist ** self.p

        rows = m + n + (d * m if self.martingale else 0)
        A = np.zeros((rows, m * n))
        b = np.zeros(rows)
        for i in range(m):
            A[i, i * n:(i + 1) * n] = 1.0
            b[i] = mu.masses[i]
        for j in range(n):
            A[m + j, j::n] = 1.0
            b[m + j] = nu.masses[j]
        if self.martingale:
            ypos = nu.positions if d > 1 else nu.positions[:, None]
            xpos = mu.positions if d > 1 else mu.positions[:, None]
            for i in range(m):
                for k in range(d):
                    r = m + n + i * d + k
                    A[r, i * n:(i + 1) * n] = ypos[:, k]
                    b[r] = xpos[i, k] * mu.masses[i]
        for arr in (A, b, C):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "C", C)

    def objective_vector(self) -> np.ndarray:
        c = self.C.ravel()
        return -c if self.sense == "max" else c.copy()


@dataclass(frozen=True)
class LpSolution:
    """Outcome of an LP solve; matrix is the (m, n) coupling by atom index."""

    status: str                      # optimal | infeasible | numerical-failure
    coupling: Coupling | None
    objective: float | None
    matrix: np.ndarray | None
    residuals: dict
    iterations: int
    message: str = ""


def _solve_assembled(prob: MotLp) -> LpSolution:
    mu, nu = prob.mu, prob.nu
    total = mu.total_mass() + nu.total_mass()
    feas_tol = FEAS_TOL_FACTOR * max(1.0, total)
    status, v, iters, msg = simplex_solve(prob.A, prob.b,
                                          prob.objective_vector(), feas_tol)
    if status == "infeasible":
        return LpSolution("infeasible", None, None, None, {}, iters, msg)
    if status != "optimal":
        return LpSolution("numerical-failure", None, None, None, {}, iters, msg)

    resid = float(np.abs(prob.A @ v - prob.b).max())
    scale = max(1.0, float(np.abs(prob.b).max()))
    residuals = {"feasibility": resid}
    if resid > RESIDUAL_RTOL * scale:
        return LpSolution("numerical-failure", None, None, None, residuals,
                          iters, f"feasibility residual {resid:.3e}")

    m, n = len(mu), len(nu)
    mat = v.reshape(m, n)
    objective = float(np.tensordot(prob.C, mat))
    cutoff = 1e-12 * max(1.0, total)
    ii, jj = np.nonzero(mat > cutoff)
    pi = Coupling(mu.positions[ii], nu.positions[jj], mat[ii, jj], dim=mu.dim)
    return LpSolution("optimal", pi, objective, mat, residuals, iters, msg)


def solve_lp(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float,
             sense: str = "min") -> LpSolution:
    """Solve the discrete martingale transport LP to optimality.

    Infeasibility is equivalent to the marginals not being in convex order.
    """
    return _solve_assembled(MotLp(mu, nu, p, sense))


def diagonal_mass(sol: LpSolution) -> float:
    """Mass the optimal coupling keeps fixed (entries with x = y)."""
    if sol.status != "optimal":
        raise InputError("diagonal_mass requires an optimal solution")
    pi = sol.coupling
    if len(pi) == 0:
        return 0.0
    if pi.dim == 1:
        on_diag = np.abs(pi.xs - pi.ys) <= 1e-12
    else:
        on_diag = np.linalg.norm(pi.xs - pi.ys, axis=1) <= 1e-12
    return float(pi.masses[on_diag].sum())


def uniqueness_probe(mu: DiscreteMeasure, nu: DiscreteMeasure, p: float,
                     trials: int = 6, eps: float = 1e-5, *,
                     martingale: bool = True,
                     cost_matrix: np.ndarray | None = None,
                     seed: int = 0) -> bool:
    """Heuristic certificate that the LP optimum is unique.

    Re-solves under `trials` random cost perturbations of magnitude
    eps * (smallest positive gap between cost entries), then runs tie-break
    passes that pin the optimal objective as a constraint and maximize a
    random secondary objective. Returns True iff every optimizer found
    coincides with the base one within 1e-7 entrywise.
    """
    prob = MotLp(mu, nu, p, "min", martingale, cost_matrix)
    base = _solve_assembled(prob)
    if base.status != "optimal":
        raise SolverFailureError(f"probe requires an optimal base solve, got {base.status}")

    gaps = np.diff(np.unique(prob.C))
    gap = float(gaps[gaps > 1e-300].min()) if np.any(gaps > 1e-300) else 1.0
    mag = eps * gap
    rng = np.random.default_rng(seed)
    total = mu.total_mass() + nu.total_mass()
    feas_tol = FEAS_TOL_FACTOR * max(1.0, total)
    m, n = len(mu), len(nu)

    for _ in range(trials):
        C_pert = prob.C + mag * rng.random((m, n))
        status, v, _, msg = simplex_solve(prob.A, prob.b, C_pert.ravel(), feas_tol)
        if status != "optimal":
            raise SolverFailureError(f"perturbed solve failed: {status} {msg}")
        if np.abs(v.reshape(m, n) - base.matrix).max() > 1e-7:
            return False

    A_tie = np.vstack([prob.A, prob.C.ravel()])
    b_tie = np.append(prob.b, base.objective)
    for _ in range(max(1, trials // 2)):
        secondary = -rng.random(m * n)   # maximize a random objective
        status, v, _, msg = simplex_solve(A_tie, b_tie, secondary, feas_tol)
        if status != "optimal":
            raise SolverFailureError(f"tie-break solve failed: {status} {msg}")
        if np.abs(v.reshape(m, n) - base.matrix).max() > 1e-7:
            return False
    return True
