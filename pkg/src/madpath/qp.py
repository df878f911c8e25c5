"""Strictly convex quadratic programming: nearest point in a polyhedron.

Solves ``min ||u - x||^2  s.t.  A u <= b`` with a dual active-set method
(start at the unconstrained optimum, add most-violated constraints,
partial steps drop constraints whose multiplier would go negative).
With an identity Hessian every linear-algebra step is plain projection
arithmetic, which keeps the method exact at these sizes.

Feasibility is certified beforehand by a phase-1 linear program that
minimizes the maximum constraint violation; its optimum also provides a
strictly interior point (used by callers that need to step inside the
polytope) or an infeasibility certificate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import DimensionMismatchError, NumericError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
NUMERIC_FAILURE = "numeric_failure"

_VIOL_TOL = 1e-9
_DEP_TOL = 1e-12


@dataclass(frozen=True)
class Feasibility:
    """Outcome of the phase-1 LP.

    margin > 0 means a strictly interior point exists; point then holds a
    deepest point (max-margin, row-normalized). margin <= 0 within
    tolerance of zero means the set is non-empty but may be flat.
    """

    feasible: bool
    margin: float
    point: np.ndarray | None


@dataclass(frozen=True)
class QpResult:
    status: str
    x_opt: np.ndarray | None
    objective: float | None
    active_set: tuple[int, ...]
    duals: np.ndarray | None
    kkt_residual: float
    primal_violation: float
    complementary_slackness: float
    feasibility_margin: float
    interior_point: np.ndarray | None
    n_iterations: int
    message: str = ""


def certify_feasibility(A: np.ndarray, b: np.ndarray, *, tol: float = _VIOL_TOL) -> Feasibility:
    """Phase-1 LP: minimize the largest row-normalized violation.

    Zero rows are screened first: ``0^T u <= b_i`` is vacuous when
    b_i >= 0 and an immediate infeasibility certificate otherwise.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    m, n = A.shape
    if m == 0:
        return Feasibility(True, np.inf, np.zeros(n))
    norms = np.sqrt((A * A).sum(axis=1))
    zero_rows = norms <= _DEP_TOL
    if np.any(zero_rows & (b < -tol)):
        return Feasibility(False, -np.inf, None)
    keep = ~zero_rows
    if not keep.any():
        return Feasibility(True, np.inf, np.zeros(n))
    An = A[keep] / norms[keep, None]
    bn = b[keep] / norms[keep]
    c = np.zeros(n + 1)
    c[-1] = 1.0
    A_ub = np.hstack([An, -np.ones((An.shape[0], 1))])
    bounds = [(None, None)] * n + [(-1.0, None)]
    res = linprog(c, A_ub=A_ub, b_ub=bn, bounds=bounds, method="highs")
    if not res.success:
        raise NumericError(f"phase-1 LP failed: {res.message}")
    t_star = float(res.x[-1])
    point = np.asarray(res.x[:n], dtype=float)
    if t_star > tol:
        return Feasibility(False, -t_star, None)
    return Feasibility(True, -t_star, point)


def _polish(A, b, x, active):
    """Exact projection onto the active equalities plus its multipliers.

    Rows are normalized before the normal-equations solve and one step
    of iterative refinement is applied, which keeps the complementary
    slackness tight even for nearly-dependent active sets.
    """
    if len(active) == 0:
        return x.copy(), np.zeros(0)
    rows = A[list(active)]
    norms = np.sqrt((rows * rows).sum(axis=1))
    norms[norms <= _DEP_TOL] = 1.0
    R = rows / norms[:, None]                  # (k, n), unit rows
    g = (rows @ x - b[list(active)]) / norms   # (k,)
    # projection step solved on R itself (SVD), not the squared system
    z, *_ = np.linalg.lstsq(R, g, rcond=None)
    resid = g - R @ z
    corr, *_ = np.linalg.lstsq(R, resid, rcond=None)
    z = z + corr
    u = x - z
    mu_n, *_ = np.linalg.lstsq(R.T, z, rcond=None)
    return u, mu_n / norms


def _certificates(A, b, x, u, lam):
    grad = 2.0 * (u - x)
    stationarity = float(np.max(np.abs(grad + A.T @ lam))) if A.size else float(
        np.max(np.abs(grad)))
    slack = A @ u - b if A.size else np.zeros(0)
    primal = float(max(0.0, slack.max())) if slack.size else 0.0
    comp = float(np.max(np.abs(lam * slack))) if slack.size else 0.0
    dual = float(max(0.0, -(lam.min()))) if lam.size else 0.0
    return max(stationarity, dual), primal, comp


def _active_set_iterations(A, b, x, max_iter):
    """Dual active-set loop; returns (u, mu_map, iterations) or None on stall."""
    m, n = A.shape
    u = x.copy()
    active: list[int] = []
    mu: list[float] = []
    for it in range(max_iter):
        slack = b - A @ u
        p = int(np.argmin(slack))
        if slack[p] >= -_VIOL_TOL:
            return u, dict(zip(active, mu)), it
        a_p = A[p]
        mu_p = 0.0
        for _ in range(m + 2):
            if active:
                N = A[active].T
                r, *_ = np.linalg.lstsq(N, a_p, rcond=None)
                z = a_p - N @ r
            else:
                r = np.zeros(0)
                z = a_p.copy()
            znorm2 = float(z @ z)
            s_p = float(b[p] - a_p @ u)
            t_full = np.inf if znorm2 <= _DEP_TOL else -s_p / znorm2
            t_drop = np.inf
            drop_idx = -1
            for j, rr in enumerate(r):
                if rr > _DEP_TOL and mu[j] / rr < t_drop:
                    t_drop = mu[j] / rr
                    drop_idx = j
            t = min(t_full, t_drop)
            if not np.isfinite(t):
                # cannot reduce the violation: infeasible direction
                return None
            if znorm2 > _DEP_TOL:
                u = u - t * z
            for j in range(len(mu)):
                mu[j] -= t * r[j]
            mu_p += t
            if t == t_full:
                active.append(p)
                mu.append(mu_p)
                break
            active.pop(drop_idx)
            mu.pop(drop_idx)
        else:
            return None
    return None


def solve_qp(A, b, x, *, feasibility: Feasibility | None = None,
             rng_seed: int = 0) -> QpResult:
    """Project x onto {u : A u <= b} with full KKT certification.

    A pre-computed phase-1 outcome may be passed in; otherwise one is
    run here. Cycling (never observed at these sizes, but guarded) is
    retried from a slightly jittered start and reported honestly if the
    retries also stall.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    x = np.asarray(x, dtype=float).ravel()
    m, n = A.shape
    if b.shape[0] != m or (m > 0 and x.shape[0] != n):
        raise DimensionMismatchError("A, b, x shapes disagree")

    feas = feasibility if feasibility is not None else certify_feasibility(A, b)
    if not feas.feasible:
        return QpResult(INFEASIBLE, None, None, (), None, np.nan, np.nan,
                        np.nan, feas.margin, None, 0,
                        "phase-1 certified the polytope empty")

    if m == 0 or np.all(A @ x <= b + _VIOL_TOL):
        lam = np.zeros(m)
        kkt, primal, comp = _certificates(A, b, x, x, lam)
        return QpResult(OPTIMAL, x.copy(), 0.0, (), lam, kkt, primal, comp,
                        feas.margin, feas.point, 0, "start already feasible")

    rng = np.random.default_rng(rng_seed)
    x_try = x
    for attempt in range(4):
        out = _active_set_iterations(A, b, x_try, max_iter=3 * m + 20)
        if out is not None:
            u_raw, mu_map, iters = out
            # polish on the terminal active set; drop rows whose exact
            # multiplier comes out negative (degenerate actives)
            active = sorted(mu_map)
            for _ in range(len(active) + 1):
                u, mu_vec = _polish(A, b, x, active)
                if mu_vec.size == 0 or mu_vec.min() >= -1e-12:
                    break
                active.pop(int(np.argmin(mu_vec)))
            lam = np.zeros(m)
            lam[active] = np.maximum(2.0 * mu_vec, 0.0) if active else 0.0
            kkt, primal, comp = _certificates(A, b, x, u, lam)
            if primal > 1e-8 or kkt > 1e-7:
                # fall back to the unpolished iterate before retrying
                lam_raw = np.zeros(m)
                for idx, mval in mu_map.items():
                    lam_raw[idx] = max(2.0 * mval, 0.0)
                kkt_r, primal_r, comp_r = _certificates(A, b, x, u_raw, lam_raw)
                if primal_r <= 1e-8 and kkt_r <= 1e-7:
                    obj = float(np.sum((u_raw - x) ** 2))
                    return QpResult(OPTIMAL, u_raw, obj, tuple(sorted(mu_map)),
                                    lam_raw, kkt_r, primal_r, comp_r,
                                    feas.margin, feas.point, iters,
                                    f"attempt {attempt} (unpolished)")
                x_try = x + rng.normal(scale=1e-10, size=n)
                continue
            obj = float(np.sum((u - x) ** 2))
            return QpResult(OPTIMAL, u, obj, tuple(active), lam, kkt, primal,
                            comp, feas.margin, feas.point, iters,
                            f"attempt {attempt}")
        x_try = x + rng.normal(scale=1e-10, size=n)
    return QpResult(NUMERIC_FAILURE, None, None, (), None, np.nan, np.nan,
                    np.nan, feas.margin, feas.point, 0,
                    "active-set stalled after jittered restarts")
