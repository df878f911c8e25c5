"""Minimal adversarial paths (MAP) and distances (MAD).

Three solver families, all sharing the same query/result types:

* a penalty-method path for classifiers with a locally unique inverse
  (closed form per penalty weight, exact in the large-weight limit);
* a closed form for generalized linear models (rank-one update /
  hyperplane projection, O(D) arithmetic);
* the Voronoi-cell decomposition for the entropic classifier: one
  strictly convex QP per candidate cell, feasibility-filtered, argmin
  over cells.

A brute-force grid oracle (exhaustive scan over accessible coordinates)
provides the independent reference the solver tests compare against.

Distances are plain Euclidean over the accessible coordinates in the
(standardized) space the query lives in; non-accessible coordinates are
copied bitwise into the endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (
    DimensionMismatchError,
    NoControlError,
    SchemaError,
    UnreachableTargetError,
    UnsupportedError,
)
from .espa import EspaModel, assign_cell, assign_cells
from .glm import GlmModel, logit, sigmoid
from .polytope import build_cell_polytope
from .qp import INFEASIBLE, OPTIMAL, QpResult, certify_feasibility, solve_qp

INEQUALITY = "inequality"
EQUALITY = "equality"

FOUND = "found"
NOT_FOUND = "infeasible"

EQ_TOL = 1e-9
DEFAULT_NUDGE = 1e-6


@dataclass(frozen=True)
class MapQuery:
    """A source point, its class, the required drop and what may change.

    ``delta`` >= 0; the degenerate delta=0 query is answered by the
    point itself (services that require a strictly positive drop enforce
    that at their boundary). ``accessible`` holds 0-based coordinate
    indices; everything else is frozen. ``bounds``, when given as a
    (lower, upper) pair of D-vectors, restricts the endpoint's
    accessible coordinates to that box (e.g. the data range, so
    interventions stay physically meaningful); the Voronoi solver and
    the grid oracle honor it, the closed-form paths do not accept it.
    """

    x: np.ndarray
    label: int
    delta: float
    accessible: tuple[int, ...]
    mode: str = INEQUALITY
    bounds: tuple | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or not np.all(np.isfinite(x)):
            raise SchemaError("query point must be a finite vector")
        if not np.isfinite(self.delta) or self.delta < 0:
            raise SchemaError("delta must be finite and >= 0")
        acc = tuple(sorted(int(i) for i in self.accessible))
        if len(acc) == 0:
            raise SchemaError("accessible set must be non-empty")
        if len(set(acc)) != len(acc):
            raise SchemaError("accessible indices must be unique")
        if acc[0] < 0 or acc[-1] >= x.shape[0]:
            raise SchemaError("accessible indices out of range")
        if self.mode not in (INEQUALITY, EQUALITY):
            raise SchemaError(f"unknown mode {self.mode!r}")
        if self.bounds is not None:
            lo = np.asarray(self.bounds[0], dtype=float)
            hi = np.asarray(self.bounds[1], dtype=float)
            if lo.shape != x.shape or hi.shape != x.shape:
                raise SchemaError("bounds must be a (lower, upper) pair of "
                                  "full-dimension vectors")
            if np.any(lo > hi):
                raise SchemaError("lower bound exceeds upper bound")
            lo.flags.writeable = False
            hi.flags.writeable = False
            object.__setattr__(self, "bounds", (lo, hi))
        x.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "accessible", acc)

    @property
    def frozen(self) -> tuple[int, ...]:
        mask = np.ones(self.x.shape[0], dtype=bool)
        mask[list(self.accessible)] = False
        return tuple(np.flatnonzero(mask).tolist())


@dataclass(frozen=True)
class PenaltySchedule:
    """Strictly increasing positive penalty weights."""

    eps2_values: tuple[float, ...]

    def __post_init__(self):
        v = tuple(float(e) for e in self.eps2_values)
        if len(v) == 0 or any(e <= 0 for e in v):
            raise SchemaError("penalty weights must be positive")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise SchemaError("penalty weights must be strictly increasing")
        object.__setattr__(self, "eps2_values", v)

    @staticmethod
    def default() -> "PenaltySchedule":
        return PenaltySchedule(tuple(10.0 ** k for k in range(-2, 9)))


@dataclass(frozen=True)
class InvertibleClassifier:
    """Probability map with a locally unique inverse on a neighborhood.

    ``forward`` maps a point to P_L; ``inverse`` maps a probability back
    to the unique preimage inside the neighborhood; ``in_neighborhood``
    is the membership predicate for that neighborhood.
    """

    forward: Callable[[np.ndarray], float]
    inverse: Callable[[float], np.ndarray]
    in_neighborhood: Callable[[np.ndarray], bool]


@dataclass(frozen=True)
class CellOutcome:
    """Per-candidate-cell diagnostics of the Voronoi MAP decomposition."""

    cell: int
    reason: str                  # solved | delta_filtered | polytope_empty | numeric_failure
    drop: float
    qp: QpResult | None = None


@dataclass(frozen=True)
class MapResult:
    status: str
    x_star: np.ndarray | None
    mad: float
    mad_boundary: float          # infimum distance (no endpoint nudge)
    achieved_drop: float
    winner_cells: tuple[int, ...] = ()
    per_cell: tuple[CellOutcome, ...] = ()
    constraint_residual: float = 0.0
    nudge: float = 0.0
    message: str = ""

    @property
    def found(self) -> bool:
        return self.status == FOUND

    def deltas(self, x) -> np.ndarray:
        if self.x_star is None:
            raise SchemaError("no endpoint on an infeasible result")
        return self.x_star - np.asarray(x, dtype=float)


def _identity_result(q: MapQuery, winner=()) -> MapResult:
    return MapResult(status=FOUND, x_star=q.x.copy(), mad=0.0,
                     mad_boundary=0.0, achieved_drop=0.0,
                     winner_cells=tuple(winner), message="delta is zero")


def map_invertible_penalty(clf: InvertibleClassifier, q: MapQuery,
                           sched: PenaltySchedule | None = None) -> MapResult:
    """Penalty-method path for a locally invertible classifier.

    For each penalty weight e2 the minimizer is the closed-form convex
    combination (x + e2*C)/(1+e2) on the accessible coordinates, with
    C the inverse image of the target probability. Returns the
    largest-weight iterate that stays inside the classifier's
    neighborhood, with the constraint residual reported.
    """
    sched = sched or PenaltySchedule.default()
    if q.bounds is not None:
        raise UnsupportedError("the penalty path does not take box bounds")
    x = q.x
    acc = list(q.accessible)
    p0 = float(clf.forward(x))
    target = p0 - q.delta
    anchor = np.asarray(clf.inverse(target), dtype=float)
    if anchor.shape != x.shape:
        raise DimensionMismatchError("inverse image has wrong dimension")

    best = None
    for eps2 in sched.eps2_values:
        cand = x.copy()
        cand[acc] = (x[acc] + eps2 * anchor[acc]) / (1.0 + eps2)
        if clf.in_neighborhood(cand):
            best = (eps2, cand)
    if best is None:
        return MapResult(status=NOT_FOUND, x_star=None, mad=np.inf,
                         mad_boundary=np.inf, achieved_drop=0.0,
                         message="no penalty iterate inside the neighborhood")
    eps2, x_star = best
    p_star = float(clf.forward(x_star))
    mad = float(np.linalg.norm(x_star[acc] - x[acc]))
    return MapResult(status=FOUND, x_star=x_star, mad=mad, mad_boundary=mad,
                     achieved_drop=p0 - p_star,
                     constraint_residual=abs(p_star - target),
                     message=f"largest admissible penalty weight {eps2:g}")


def _oriented_glm(model: GlmModel, label: int) -> tuple[np.ndarray, float]:
    """Coefficients of P(label | x) = sigmoid(theta . x + c)."""
    if label == 1:
        return model.coef, float(model.intercept)
    if label == 0:
        return -model.coef, -float(model.intercept)
    raise SchemaError("GLM paths are binary; label must be 0 or 1")


def map_glm(model: GlmModel, q: MapQuery, *, eps2: float | None = None) -> MapResult:
    """Closed-form MAP for a logistic GLM.

    Default is the exact MAP (the penalty limit): projection of the
    accessible block onto the hyperplane where the score equals the
    logit of the target probability. Passing ``eps2`` returns the
    corresponding finite-penalty iterate instead. Equality and
    inequality modes coincide here because the probability is continuous
    and strictly monotone along the coefficient direction. O(D).
    """
    theta, c0 = _oriented_glm(model, q.label)
    if q.bounds is not None:
        raise UnsupportedError("the GLM closed form does not take box bounds")
    x = q.x
    if x.shape[0] != model.n_features:
        raise DimensionMismatchError("query/model dimensions disagree")
    acc = list(q.accessible)
    frozen = list(q.frozen)
    p0 = float(sigmoid(theta @ x + c0))
    target = p0 - q.delta
    if q.delta == 0.0:
        pass  # target equals p0, formula reduces to x up to roundoff
    elif not 0.0 < target < 1.0:
        raise UnreachableTargetError(
            f"target probability {target:.6g} outside (0, 1)")
    theta_a = theta[acc]
    sq = float(theta_a @ theta_a)
    if sq == 0.0:
        raise NoControlError("accessible features cannot move the GLM score")
    c = float(logit(target) - c0 - theta[frozen] @ x[frozen])
    gap = c - float(theta_a @ x[acc])
    if eps2 is None:
        coef = gap / sq
    else:
        coef = eps2 * gap / (1.0 + eps2 * sq)
    x_star = x.copy()
    x_star[acc] = x[acc] + coef * theta_a
    mad = float(np.linalg.norm(x_star[acc] - x[acc]))
    p_star = float(sigmoid(theta @ x_star + c0))
    return MapResult(status=FOUND, x_star=x_star, mad=mad, mad_boundary=mad,
                     achieved_drop=p0 - p_star,
                     constraint_residual=abs(p_star - target),
                     message="penalty limit" if eps2 is None else f"eps2={eps2:g}")


def glm_mad(model: GlmModel, q: MapQuery) -> float:
    """Analytic MAD: |score gap| / ||accessible coefficients||."""
    theta, c0 = _oriented_glm(model, q.label)
    acc = list(q.accessible)
    frozen = list(q.frozen)
    p0 = float(sigmoid(theta @ q.x + c0))
    target = p0 - q.delta
    if not 0.0 < target < 1.0:
        raise UnreachableTargetError("target probability outside (0, 1)")
    theta_a = theta[acc]
    norm = float(np.linalg.norm(theta_a))
    if norm == 0.0:
        raise NoControlError("accessible features cannot move the GLM score")
    c = float(logit(target) - c0 - theta[frozen] @ q.x[frozen])
    return abs(c - float(theta_a @ q.x[acc])) / norm


def _nudge_into_cell(model: EspaModel, q: MapQuery, cell: int, u_opt: np.ndarray,
                     interior: np.ndarray | None, eta: float) -> np.ndarray:
    """Move the boundary minimizer a step eta toward the cell interior.

    The QP optimum sits on the closed cell boundary where nearest-cell
    ties break by index, so the drop may not be attained there. Stepping
    toward a strictly interior point of the sliced cell (phase-1 deepest
    point) lands strictly inside. Falls back to larger steps if the
    first is swallowed by rounding, then to the unnudged point.
    """
    acc = list(q.accessible)
    candidates = []
    if interior is not None:
        gap = interior - u_opt
        dist = float(np.linalg.norm(gap))
        if dist > 0:
            for scale in (1.0, 10.0, 100.0):
                alpha = min(scale * eta / dist, 1.0)
                candidates.append(u_opt + alpha * gap)
    # weighted direction toward the cell center as a secondary fallback
    center_gap = model.centers[acc, cell] - u_opt
    dist_c = float(np.linalg.norm(center_gap))
    if dist_c > 0:
        candidates.append(u_opt + min(eta / dist_c, 1.0) * center_gap)
    for cand in candidates:
        trial = q.x.copy()
        trial[acc] = cand
        if assign_cell(model, trial) == cell:
            return cand
    return u_opt


def map_espa(model: EspaModel, q: MapQuery, *, eta: float = DEFAULT_NUDGE,
             eq_tol: float = EQ_TOL) -> MapResult:
    """Voronoi-cell MAP: one strictly convex QP per admissible cell.

    Candidate cells are those whose class-probability drop meets the
    mode (at least delta, or delta within ``eq_tol``). Each candidate's
    sliced cell polytope is feasibility-certified and, when non-empty,
    the projection QP is solved; the winner is the closest feasible
    cell (ties reported, lowest index primary). Box bounds on the query
    become extra rows of every cell system, so out-of-range cells are
    certified unreachable rather than silently projected to. The
    returned endpoint is nudged ``eta`` into the winning cell so the
    drop holds strictly; ``mad`` measures the returned endpoint,
    ``mad_boundary`` the boundary infimum.
    """
    x = q.x
    if x.shape[0] != model.n_features:
        raise DimensionMismatchError("query/model dimensions disagree")
    if not 0 <= q.label < model.n_classes:
        raise SchemaError(f"label {q.label} outside model classes")
    acc = list(q.accessible)
    probs = model.cell_class_probs[q.label]
    k_star = assign_cell(model, x)
    p0 = float(probs[k_star])

    if q.delta <= eq_tol:
        return _identity_result(q, winner=(k_star,))

    box_rows = None
    if q.bounds is not None:
        lo, hi = q.bounds
        eye = np.eye(len(acc))
        box_rows = (np.vstack([eye, -eye]),
                    np.concatenate([hi[acc], -lo[acc]]))

    outcomes: list[CellOutcome] = []
    solved: list[tuple[int, QpResult]] = []
    for k in range(model.n_cells):
        if k == k_star:
            continue
        drop = p0 - float(probs[k])
        admissible = (drop >= q.delta if q.mode == INEQUALITY
                      else abs(drop - q.delta) <= eq_tol)
        if not admissible:
            outcomes.append(CellOutcome(cell=k, reason="delta_filtered", drop=drop))
            continue
        poly = build_cell_polytope(model, x, k, acc)
        A, b = poly.A, poly.b
        if box_rows is not None:
            A = np.vstack([A, box_rows[0]])
            b = np.concatenate([b, box_rows[1]])
        feas = certify_feasibility(A, b)
        if not feas.feasible:
            outcomes.append(CellOutcome(
                cell=k, reason="polytope_empty", drop=drop,
                qp=QpResult(INFEASIBLE, None, None, (), None, np.nan, np.nan,
                            np.nan, feas.margin, None, 0,
                            "phase-1 certificate")))
            continue
        res = solve_qp(A, b, x[acc], feasibility=feas)
        reason = "solved" if res.status == OPTIMAL else res.status
        outcomes.append(CellOutcome(cell=k, reason=reason, drop=drop, qp=res))
        if res.status == OPTIMAL:
            solved.append((k, res))

    if not solved:
        return MapResult(status=NOT_FOUND, x_star=None, mad=np.inf,
                         mad_boundary=np.inf, achieved_drop=0.0,
                         per_cell=tuple(outcomes),
                         message="no admissible cell is reachable")

    objectives = np.array([res.objective for _, res in solved])
    best = float(objectives.min())
    winners = tuple(k for (k, res), obj in zip(solved, objectives)
                    if obj <= best + 1e-12)
    k_win, res_win = next((k, r) for k, r in solved if k in winners)

    u_final = _nudge_into_cell(model, q, k_win, res_win.x_opt,
                               res_win.interior_point, eta)
    x_star = x.copy()
    x_star[acc] = u_final
    achieved = p0 - float(probs[assign_cell(model, x_star)])
    return MapResult(status=FOUND, x_star=x_star,
                     mad=float(np.linalg.norm(x_star[acc] - x[acc])),
                     mad_boundary=float(np.sqrt(best)),
                     achieved_drop=achieved, winner_cells=winners,
                     per_cell=tuple(outcomes), nudge=eta,
                     message=f"{len(solved)} feasible of {model.n_cells - 1} rivals")


def espa_predict_fn(model: EspaModel, label: int) -> Callable[[np.ndarray], np.ndarray]:
    """Batch P(label | x) through the model's own assignment rule."""
    def predict(points: np.ndarray) -> np.ndarray:
        k = assign_cells(model, np.atleast_2d(points))
        return model.cell_class_probs[label, k]
    return predict


def glm_predict_fn(model: GlmModel, label: int) -> Callable[[np.ndarray], np.ndarray]:
    theta, c0 = _oriented_glm(model, label)
    def predict(points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points)
        return sigmoid(pts @ theta + c0)
    return predict


def _annulus_offsets(dim: int, inner: int, outer: int, h: float) -> np.ndarray:
    """Grid offsets with L-inf index in (inner, outer], as strips."""
    full = np.arange(-outer, outer + 1)
    small = np.arange(-inner, inner + 1)
    ring = np.concatenate([np.arange(-outer, -inner), np.arange(inner + 1, outer + 1)])
    if dim == 1:
        coords = ring[:, None]
    else:
        strips = []
        for j in range(dim):
            axes = []
            for i in range(dim):
                if i < j:
                    axes.append(small)
                elif i == j:
                    axes.append(ring)
                else:
                    axes.append(full)
            mesh = np.meshgrid(*axes, indexing="ij")
            strips.append(np.stack([m.ravel() for m in mesh], axis=1))
        coords = np.concatenate(strips, axis=0)
    return coords * h


def map_oracle_grid(predict: Callable[[np.ndarray], np.ndarray], q: MapQuery,
                    radius: float, resolution: float, *,
                    eq_tol: float = EQ_TOL, batch_shells: int = 48) -> MapResult:
    """Exhaustive grid scan over the accessible coordinates.

    Scans the axis-aligned grid of step ``resolution`` inside
    ``x +- radius`` on the accessible coordinates, keeps points whose
    predicted drop meets the query mode (and that sit inside the query's
    box bounds, when given), and returns the closest.
    Exact over the grid: shells are visited in increasing L-inf radius
    and the scan stops once no unvisited shell can beat the incumbent
    (L2 >= L-inf). Guaranteed within ``resolution * sqrt(dim)`` of the
    true MAD whenever a true minimizer lies inside the box.
    """
    acc = list(q.accessible)
    dim = len(acc)
    if dim > 3:
        raise SchemaError("grid oracle is limited to |accessible| <= 3")
    h = float(resolution)
    n_shells = int(np.floor(radius / h))
    x = q.x
    p0 = float(np.atleast_1d(predict(x[None, :]))[0])

    lo_a = hi_a = None
    if q.bounds is not None:
        lo_a, hi_a = q.bounds[0][acc], q.bounds[1][acc]

    def feasible(drops: np.ndarray) -> np.ndarray:
        if q.mode == INEQUALITY:
            return drops >= q.delta - 1e-12
        return np.abs(drops - q.delta) <= eq_tol

    if bool(feasible(np.array([0.0]))[0]):
        return _identity_result(q)

    best_d2 = np.inf
    best_offset = None
    inner = 0
    chunk = 200_000
    while inner < n_shells:
        outer = min(inner + batch_shells, n_shells)
        offsets = _annulus_offsets(dim, inner, outer, h)
        for lo in range(0, offsets.shape[0], chunk):
            off = offsets[lo:lo + chunk]
            pts = np.repeat(x[None, :], off.shape[0], axis=0)
            pts[:, acc] += off
            drops = p0 - np.asarray(predict(pts), dtype=float)
            ok = feasible(drops)
            if lo_a is not None:
                inside = np.all((pts[:, acc] >= lo_a - 1e-12) &
                                (pts[:, acc] <= hi_a + 1e-12), axis=1)
                ok = ok & inside
            if ok.any():
                d2 = (off[ok] ** 2).sum(axis=1)
                j = int(np.argmin(d2))
                if d2[j] < best_d2 - 1e-15:
                    best_d2 = float(d2[j])
                    best_offset = off[ok][j]
        inner = outer
        if best_d2 <= (inner * h) ** 2:
            break

    if best_offset is None:
        return MapResult(status=NOT_FOUND, x_star=None, mad=np.inf,
                         mad_boundary=np.inf, achieved_drop=0.0,
                         message=f"no feasible grid point within radius {radius:g}")
    x_star = x.copy()
    x_star[acc] = x[acc] + best_offset
    drop = p0 - float(np.atleast_1d(predict(x_star[None, :]))[0])
    mad = float(np.sqrt(best_d2))
    return MapResult(status=FOUND, x_star=x_star, mad=mad, mad_boundary=mad,
                     achieved_drop=drop,
                     message=f"grid h={h:g}, radius={radius:g}")
