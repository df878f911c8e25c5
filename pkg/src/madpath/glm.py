"""Logistic-regression GLM with an explicit sigmoid/logit link pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    DomainError,
    UndefinedMetricError,
)


def sigmoid(z):
    """Numerically stable logistic function, elementwise."""
    z = np.asarray(z, dtype=float)
    out = np.exp(-np.logaddexp(0.0, -z))
    return float(out) if out.ndim == 0 else out


def logit(p):
    """Inverse of sigmoid; requires p strictly inside (0, 1)."""
    p = np.asarray(p, dtype=float)
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise DomainError("logit requires p in the open interval (0, 1)")
    out = np.log(p) - np.log1p(-p)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GlmModel:
    """Fitted logistic model: P(class 1 | x) = sigmoid(coef . x + intercept)."""

    coef: np.ndarray
    intercept: float
    link: str = "logistic"
    standardizer: object | None = None
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        c = np.asarray(self.coef, dtype=float)
        if c.ndim != 1 or not np.all(np.isfinite(c)) or not np.isfinite(self.intercept):
            raise DimensionMismatchError("coefficients must be a finite vector")
        c.flags.writeable = False
        object.__setattr__(self, "coef", c)

    @property
    def n_features(self) -> int:
        return self.coef.shape[0]


def glm_predict_proba(model: GlmModel, x):
    """P(class 1) for a point or a stack of points."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.n_features:
        raise DimensionMismatchError(
            f"point has {x.shape[-1]} features, model expects {model.n_features}")
    return sigmoid(x @ model.coef + model.intercept)


def _penalized_nll(theta, b, X, y, l2):
    z = X @ theta + b
    # mean of log(1 + exp(-(2y-1) z)), stable via logaddexp
    margins = np.where(y == 1, -z, z)
    nll = np.mean(np.logaddexp(0.0, margins))
    return nll + 0.5 * l2 * float(theta @ theta)


def fit_logistic(data: Dataset, l2: float = 1e-4, *, tol: float = 1e-8,
                 max_iters: int = 100, trace: list | None = None) -> GlmModel:
    """Ridge-penalized maximum likelihood by damped Newton iterations.

    The objective is the per-sample mean negative log-likelihood plus
    (l2/2)||coef||^2 (intercept unpenalized), so duplicating the dataset
    leaves the fit unchanged. Converges to gradient norm <= tol; with
    l2=0 on separable data the iteration diverges and raises, suggesting
    a positive ridge. ``trace``, when given, collects the objective
    value after every accepted step.
    """
    if data.n_classes != 2:
        raise UndefinedMetricError("logistic fit needs exactly two classes")
    X = data.features
    y = data.labels.astype(float)
    if y.min() == y.max():
        raise UndefinedMetricError("both classes must be present")
    T, D = X.shape
    theta = np.zeros(D)
    b = 0.0
    obj = _penalized_nll(theta, b, X, y, l2)
    if trace is not None:
        trace.append(obj)
    for _ in range(max_iters):
        z = X @ theta + b
        p = sigmoid(z)
        resid = p - y
        grad_theta = X.T @ resid / T + l2 * theta
        grad_b = float(resid.mean())
        gnorm = float(np.sqrt(grad_theta @ grad_theta + grad_b * grad_b))
        if gnorm <= tol:
            if l2 == 0.0 and np.all(np.abs(p - y) < 1e-4):
                # every point classified with saturated probability: the
                # data are separated and the unpenalized optimum diverges
                raise ConvergenceError(
                    "perfect separation, the maximum-likelihood solution "
                    "is unbounded; set l2 > 0")
            model = GlmModel(coef=theta, intercept=b,
                             column_names=data.column_names)
            return model
        w = p * (1.0 - p)
        Xa = np.column_stack([X, np.ones(T)])
        H = (Xa * w[:, None]).T @ Xa / T
        H[:D, :D] += l2 * np.eye(D)
        H.flat[:: D + 2] += 1e-12  # guard against exactly singular Hessians
        step = np.linalg.solve(H, np.concatenate([grad_theta, [grad_b]]))
        # backtracking damping on the penalized objective
        alpha = 1.0
        for _ in range(60):
            theta_new = theta - alpha * step[:D]
            b_new = b - alpha * step[D]
            obj_new = _penalized_nll(theta_new, b_new, X, y, l2)
            if obj_new <= obj + 1e-14:
                break
            alpha *= 0.5
        else:
            raise ConvergenceError("line search stalled; try a larger l2")
        theta, b, obj = theta_new, b_new, obj_new
        if trace is not None:
            trace.append(obj)
    hint = " (perfect separation? set l2 > 0)" if l2 == 0 else ""
    raise ConvergenceError(f"Newton did not reach tol={tol}{hint}")
