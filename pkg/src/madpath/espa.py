"""Voronoi-cell entropic classifier: training and prediction.

The model discretizes feature space into ``n_cells`` Voronoi cells under
a learned diagonal metric (simplex feature weights), attaches a
column-stochastic matrix of class probabilities to the cells, and
predicts the column of the nearest cell. Training minimizes a three-term
functional -- weighted discretization error, entropic weight
regularization, and the cross-entropy between true labels and cell
class probabilities -- by cycling exact block updates, so the loss is
non-increasing by construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, SplitSpec
from .errors import (
    DimensionMismatchError,
    InfeasibleCellCountError,
    NumericError,
    SchemaError,
)
from .metrics import auc

PROB_FLOOR = 1e-8  # clamp for cell class probabilities before any log


@dataclass(frozen=True)
class EspaHyperparams:
    """Scalar knobs of the entropic classifier.

    n_cells: Voronoi cell count (>= 1; >= 2 for a non-trivial partition).
    entropy_reg: weight of the feature-weight entropy term (> 0).
    class_reg: weight of the label cross-entropy term (> 0).
    """

    n_cells: int
    entropy_reg: float
    class_reg: float
    max_iters: int = 200
    tol: float = 1e-9
    n_restarts: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_cells < 1:
            raise SchemaError("n_cells must be >= 1")
        if self.entropy_reg <= 0 or self.class_reg <= 0:
            raise SchemaError("regularization weights must be positive")
        if self.max_iters < 1 or self.n_restarts < 1:
            raise SchemaError("max_iters and n_restarts must be positive")


@dataclass(frozen=True)
class EspaModel:
    """Trained cell classifier.

    feature_weights: (D,) simplex weights defining the metric.
    centers: (D, K) cell centers, one column per cell.
    cell_class_probs: (M, K) column-stochastic class probabilities.
    """

    feature_weights: np.ndarray
    centers: np.ndarray
    cell_class_probs: np.ndarray
    hyper: EspaHyperparams
    standardizer: object | None = None
    column_names: tuple[str, ...] | None = None

    def __post_init__(self):
        w = np.asarray(self.feature_weights, dtype=float)
        s = np.asarray(self.centers, dtype=float)
        lam = np.asarray(self.cell_class_probs, dtype=float)
        if s.ndim != 2 or w.ndim != 1 or lam.ndim != 2:
            raise DimensionMismatchError("bad model array ranks")
        if s.shape[0] != w.shape[0] or s.shape[1] != lam.shape[1]:
            raise DimensionMismatchError("model array shapes disagree")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-10:
            raise SchemaError("feature weights must be on the simplex")
        colsums = lam.sum(axis=0)
        if np.any(lam < 0) or np.any(np.abs(colsums - 1.0) > 1e-10):
            raise SchemaError("class probability columns must be stochastic")
        for a in (w, s, lam):
            a.flags.writeable = False
        object.__setattr__(self, "feature_weights", w)
        object.__setattr__(self, "centers", s)
        object.__setattr__(self, "cell_class_probs", lam)

    @property
    def n_features(self) -> int:
        return self.centers.shape[0]

    @property
    def n_cells(self) -> int:
        return self.centers.shape[1]

    @property
    def n_classes(self) -> int:
        return self.cell_class_probs.shape[0]


@dataclass
class TrainState:
    """Transient training state: hard cell assignments and the loss trace."""

    assignments: np.ndarray          # (T,) int, cell index per training point
    loss_history: list[float] = field(default_factory=list)


def _check_x(model: EspaModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.n_features:
        raise DimensionMismatchError(
            f"point has {x.shape[-1]} features, model expects {model.n_features}")
    return x


def _sqdist_to_centers(X: np.ndarray, centers: np.ndarray, w: np.ndarray) -> np.ndarray:
    """(N, K) weighted squared distances; X is (N, D), centers (D, K)."""
    Xw = X * w                                # (N, D)
    cross = Xw @ centers                      # (N, K)
    x_term = (Xw * X).sum(axis=1)[:, None]    # (N, 1)
    c_term = (w[:, None] * centers * centers).sum(axis=0)[None, :]  # (1, K)
    d = x_term - 2.0 * cross + c_term
    np.maximum(d, 0.0, out=d)
    return d


def assign_cells(model: EspaModel, X: np.ndarray) -> np.ndarray:
    """Nearest-cell index for each row of X (ties to the lowest index)."""
    X = _check_x(model, np.atleast_2d(X))
    d = _sqdist_to_centers(X, model.centers, model.feature_weights)
    return np.argmin(d, axis=1)


def assign_cell(model: EspaModel, x) -> int:
    """Nearest cell of a single point."""
    return int(assign_cells(model, np.atleast_2d(x))[0])


def predict_proba(model: EspaModel, x) -> np.ndarray:
    """Class-probability vector(s): the nearest cell's column."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    k = assign_cells(model, np.atleast_2d(x))
    out = model.cell_class_probs[:, k].T      # (N, M)
    return out[0] if single else out


def predict_class_prob(model: EspaModel, X, label: int) -> np.ndarray:
    """P(class == label) for each row of X."""
    k = assign_cells(model, np.atleast_2d(X))
    return model.cell_class_probs[label, k]


def espa_loss(weights, centers, class_probs, assignments, X, Pi,
              entropy_reg, class_reg) -> float:
    """Training functional at a given configuration.

    X is (T, D), Pi is (M, T) one-hot labels, assignments is (T,) cell
    indices. Class probabilities are clamped to PROB_FLOOR before the
    log. Raises NumericError naming the term that went non-finite.
    """
    w = np.asarray(weights, dtype=float)
    T = X.shape[0]
    diff = X - centers[:, assignments].T
    discretization = float(np.dot(w, (diff * diff).sum(axis=0))) / T
    if not np.isfinite(discretization):
        raise NumericError("discretization term is not finite")
    wpos = w[w > 0]
    entropy = float(np.dot(wpos, np.log(wpos)))
    if not np.isfinite(entropy):
        raise NumericError("entropy term is not finite")
    log_lam = np.log(np.maximum(class_probs, PROB_FLOOR))
    cross = -float((Pi * log_lam[:, assignments]).sum()) / T
    if not np.isfinite(cross):
        raise NumericError("cross-entropy term is not finite")
    return discretization + entropy_reg * entropy + class_reg * cross


def update_assignments(weights, centers, class_probs, X, Pi, class_reg) -> np.ndarray:
    """Exact block minimizer over hard assignments (ties to lowest cell)."""
    d = _sqdist_to_centers(X, centers, np.asarray(weights, dtype=float))
    log_lam = np.log(np.maximum(class_probs, PROB_FLOOR))   # (M, K)
    cost = d - class_reg * (Pi.T @ log_lam)                 # (T, K)
    return np.argmin(cost, axis=1)


def update_centers(assignments, X, n_cells, current_centers, weights) -> np.ndarray:
    """Per-cell means; empty cells re-seed at the worst-fit training point.

    The weights cancel in the block minimization, so the update is
    independent of them; they only enter the re-seeding distance.
    """
    T, D = X.shape
    counts = np.bincount(assignments, minlength=n_cells).astype(float)
    sums = np.zeros((n_cells, D))
    np.add.at(sums, assignments, X)
    centers = current_centers.copy().T        # (K, D)
    occupied = counts > 0
    centers[occupied] = sums[occupied] / counts[occupied, None]
    empty = np.flatnonzero(~occupied)
    if empty.size:
        w = np.asarray(weights, dtype=float)
        diff = X - centers[assignments]
        dist = (diff * diff * w).sum(axis=1)
        order = np.argsort(dist)[::-1]
        for j, k in enumerate(empty):
            centers[k] = X[order[j % T]]
    return centers.T


def update_class_probs(assignments, Pi, n_cells) -> np.ndarray:
    """Per-cell label frequencies, clamped to the floor and renormalized.

    Unoccupied cells get the uniform column.
    """
    M, T = Pi.shape
    lam = np.zeros((M, n_cells))
    np.add.at(lam.T, assignments, Pi.T)
    totals = lam.sum(axis=0)
    occupied = totals > 0
    lam[:, occupied] /= totals[occupied]
    lam[:, ~occupied] = 1.0 / M
    lam = np.clip(lam, PROB_FLOOR, 1.0)
    lam /= lam.sum(axis=0)
    return lam


def update_weights(centers, assignments, X, entropy_reg) -> np.ndarray:
    """Closed-form entropic minimizer: w_d proportional to exp(-b_d/reg).

    b_d is the per-dimension mean squared discretization error; the
    exponent is max-shifted for numerical stability.
    """
    T = X.shape[0]
    diff = X - centers[:, assignments].T
    b = (diff * diff).sum(axis=0) / T
    z = -(b - b.min()) / entropy_reg
    w = np.exp(z)
    return w / w.sum()


def train(data: Dataset, hyper: EspaHyperparams) -> tuple[EspaModel, TrainState]:
    """Fit by cyclic exact block minimization, best of ``n_restarts`` by
    final training loss.

    The loss is recorded after every block update; each restart's trace
    is non-increasing up to floating-point noise. Cells left empty at
    convergence are pruned from the returned model.
    """
    X = data.features
    Pi = data.one_hot_labels()
    T, D = X.shape
    if T < hyper.n_cells:
        raise InfeasibleCellCountError(
            f"n_cells={hyper.n_cells} exceeds training rows T={T}")

    best = None
    for restart in range(hyper.n_restarts):
        rng = np.random.default_rng(hyper.seed + restart)
        entry = _replica(X, Pi, hyper, np.full(D, 1.0 / D), rng)
        if best is None or entry[0] < best[0]:
            best = entry
    loss, w, S, lam, state = best
    model = _finalize_model(w, S, lam, state, hyper, data.column_names)
    return model, state


def _converge(weights, centers, class_probs, X, Pi, hyper) -> tuple:
    """One monotone block-descent from the given configuration."""
    state = TrainState(assignments=np.zeros(X.shape[0], dtype=int))
    prev_cycle = np.inf
    gamma = state.assignments
    w, S, lam = weights, centers, class_probs
    for _ in range(hyper.max_iters):
        gamma = update_assignments(w, S, lam, X, Pi, hyper.class_reg)
        state.loss_history.append(
            espa_loss(w, S, lam, gamma, X, Pi, hyper.entropy_reg, hyper.class_reg))
        S = update_centers(gamma, X, S.shape[1], S, w)
        state.loss_history.append(
            espa_loss(w, S, lam, gamma, X, Pi, hyper.entropy_reg, hyper.class_reg))
        lam = update_class_probs(gamma, Pi, S.shape[1])
        state.loss_history.append(
            espa_loss(w, S, lam, gamma, X, Pi, hyper.entropy_reg, hyper.class_reg))
        w = update_weights(S, gamma, X, hyper.entropy_reg)
        loss = espa_loss(w, S, lam, gamma, X, Pi, hyper.entropy_reg, hyper.class_reg)
        state.loss_history.append(loss)
        if prev_cycle - loss < hyper.tol:
            break
        prev_cycle = loss
    state.assignments = gamma
    return loss, w, S, lam, state


def _seed_centers(X, K, metric_weights, rng) -> np.ndarray:
    """K distinct training points, spread k-means++ style in the metric."""
    T = X.shape[0]
    chosen = [int(rng.integers(T))]
    d2 = _sqdist_to_centers(X, X[chosen].T, metric_weights).ravel()
    for _ in range(K - 1):
        d2[chosen] = 0.0
        total = d2.sum()
        if total <= 0:
            remaining = np.setdiff1d(np.arange(T), chosen)
            chosen.append(int(rng.choice(remaining)))
        else:
            chosen.append(int(rng.choice(T, p=d2 / total)))
        d_new = _sqdist_to_centers(X, X[chosen[-1:]].T, metric_weights).ravel()
        d2 = np.minimum(d2, d_new)
    return X[chosen].T.copy()


def _replica(X, Pi, hyper, metric_weights, rng) -> tuple:
    """Seed in the given metric, assign, and descend to a fixed point."""
    S = _seed_centers(X, hyper.n_cells, metric_weights, rng)
    gamma = np.argmin(_sqdist_to_centers(X, S, metric_weights), axis=1)
    lam = update_class_probs(gamma, Pi, hyper.n_cells)
    return _converge(metric_weights, S, lam, X, Pi, hyper)


def _replica_stratified(X, Pi, hyper, metric_weights, rng) -> tuple:
    """Class-stratified seeding: cells are allotted to classes in
    proportion to class frequency and seeded within each class's points,
    so the first descent starts from label-coherent cells."""
    T, D = X.shape
    K = hyper.n_cells
    labels = np.argmax(Pi, axis=0)
    classes, counts = np.unique(labels, return_counts=True)
    alloc = np.maximum(1, np.round(K * counts / T).astype(int))
    while alloc.sum() > K:
        alloc[np.argmax(alloc)] -= 1
    while alloc.sum() < K:
        alloc[np.argmax(counts - alloc)] += 1
    blocks = []
    for cls, Kc in zip(classes, alloc):
        pts = X[labels == cls]
        Kc = min(Kc, pts.shape[0])
        blocks.append(_seed_centers(pts, Kc, metric_weights, rng))
    S = np.hstack(blocks)
    gamma = np.argmin(_sqdist_to_centers(X, S, metric_weights), axis=1)
    lam = update_class_probs(gamma, Pi, S.shape[1])
    return _converge(metric_weights, S, lam, X, Pi, hyper)


def _finalize_model(w, S, lam, state, hyper, column_names) -> "EspaModel":
    counts = np.bincount(state.assignments, minlength=S.shape[1])
    keep = np.flatnonzero(counts > 0)
    if keep.size < S.shape[1]:
        remap = -np.ones(S.shape[1], dtype=int)
        remap[keep] = np.arange(keep.size)
        S = S[:, keep]
        lam = lam[:, keep]
        state.assignments = remap[state.assignments]
    return EspaModel(feature_weights=w, centers=S, cell_class_probs=lam,
                     hyper=hyper, column_names=column_names)


def train_annealed(data: Dataset, hyper: EspaHyperparams, *,
                   valid_data: Dataset | None = None, label: int = 1,
                   anneal_rounds: int = 2) -> tuple[EspaModel, TrainState]:
    """Training with metric-exclusion annealing between restarts.

    The coupled weight/center fixed point has many basins; a basin that
    compresses easy (often binary) columns can beat a predictive one on
    raw training loss. Each restart therefore spawns extra replicas that
    re-seed the centers with one currently-heavy feature muted, plus a
    fresh re-seed in the learned metric. Replicas are ranked by
    validation AUC when validation data is supplied (what the biomedical
    pipelines select on), by final training loss otherwise. Every
    replica is a single monotone descent; the returned TrainState is the
    winning replica's.
    """
    X = data.features
    Pi = data.one_hot_labels()
    T, D = X.shape
    if T < hyper.n_cells:
        raise InfeasibleCellCountError(
            f"n_cells={hyper.n_cells} exceeds training rows T={T}")

    def score(entry) -> tuple:
        loss, w, S, lam, state = entry
        if valid_data is None:
            return (-loss,)
        model = EspaModel(feature_weights=w, centers=S, cell_class_probs=lam,
                          hyper=hyper)
        proba = predict_proba(model, valid_data.features)
        try:
            return (auc(proba[:, label], valid_data.labels), -loss)
        except Exception:
            return (-np.inf, -loss)

    best = None
    best_score = None
    for restart in range(hyper.n_restarts):
        rng = np.random.default_rng(hyper.seed + restart)
        entry = _replica(X, Pi, hyper, np.full(D, 1.0 / D), rng)
        sc = score(entry)
        if best is None or sc > best_score:
            best, best_score = entry, sc
        entry = _replica_stratified(X, Pi, hyper, np.full(D, 1.0 / D), rng)
        sc = score(entry)
        if sc > best_score:
            best, best_score = entry, sc
        for round_idx in range(anneal_rounds):
            improved = False
            w_cur = best[1]
            # mute each currently heavy feature in the seeding metric
            for d in np.argsort(w_cur)[::-1]:
                if w_cur[d] < 0.02:
                    break
                muted = w_cur.copy()
                muted[d] = 0.0
                if muted.sum() <= 1e-12:
                    continue
                cand = _replica(X, Pi, hyper, muted / muted.sum(), rng)
                sc = score(cand)
                if sc > best_score:
                    best, best_score = cand, sc
                    improved = True
            cand = _replica(X, Pi, hyper, best[1], rng)
            sc = score(cand)
            if sc > best_score:
                best, best_score = cand, sc
                improved = True
            if not improved:
                break

    loss, w, S, lam, state = best
    model = _finalize_model(w, S, lam, state, hyper, data.column_names)
    return model, state


@dataclass(frozen=True)
class HyperGrid:
    """Candidate lists for grid selection."""

    n_cells: tuple[int, ...] = (4, 8, 16, 32, 64)
    entropy_reg: tuple[float, ...] = (1e-3, 1e-2, 1e-1, 1.0)
    class_reg: tuple[float, ...] = (1e-2, 1e-1, 1.0, 10.0)

    def __post_init__(self):
        if not (self.n_cells and self.entropy_reg and self.class_reg):
            raise SchemaError("grid axes must be non-empty")


def select_hyperparams(data: Dataset, split_spec: SplitSpec, grid: HyperGrid,
                       *, label: int = 1, seed: int = 0, n_restarts: int = 2,
                       max_iters: int = 200, annealed: bool = True,
                       one_se_rule: bool = False) -> tuple[EspaHyperparams, list[dict]]:
    """Exhaustive grid evaluation by validation AUC.

    Ties break toward fewer cells, then larger entropy regularization.
    ``annealed`` switches the per-combo trainer to the basin-exploring
    variant ranked on the validation split; ``one_se_rule`` relaxes the
    argmax to the most regularized combo within one standard error of
    the best. Returns the winning hyperparameters plus the table.
    """
    train_data = data.subset(split_spec.train_idx)
    valid = data.subset(split_spec.valid_idx)
    rows = []
    hypers = []
    for K, e_reg, c_reg in itertools.product(grid.n_cells, grid.entropy_reg,
                                             grid.class_reg):
        if K > train_data.n_rows:
            continue
        hyper = EspaHyperparams(n_cells=K, entropy_reg=e_reg, class_reg=c_reg,
                                seed=seed, n_restarts=n_restarts,
                                max_iters=max_iters)
        if annealed:
            model, _ = train_annealed(train_data, hyper, valid_data=valid,
                                      label=label)
        else:
            model, _ = train(train_data, hyper)
        scores = predict_class_prob(model, valid.features, label)
        score = auc(scores, valid.labels)
        rows.append({"n_cells": K, "entropy_reg": e_reg, "class_reg": c_reg,
                     "valid_auc": score})
        hypers.append(hyper)
    if not hypers:
        raise InfeasibleCellCountError("no grid point fits the training size")
    best_auc = max(r["valid_auc"] for r in rows)
    if one_se_rule:
        # within one standard error of the best, prefer the most
        # regularized model (fewest cells, strongest entropy term):
        # guards the small-validation pick against the winner's curse
        n_eff = min(int((valid.labels == label).sum()),
                    int((valid.labels != label).sum()))
        tol = np.sqrt(best_auc * (1.0 - best_auc) / max(n_eff, 1))
    else:
        tol = 0.0
    candidates = [(h, r) for h, r in zip(hypers, rows)
                  if r["valid_auc"] >= best_auc - tol]
    best_hyper, _ = min(candidates,
                        key=lambda hr: (hr[0].n_cells, -hr[0].entropy_reg,
                                        -hr[1]["valid_auc"]))
    return best_hyper, rows
