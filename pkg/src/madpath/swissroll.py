"""Two-spiral benchmark generator.

Two intertwined spirals (one per class) with a configurable number of
full turns, optional isotropic Gaussian jitter, and optional
non-informative dimensions drawn uniformly from [-1, 1]. The radius
grows linearly from 0.1 to 1.0 along the spiral, so the arms never
collapse into the origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CONTINUOUS, Dataset
from .errors import SchemaError


@dataclass(frozen=True)
class SwissRollSpec:
    n_points: int
    turns: int = 2
    noise_sigma: float = 0.0
    extra_dims: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.n_points < 8:
            raise SchemaError("need at least 8 points")
        if self.turns < 1:
            raise SchemaError("turns must be >= 1")
        if self.noise_sigma < 0 or self.extra_dims < 0:
            raise SchemaError("noise_sigma and extra_dims must be >= 0")


def gen_swiss_roll(spec: SwissRollSpec) -> Dataset:
    """Deterministic in the seed; classes balanced within one point."""
    rng = np.random.default_rng(spec.seed)
    n0 = spec.n_points // 2
    sizes = (n0, spec.n_points - n0)
    t_max = 2.0 * np.pi * spec.turns
    xs, ys = [], []
    for cls, size in enumerate(sizes):
        t = rng.uniform(0.0, t_max, size=size)
        r = 0.1 + 0.9 * t / t_max
        angle = t + cls * np.pi
        pts = np.column_stack([r * np.cos(angle), r * np.sin(angle)])
        if spec.noise_sigma > 0:
            pts += rng.normal(scale=spec.noise_sigma, size=pts.shape)
        xs.append(pts)
        ys.append(np.full(size, cls, dtype=np.int64))
    X = np.vstack(xs)
    y = np.concatenate(ys)
    if spec.extra_dims:
        U = rng.uniform(-1.0, 1.0, size=(spec.n_points, spec.extra_dims))
        X = np.hstack([X, U])
    perm = rng.permutation(spec.n_points)
    names = ["x1", "x2"] + [f"u{j + 1}" for j in range(spec.extra_dims)]
    return Dataset(features=X[perm], labels=y[perm],
                   column_names=tuple(names),
                   column_kinds=(CONTINUOUS,) * X.shape[1],
                   n_classes=2, label_name="spiral")
