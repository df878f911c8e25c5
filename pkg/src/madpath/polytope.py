"""Half-space descriptions of Voronoi cells with frozen coordinates.

A point belongs to cell k when it is (weighted-)closer to center k than
to every other center. Expanding the squared distances and freezing the
non-accessible coordinates at the query point leaves, per rival cell k',
one affine inequality in the accessible coordinates:

    sum_{i in acc} 2 w_i (S_ik' - S_ik) u_i
        <= sum_{i in acc} w_i (S_ik'^2 - S_ik^2) + c_na(k') - c_na(k),

with c_na(j) the frozen-coordinate part of the distance to center j.
The same half-spaces can be written through unit normals between scaled
centers and a boundary midpoint; that rendering is kept alongside for
cross-checking (including a known sign variant of the midpoint that
places it past the first center instead of between the centers).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, SchemaError
from .espa import EspaModel


@dataclass(frozen=True)
class CellPolytope:
    """A (K-1)-row system  A u <= b  over the accessible coordinates."""

    A: np.ndarray                 # (K-1, |accessible|)
    b: np.ndarray                 # (K-1,)
    target_cell: int
    row_cells: tuple[int, ...]    # rival cell index per row
    accessible: tuple[int, ...]

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).ravel()
        if A.shape[0] != b.shape[0] or A.shape[0] != len(self.row_cells):
            raise DimensionMismatchError("row counts disagree")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise SchemaError("polytope rows must be finite")
        A.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    def contains(self, u, tol: float = 1e-9) -> bool:
        u = np.asarray(u, dtype=float)
        if self.A.shape[0] == 0:
            return True
        return bool(np.all(self.A @ u <= self.b + tol))


def _split_coords(n_features: int, accessible) -> tuple[np.ndarray, np.ndarray]:
    acc = np.asarray(sorted(accessible), dtype=int)
    if acc.size == 0:
        raise SchemaError("accessible set must be non-empty")
    if acc.min() < 0 or acc.max() >= n_features:
        raise SchemaError("accessible indices out of range")
    if len(set(acc.tolist())) != acc.size:
        raise SchemaError("accessible indices must be unique")
    mask = np.zeros(n_features, dtype=bool)
    mask[acc] = True
    return acc, np.flatnonzero(~mask)


def build_cell_polytope(model: EspaModel, x, target_cell: int,
                        accessible) -> CellPolytope:
    """Membership system of ``target_cell`` with frozen coordinates at x.

    Built in the expanded quadratic form above, which is exact for any
    accessible subset (no unit-vector normalization involved).
    """
    x = np.asarray(x, dtype=float)
    if x.shape[0] != model.n_features:
        raise DimensionMismatchError("query point has wrong dimension")
    if not 0 <= target_cell < model.n_cells:
        raise SchemaError(f"no cell {target_cell}")
    acc, frozen = _split_coords(model.n_features, accessible)
    w = model.feature_weights
    S = model.centers
    k = target_cell
    rivals = [j for j in range(model.n_cells) if j != k]

    d_frozen = x[frozen, None] - S[frozen][:, rivals + [k]]
    c_na = (w[frozen, None] * d_frozen * d_frozen).sum(axis=0)
    c_na_rivals, c_na_k = c_na[:-1], c_na[-1]

    Sa = S[acc]                                  # (|acc|, K)
    wa = w[acc]
    A = (2.0 * wa[:, None] * (Sa[:, rivals] - Sa[:, [k]])).T
    b = ((wa[:, None] * (Sa[:, rivals] ** 2 - Sa[:, [k]] ** 2)).sum(axis=0)
         + c_na_rivals - c_na_k)
    return CellPolytope(A=A, b=b, target_cell=k, row_cells=tuple(rivals),
                        accessible=tuple(acc.tolist()))


def build_cell_polytope_unit(model: EspaModel, x, target_cell: int, accessible,
                             midpoint: str = "between") -> CellPolytope:
    """Same half-spaces via unit normals between scaled centers.

    Coordinates are scaled by sqrt(w); the normal between scaled centers
    k and k' is normalized; the offset comes from a midpoint on the
    scaled segment. ``midpoint="between"`` puts it halfway between the
    centers (the geometrically correct bisector). ``midpoint="beyond"``
    mirrors it past center k; that variant is retained only so tests can
    document how far it diverges from the correct set.
    """
    if midpoint not in ("between", "beyond"):
        raise SchemaError("midpoint must be 'between' or 'beyond'")
    x = np.asarray(x, dtype=float)
    if x.shape[0] != model.n_features:
        raise DimensionMismatchError("query point has wrong dimension")
    acc, frozen = _split_coords(model.n_features, accessible)
    w = model.feature_weights
    root_w = np.sqrt(w)
    S = model.centers
    k = target_cell
    rivals = [j for j in range(model.n_cells) if j != k]

    rows = []
    offs = []
    for j in rivals:
        diff = root_w * (S[:, k] - S[:, j])
        norm = float(np.linalg.norm(diff))
        if norm <= 0:
            # coincident scaled centers: no separating plane, vacuous row
            rows.append(np.zeros(acc.size))
            offs.append(0.0)
            continue
        v = diff / norm                              # unit normal toward k
        sign = -0.5 if midpoint == "between" else 0.5
        v_mid = root_w * S[:, k] + sign * diff
        # membership of k:  v . (sqrt(w) o u_full) >= v . v_mid
        # as  A u_acc <= b  with frozen coordinates moved to the offset
        rows.append(-(root_w[acc] * v[acc]))
        offs.append(-float(v @ v_mid)
                    + float((root_w[frozen] * v[frozen]) @ x[frozen]))
    return CellPolytope(A=np.array(rows), b=np.array(offs), target_cell=k,
                        row_cells=tuple(rivals), accessible=tuple(acc.tolist()))
