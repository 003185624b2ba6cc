"""Weighted point sets, center sets and the (k, z)-clustering cost."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

# rows x centers per distance block; keeps the temporary matrix around 32 MB
_BLOCK = 4_000_000


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class WeightedPointSet:
    """Points in R^d with nonnegative weights.

    ``points`` has shape (n, d) and ``weights`` shape (n,).  Both arrays are
    read-only after construction.
    """

    points: np.ndarray
    weights: np.ndarray

    def __init__(self, points, weights=None, dim: int | None = None):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            # a flat sequence is a list of 1-d points
            pts = pts.reshape(-1, 1)
        if pts.size == 0:
            pts = pts.reshape(0, dim if dim is not None else (pts.shape[1] if pts.ndim == 2 else 1))
        if pts.ndim != 2:
            raise ValueError("points must be a 2-d array of shape (n, d)")
        if dim is not None and pts.shape[1] != dim:
            raise ValueError(f"expected dimension {dim}, got {pts.shape[1]}")
        if pts.shape[1] < 1:
            raise ValueError("dimension must be positive")
        if weights is None:
            w = np.ones(pts.shape[0])
        else:
            w = np.asarray(weights, dtype=float).reshape(-1)
        if w.shape[0] != pts.shape[0]:
            raise ValueError("weights and points differ in length")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(w)):
            raise ValueError("points and weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if pts.shape[0] > 0 and not w.sum() > 0:
            raise ValueError("total weight must be positive for a nonempty set")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def total_weight(self) -> float:
        return math.fsum(self.weights)

    def coords(self) -> np.ndarray:
        """The single coordinate column of a 1-d set."""
        if self.dim != 1:
            raise ValueError("coords() is only defined for 1-d point sets")
        return self.points[:, 0]

    def translated(self, t) -> "WeightedPointSet":
        return WeightedPointSet(self.points + np.asarray(t, dtype=float), self.weights)

    def scaled(self, factor: float) -> "WeightedPointSet":
        return WeightedPointSet(self.points * factor, self.weights)

    def reweighted(self, weights) -> "WeightedPointSet":
        return WeightedPointSet(self.points, weights)

    def __repr__(self) -> str:
        return f"WeightedPointSet(n={len(self)}, dim={self.dim}, total_weight={self.total_weight:.6g})"


@dataclass(frozen=True, eq=False)
class CenterSet:
    centers: np.ndarray

    def __init__(self, centers, dim: int | None = None):
        c = np.asarray(centers, dtype=float)
        if c.ndim == 0:
            c = c.reshape(1, 1)
        elif c.ndim == 1:
            c = c.reshape(-1, 1) if dim in (None, 1) else c.reshape(1, -1)
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValueError("a center set needs at least one center")
        if dim is not None and c.shape[1] != dim:
            raise ValueError(f"expected dimension {dim}, got {c.shape[1]}")
        if not np.all(np.isfinite(c)):
            raise ValueError("centers must be finite")
        object.__setattr__(self, "centers", _frozen(c))

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    @property
    def k(self) -> int:
        return self.centers.shape[0]

    def __len__(self) -> int:
        return self.k

    def __repr__(self) -> str:
        return f"CenterSet(k={self.k}, dim={self.dim})"


@dataclass(frozen=True)
class CostParams:
    z: float = 1.0

    def __post_init__(self):
        if not self.z >= 1:
            raise ValueError("z must be >= 1")


def _as_centers(C) -> CenterSet:
    return C if isinstance(C, CenterSet) else CenterSet(C)


def _check_dims(P: WeightedPointSet, C: CenterSet) -> None:
    if P.dim != C.dim:
        raise ValueError(f"dimension mismatch: points have d={P.dim}, centers d={C.dim}")


def _nearest(points: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of and distance to the nearest center (lowest index on ties)."""
    n, k = points.shape[0], centers.shape[0]
    idx = np.empty(n, dtype=np.int64)
    dist = np.empty(n)
    step = max(1, _BLOCK // max(k, 1))
    for s in range(0, n, step):
        block = points[s:s + step]
        diff = block[:, None, :] - centers[None, :, :]
        if diff.shape[2] == 1:
            D = np.abs(diff[:, :, 0])
        else:
            # scale by the largest coordinate so tiny distances do not underflow when squared
            m = np.abs(diff).max(axis=2)
            safe = np.where(m > 0, m, 1.0)
            u = diff / safe[:, :, None]
            D = m * np.sqrt(np.einsum("ijk,ijk->ij", u, u))
        j = np.argmin(D, axis=1)
        idx[s:s + step] = j
        dist[s:s + step] = D[np.arange(block.shape[0]), j]
    return idx, dist


def assign(P: WeightedPointSet, C) -> np.ndarray:
    """Nearest-center index for every point; ties go to the lowest index."""
    C = _as_centers(C)
    _check_dims(P, C)
    return _nearest(P.points, C.centers)[0]


def point_costs(P: WeightedPointSet, C, z: float = 1.0) -> np.ndarray:
    """Unweighted per-point ``min_c ||p - c||^z``."""
    C = _as_centers(C)
    _check_dims(P, C)
    _, dist = _nearest(P.points, C.centers)
    return dist if z == 1 else dist ** z


def cost(P: WeightedPointSet, C, params: CostParams | float = 1.0) -> float:
    """``sum_p w(p) * min_c ||p - c||^z`` with compensated summation."""
    z = params.z if isinstance(params, CostParams) else float(params)
    if z < 1:
        raise ValueError("z must be >= 1")
    if len(P) == 0:
        C = _as_centers(C)
        _check_dims(P, C)
        return 0.0
    return math.fsum(P.weights * point_costs(P, C, z))


def fast_cost(points: np.ndarray, weights: np.ndarray, centers: np.ndarray, z: float = 1.0) -> float:
    """Uncompensated cost on raw arrays, for inner loops of search routines."""
    _, dist = _nearest(points, centers)
    return float(weights @ (dist if z == 1 else dist ** z))


def relative_error(cost_p: float, cost_s: float) -> float:
    """``|cost_p - cost_s| / cost_p``; ``inf`` when only ``cost_p`` vanishes."""
    if cost_p < 0 or cost_s < 0:
        raise ValueError("costs must be nonnegative")
    if cost_p == 0:
        return 0.0 if cost_s == 0 else math.inf
    return abs(cost_p - cost_s) / cost_p


# -- CSV -------------------------------------------------------------------


def write_points_csv(path: str | Path, P: WeightedPointSet) -> None:
    header = [f"x{i}" for i in range(P.dim)] + ["w"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row, w in zip(P.points, P.weights):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(w))])


def read_points_csv(path: str | Path) -> WeightedPointSet:
    """Read the ``x0,...,x{d-1}[,w]`` format; a missing ``w`` column means unit weights."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file, expected a header row") from None
        has_w = bool(header) and header[-1] == "w"
        coord_cols = header[:-1] if has_w else header
        expected = [f"x{i}" for i in range(len(coord_cols))]
        if not coord_cols or coord_cols != expected:
            raise ValueError(f"{path}: header must be x0,...,x{{d-1}}[,w], got {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    d = len(coord_cols)
    arr = np.array(rows, dtype=float).reshape(-1, len(header))
    weights = arr[:, d] if has_w else None
    return WeightedPointSet(arr[:, :d], weights, dim=d)


def as_points(values: Sequence[float] | np.ndarray, weights=None) -> WeightedPointSet:
    """Shorthand for a 1-d weighted point set."""
    return WeightedPointSet(np.asarray(values, dtype=float).reshape(-1, 1), weights)
