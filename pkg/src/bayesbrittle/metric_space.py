"""Finite metric spaces with ball and enlargement geometry."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, InvariantError

TRIANGLE_SLACK = 1e-9
# grid distances are snapped to this many decimals so that ties such as
# |0.35 - 0.15| == 0.2 are exact ties rather than off-by-one-ulp
GRID_DECIMALS = 12
MAX_GRID_POINTS = 512


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    labels: tuple
    dist: np.ndarray = field(repr=False)
    coords: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        d = np.ascontiguousarray(self.dist, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ConfigError("distance matrix must be square")
        if d.shape[0] != len(self.labels):
            raise ConfigError("labels and distance matrix disagree in size")
        if d.shape[0] == 0:
            raise ConfigError("metric space must be nonempty")
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)

    def __len__(self):
        return self.dist.shape[0]

    @property
    def size(self) -> int:
        return self.dist.shape[0]

    def check_metric(self, slack: float = TRIANGLE_SLACK) -> None:
        """Raise InvariantError unless the metric axioms hold (triangle within ``slack``)."""
        d = self.dist
        if np.any(d < 0) or np.any(np.diag(d) != 0):
            raise InvariantError("distances must be nonnegative with zero diagonal")
        if not np.array_equal(d, d.T):
            raise InvariantError("distance matrix is not symmetric")
        # d[i,k] <= min_j d[i,j] + d[j,k]
        for j in range(d.shape[0]):
            via = d[:, j:j + 1] + d[j:j + 1, :]
            if np.any(d > via + slack):
                raise InvariantError("triangle inequality violated beyond slack")

    def index_of(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ConfigError(f"unknown point {label!r}") from None


def build_grid_space(coords, labels: Sequence | None = None, max_points: int | None = MAX_GRID_POINTS) -> FiniteMetricSpace:
    """Euclidean metric space on a list of points (scalars or equal-length vectors)."""
    try:
        pts = np.asarray(coords, dtype=np.float64)
    except ValueError:
        raise ConfigError("all points must have the same dimension") from None
    if pts.size == 0:
        raise ConfigError("grid needs at least one point")
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ConfigError("all points must have the same dimension")
    if max_points is not None and pts.shape[0] > max_points:
        raise ConfigError(f"grid has {pts.shape[0]} points; cap is {max_points}")
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.round(np.sqrt(np.sum(diff * diff, axis=-1)), GRID_DECIMALS)
    if labels is None:
        labels = tuple(float(p[0]) if pts.shape[1] == 1 else tuple(float(v) for v in p) for p in pts)
    return FiniteMetricSpace(tuple(labels), dist, coords=pts)


def index_set(space: FiniteMetricSpace, members: Iterable[int]) -> np.ndarray:
    """Validate indices and return them as a sorted, duplicate-free int array."""
    idx = np.asarray(list(members), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= space.size):
        raise ConfigError("index out of range")
    if np.unique(idx).size != idx.size:
        raise ConfigError("duplicate indices in index set")
    return np.sort(idx)


def enlarge(space: FiniteMetricSpace, A, epsilon: float, open_ball: bool = True) -> np.ndarray:
    """Indices within distance ``epsilon`` of some member of ``A``.

    ``open_ball`` uses the strict ``d < epsilon`` convention, otherwise ``d <= epsilon``.
    """
    if epsilon < 0:
        raise ConfigError("epsilon must be nonnegative")
    A = index_set(space, A)
    if A.size == 0:
        return A
    rows = space.dist[A]
    hit = rows < epsilon if open_ball else rows <= epsilon
    return np.flatnonzero(hit.any(axis=0))


def open_ball(space: FiniteMetricSpace, center: int, radius: float) -> np.ndarray:
    return np.flatnonzero(space.dist[center] < radius)


def diameter(space: FiniteMetricSpace) -> float:
    return float(space.dist.max())
