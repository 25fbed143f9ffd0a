"""Points, distance modes, clustering cost, and the sliding-window stream model.

Everything here is plain immutable data plus pure functions; the streaming
state machines in the sibling modules build on these primitives.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

Coords = tuple[float, ...]


class DistanceMode(Enum):
    """Distance used for clustering costs.

    EUCLIDEAN is the plain L2 metric (k-median). SQUARED_EUCLIDEAN is its
    square (k-means); it is not a metric but satisfies the 2-approximate
    triangle inequality, which is all the sliding-window machinery needs.
    """

    EUCLIDEAN = "euclid"
    SQUARED_EUCLIDEAN = "sqeuclid"

    @property
    def lam(self) -> float:
        """Triangle-inequality relaxation factor: 1 for L2, 2 for squared L2."""
        return 1.0 if self is DistanceMode.EUCLIDEAN else 2.0

    @classmethod
    def parse(cls, name: str) -> "DistanceMode":
        for mode in cls:
            if mode.value == name:
                return mode
        raise ValueError(f"unknown distance mode {name!r} (use euclid|sqeuclid)")


@dataclass(frozen=True)
class Point:
    """A stream element: id, coordinates, and 1-based arrival time."""

    id: int
    coords: Coords
    arrival: int

    def __post_init__(self):
        if self.arrival < 1:
            raise ValueError("arrival times are 1-based")
        if len(self.coords) < 1:
            raise ValueError("points need at least one coordinate")


@dataclass(frozen=True)
class WeightedPoint:
    """A point standing in for `weight` unit copies of itself."""

    point: Point
    weight: float

    def __post_init__(self):
        if not self.weight > 0:
            raise ValueError("weights must be positive")


@dataclass(frozen=True)
class CenterSet:
    """An ordered set of distinct center locations."""

    centers: tuple[Coords, ...]

    def __post_init__(self):
        if len(self.centers) < 1:
            raise ValueError("a center set needs at least one center")
        if len(set(self.centers)) != len(self.centers):
            raise ValueError("duplicate centers")

    def __len__(self) -> int:
        return len(self.centers)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.centers, dtype=float)


@dataclass(frozen=True)
class WindowStream:
    """Count-based sliding window: the active points are the last W arrivals."""

    W: int
    dimension: int
    N: int = 0

    def __post_init__(self):
        if self.W < 1:
            raise ValueError("window size must be >= 1")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def window_start(self) -> int:
        return max(1, self.N - self.W + 1)

    def advanced(self) -> "WindowStream":
        return WindowStream(self.W, self.dimension, self.N + 1)

    def is_active(self, arrival: int) -> bool:
        return self.window_start <= arrival <= self.N

    def is_expired(self, arrival: int) -> bool:
        return arrival < self.window_start


def _check_dims(p: Sequence[float], q: Sequence[float]) -> None:
    if len(p) != len(q):
        raise ValueError(f"dimension mismatch: {len(p)} vs {len(q)}")


def dist(p: Sequence[float], q: Sequence[float], mode: DistanceMode) -> float:
    """Distance between two coordinate vectors under the given mode."""
    _check_dims(p, q)
    d2 = 0.0
    for a, b in zip(p, q):
        d2 += (a - b) * (a - b)
    if mode is DistanceMode.SQUARED_EUCLIDEAN:
        return d2
    return d2 ** 0.5


def dist_matrix(points: np.ndarray, centers: np.ndarray, mode: DistanceMode) -> np.ndarray:
    """Pairwise mode-distances, shape (len(points), len(centers))."""
    if points.ndim != 2 or centers.ndim != 2 or points.shape[1] != centers.shape[1]:
        raise ValueError("dimension mismatch")
    diff = points[:, None, :] - centers[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    if mode is DistanceMode.SQUARED_EUCLIDEAN:
        return d2
    return np.sqrt(d2)


def coords_of(points: Iterable[Point | WeightedPoint]) -> np.ndarray:
    """Coordinate matrix of a point sequence (weighted or not)."""
    rows = []
    for p in points:
        rows.append(p.point.coords if isinstance(p, WeightedPoint) else p.coords)
    return np.asarray(rows, dtype=float).reshape(len(rows), -1)


def weights_of(points: Sequence[Point | WeightedPoint]) -> np.ndarray:
    return np.asarray(
        [p.weight if isinstance(p, WeightedPoint) else 1.0 for p in points], dtype=float
    )


def cost(
    points: Sequence[Point | WeightedPoint], centers: CenterSet, mode: DistanceMode
) -> float:
    """Weighted clustering cost: sum of each point's distance to its nearest center."""
    if len(centers) == 0:
        raise ValueError("empty center set")
    if not points:
        return 0.0
    pts = coords_of(points)
    if pts.shape[1] != len(centers.centers[0]):
        raise ValueError("dimension mismatch between points and centers")
    dmat = dist_matrix(pts, centers.as_array(), mode)
    return float(weights_of(points) @ dmat.min(axis=1))


@dataclass(frozen=True)
class ClusteringAssignment:
    """Nearest-center assignment: per-point center index plus per-center counts."""

    labels: tuple[int, ...]
    counts: tuple[int, ...]


def assign(
    points: Sequence[Point | WeightedPoint], centers: CenterSet, mode: DistanceMode
) -> ClusteringAssignment:
    """Assign each point to its nearest center; ties go to the lowest index."""
    if not points:
        raise ValueError("no points to assign")
    pts = coords_of(points)
    dmat = dist_matrix(pts, centers.as_array(), mode)
    labels = dmat.argmin(axis=1)  # argmin takes the first minimum: lowest index
    counts = np.bincount(labels, minlength=len(centers))
    return ClusteringAssignment(tuple(int(x) for x in labels), tuple(int(c) for c in counts))


def load_points_csv(path: str | Path) -> list[Point]:
    """Read a point stream from CSV, one `x1,...,xd` row per point.

    Arrival order is line order (1-based). A header line is detected by a
    non-numeric first field and skipped.
    """
    out: list[Point] = []
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            fields = [f.strip() for f in line.split(",")]
            if not out and dim is None:
                try:
                    float(fields[0])
                except ValueError:
                    continue  # header
            try:
                coords = tuple(float(f) for f in fields)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad point row: {exc}") from exc
            if dim is None:
                dim = len(coords)
            elif len(coords) != dim:
                raise ValueError(
                    f"{path}:{lineno}: expected {dim} coordinates, got {len(coords)}"
                )
            out.append(Point(id=len(out) + 1, coords=coords, arrival=len(out) + 1))
    return out
