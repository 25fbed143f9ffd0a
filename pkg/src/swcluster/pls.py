"""Insertion-only streaming k-median summarizer.

Maintains a weighted facility set S and a running cost estimate R via
Meyerson-style online facility location, restarted in phases with a doubling
cost lower bound. Snapshots are O(|S|) pure copies, which is what lets the
sliding-window structure store many of them cheaply.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import CenterSet, DistanceMode, Point, WeightedPoint, cost, dist_matrix
from .offline import local_search_kmedian


@dataclass(frozen=True)
class PlsParams:
    """Tuning constants; defaults follow the package-wide desk-scale profile."""

    c_phase: float = 4.0  # phase budget multiplier on the lower bound L
    c_pls: float = 8.0  # soft facility-count bound multiplier (monitored only)
    alpha: float = 64.0  # assumed summarizer approximation constant (reporting only)


@dataclass(frozen=True)
class Summary:
    """Immutable snapshot of a summarizer: facilities, cost estimate, and phase."""

    facilities: tuple[WeightedPoint, ...]
    R: float
    n_seen: int
    phase: int
    facility_cost: float

    @property
    def total_weight(self) -> float:
        return sum(f.weight for f in self.facilities)

    def distinct_coords(self) -> list[tuple[float, ...]]:
        seen = dict.fromkeys(f.point.coords for f in self.facilities)
        return list(seen)

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "facilities": [
                {
                    "coords": list(f.point.coords),
                    "weight": f.weight,
                    "arrival": f.point.arrival,
                    "id": f.point.id,
                }
                for f in self.facilities
            ],
            "R": self.R,
            "nSeen": self.n_seen,
            "phase": self.phase,
            "facilityCost": self.facility_cost,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "Summary":
        if data.get("version") != 1:
            raise ValueError("unsupported summary version")
        facs = tuple(
            WeightedPoint(
                Point(id=f["id"], coords=tuple(f["coords"]), arrival=f["arrival"]),
                f["weight"],
            )
            for f in data["facilities"]
        )
        return cls(facs, data["R"], data["nSeen"], data["phase"], data["facilityCost"])


class PlsState:
    """Single-writer streaming summarizer state.

    The update rule on a new point p: open a facility at p with probability
    min(1, d/f) where d is the distance to the nearest open facility, else
    assign p there (weight += 1, R += d). When the cost accumulated inside
    the current phase exceeds c_phase * L, the lower bound L doubles and the
    current facilities are re-fed through a fresh instance in random order.
    L starts as the distance between the first two distinct points.
    """

    def __init__(self, k: int, mode: DistanceMode, seed: int, params: PlsParams | None = None):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.mode = mode
        self.seed = seed
        self.params = params or PlsParams()
        self.rng = np.random.default_rng(seed)
        self.n_seen = 0
        self.R = 0.0
        self.phase = 0
        self.L: float | None = None
        self.facility_cost = 0.0
        self.phase_cost = 0.0
        self._coords: list[tuple[float, ...]] = []
        self._weights: list[float] = []
        self._points: list[Point] = []  # the point that opened each facility
        self._fac_matrix: np.ndarray | None = None

    # -- internals ---------------------------------------------------------

    def _matrix(self) -> np.ndarray:
        if self._fac_matrix is None:
            self._fac_matrix = np.asarray(self._coords, dtype=float)
        return self._fac_matrix

    def _open(self, p: Point, weight: float) -> None:
        self._coords.append(p.coords)
        self._weights.append(weight)
        self._points.append(p)
        self._fac_matrix = None

    def _nearest(self, coords: tuple[float, ...]) -> tuple[float, int]:
        pts = np.asarray([coords], dtype=float)
        d = dist_matrix(pts, self._matrix(), self.mode)[0]
        j = int(d.argmin())
        return float(d[j]), j

    def _recompute_facility_cost(self) -> None:
        assert self.L is not None
        self.facility_cost = self.L / (self.k * (1.0 + math.log2(self.n_seen + 2)))

    def _advance_phase(self) -> None:
        assert self.L is not None
        self.L *= 2.0
        self.phase += 1
        self._recompute_facility_cost()
        self.phase_cost = 0.0
        old = list(zip(self._points, self._weights))
        order = self.rng.permutation(len(old))
        self._coords, self._weights, self._points = [], [], []
        self._fac_matrix = None
        for idx in order:
            p, w = old[int(idx)]
            if not self._coords:
                self._open(p, w)
                self.phase_cost += self.facility_cost
                continue
            d, j = self._nearest(p.coords)
            if self.rng.random() < min(1.0, w * d / self.facility_cost):
                self._open(p, w)
                self.phase_cost += self.facility_cost
            else:
                self._weights[j] += w
                self.R += w * d
                self.phase_cost += w * d

    # -- public API ---------------------------------------------------------

    def insert(self, p: Point) -> "PlsState":
        if self._coords and len(p.coords) != len(self._coords[0]):
            raise ValueError("dimension mismatch")
        self.n_seen += 1
        if not self._coords:
            self._open(p, 1.0)
            return self
        d, j = self._nearest(p.coords)
        if self.L is None:
            if d == 0.0:
                self._weights[j] += 1.0
            else:
                # second distinct point: it seeds both the facility set and L
                self._open(p, 1.0)
                self.L = d
                self.phase = 1
                self._recompute_facility_cost()
                self.phase_cost = 0.0
            return self
        if self.rng.random() < min(1.0, d / self.facility_cost):
            self._open(p, 1.0)
            self.phase_cost += self.facility_cost
        else:
            self._weights[j] += 1.0
            self.R += d
            self.phase_cost += d
        guard = 0
        while self.phase_cost > self.params.c_phase * self.L:
            self._advance_phase()
            guard += 1
            if guard > 200:  # doubling L always terminates well before this
                raise RuntimeError("phase advancement failed to settle")
        return self

    def snapshot(self) -> Summary:
        facs = tuple(
            WeightedPoint(p, w) for p, w in zip(self._points, self._weights)
        )
        return Summary(
            facilities=facs,
            R=self.R,
            n_seen=self.n_seen,
            phase=self.phase,
            facility_cost=self.facility_cost,
        )

    @property
    def facility_count(self) -> int:
        return len(self._coords)

    def soft_size_bound(self) -> float:
        """Monitored facility-count bound; exceeding it is reported, not fatal."""
        return self.params.c_pls * self.k * math.log2(self.n_seen + 2) ** 2


def pls_new(k: int, mode: DistanceMode, seed: int, params: PlsParams | None = None) -> PlsState:
    return PlsState(k, mode, seed, params)


def pls_insert(state: PlsState, p: Point) -> PlsState:
    return state.insert(p)


def pls_snapshot(state: PlsState) -> Summary:
    return state.snapshot()


def summary_kcenters(
    summary: Summary, k: int, mode: DistanceMode, seed: int, starts: int = 3
) -> tuple[CenterSet, float]:
    """Reduce a summary to k centers plus a window-cost estimate.

    Runs local search over the weighted facilities; with fewer than k distinct
    facilities every facility becomes a center. The estimate is the summary's
    accumulated R plus the facilities' own clustering cost against the centers.
    """
    if not summary.facilities:
        raise ValueError("empty summary")
    distinct = summary.distinct_coords()
    if len(distinct) <= k:
        centers = CenterSet(tuple(distinct))
    else:
        centers = local_search_kmedian(list(summary.facilities), k, mode, seed, starts=starts)
    est = summary.R + cost(list(summary.facilities), centers, mode)
    return centers, est
