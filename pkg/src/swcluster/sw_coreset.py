"""Sliding-window coreset maintenance over merge-and-reduce states.

One merge-and-reduce instance runs per kept index; a new index is opened for
every arrival and the pruning pass then deletes the indices whose removal
costs at most an eps fraction of every region's weight, measured through the
arrival tags carried by coreset points. Expiry keeps exactly one index at or
before the window start.
"""

from __future__ import annotations

import math

import numpy as np

from .core import DistanceMode, Point
from .coreset import CoresetWithPartition
from .merge_reduce import MergeReduceState

_REL_TOL = 1e-9


def region_interval_weight(
    coreset: CoresetWithPartition, region_id: str, a: int, b: int
) -> float:
    """Summed weight of a region's coreset points with arrival in [a, b]."""
    if region_id not in {r.region_id for r in coreset.partition}:
        raise KeyError(f"unknown region {region_id!r}")
    if a > b:
        return 0.0
    return sum(
        p.weight for p in coreset.points if p.region_id == region_id and a <= p.arrival <= b
    )


class _IndexState:
    """One kept index: its arrival time, its summarizing state, and test caches."""

    __slots__ = ("x", "mr", "_cache_key", "_arrivals", "_weights", "_region_idx", "_counts")

    def __init__(self, x: int, mr: MergeReduceState):
        self.x = x
        self.mr = mr
        self._cache_key = -1

    def coreset(self) -> CoresetWithPartition:
        return self.mr.coreset()

    def _refresh(self) -> None:
        if self._cache_key == self.mr.inserted:
            return
        cs = self.mr.coreset()
        pos = {r.region_id: t for t, r in enumerate(cs.partition)}
        self._arrivals = np.asarray([p.arrival for p in cs.points], dtype=int)
        self._weights = np.asarray([p.weight for p in cs.points], dtype=float)
        self._region_idx = np.asarray([pos[p.region_id] for p in cs.points], dtype=int)
        self._counts = np.asarray([r.count for r in cs.partition], dtype=float)
        self._cache_key = self.mr.inserted

    def interval_region_weights(self, a: int, b: int) -> tuple[np.ndarray, np.ndarray]:
        """(per-region weight inside [a, b], per-region total weight)."""
        self._refresh()
        mask = (self._arrivals >= a) & (self._arrivals <= b)
        sums = np.bincount(
            self._region_idx[mask], weights=self._weights[mask], minlength=len(self._counts)
        )
        return sums, self._counts


class SwCoresetState:
    """Single-writer sliding-window coreset state (insert, then query)."""

    def __init__(
        self,
        W: int,
        eps: float,
        k: int,
        technique: str,
        seed: int,
        n_max: int,
        mode: DistanceMode = DistanceMode.EUCLIDEAN,
        leaf_capacity: int | None = None,
        delta: float = 0.1,
        c_vc: float = 1.0,
        existential_drop_test: bool = False,
        drop_test_endpoint: str = "older",
    ):
        if W < 1:
            raise ValueError("window size must be >= 1")
        if drop_test_endpoint not in ("older", "younger"):
            raise ValueError("drop_test_endpoint must be 'older' or 'younger'")
        self.W = W
        self.eps = eps
        self.k = k
        self.technique = technique
        self.seed = seed
        self.n_max = n_max
        self.mode = mode
        self.leaf_capacity = leaf_capacity
        self.delta = delta
        self.c_vc = c_vc
        self.existential_drop_test = existential_drop_test
        self.drop_test_endpoint = drop_test_endpoint
        self.N = 0
        self.index_states: list[_IndexState] = []

    def indices(self) -> list[int]:
        return [s.x for s in self.index_states]

    @property
    def index_count(self) -> int:
        return len(self.index_states)

    def _fresh_state(self, x: int) -> MergeReduceState:
        return MergeReduceState(
            k=self.k,
            eps=self.eps,
            technique=self.technique,
            n_max=self.n_max,
            seed=self.seed + 31 * x,
            mode=self.mode,
            leaf_capacity=self.leaf_capacity,
            delta=self.delta,
            c_vc=self.c_vc,
        )

    def drop_test(self, pos_i: int, pos_j: int) -> bool:
        """May the indices strictly between positions i and j be discarded?

        True when every region of the tested endpoint's partition holds at
        most an eps fraction of its weight inside [x_i, x_j] (the existential
        variant only asks for one such region). The tested endpoint defaults
        to the older index: its tree spans the interval, so region interval
        weights measure exactly the weight a prune would strand between the
        kept endpoints. The younger-endpoint variant only ever sees the
        younger tree's first arrival and certifies nothing useful; it is
        retained for experimentation.
        """
        xi = self.index_states[pos_i].x
        xj = self.index_states[pos_j].x
        tested = pos_i if self.drop_test_endpoint == "older" else pos_j
        sums, counts = self.index_states[tested].interval_region_weights(xi, xj)
        ok = sums <= self.eps * counts + _REL_TOL * np.maximum(counts, 1.0)
        if self.existential_drop_test:
            return bool(ok.any())
        return bool(ok.all())

    def insert(self, p: Point) -> "SwCoresetState":
        if p.arrival != self.N + 1:
            raise ValueError(f"expected arrival {self.N + 1}, got {p.arrival}")
        self.N += 1
        for st in self.index_states:
            st.mr.insert(p)
        fresh = self._fresh_state(self.N)
        fresh.insert(p)
        self.index_states.append(_IndexState(self.N, fresh))
        self._prune()
        self._expire()
        return self

    def _prune(self) -> None:
        pos = 0
        while pos < len(self.index_states) - 2:
            found = None
            for jpos in range(len(self.index_states) - 1, pos, -1):
                if self.drop_test(pos, jpos):
                    found = jpos
                    break
            if found is not None and found > pos + 1:
                del self.index_states[pos + 1 : found]
            pos += 1

    def _expire(self) -> None:
        boundary = self.N - self.W + 1
        last_expired = None
        for pos, st in enumerate(self.index_states):
            if st.x < boundary:
                last_expired = pos
        if last_expired is not None and last_expired > 0:
            del self.index_states[:last_expired]

    def query(self) -> CoresetWithPartition:
        """Coreset of the suffix covering the current window (the oldest index)."""
        if not self.index_states:
            raise ValueError("no points inserted yet")
        return self.index_states[0].coreset()

    def sandwich_ok(self) -> bool:
        if not self.index_states or self.N < self.W:
            return True
        boundary = self.N - self.W + 1
        if self.index_states[0].x > boundary:
            return False
        if len(self.index_states) >= 2 and self.index_states[1].x < boundary:
            return False
        return True

    def index_bound(self, c_idx: float = 4.0) -> float:
        """Soft cap on the index count in terms of the measured coreset size."""
        s = max(1, len(self.index_states[0].coreset().points)) if self.index_states else 1
        return c_idx * s * self.eps**-2 * math.log2(max(self.N, 2))


def swc_insert(state: SwCoresetState, p: Point) -> SwCoresetState:
    return state.insert(p)


def swc_query(state: SwCoresetState) -> CoresetWithPartition:
    return state.query()
