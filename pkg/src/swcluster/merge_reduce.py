"""Insertion-only streaming coreset maintenance via a merge-and-reduce ladder.

Two leaf buffers hold raw points; whenever both buckets of a level fill, their
union is reduced to one coreset at the next level with per-level accuracy
eps / (2 log2 n_max), so the compounded error over the whole tree stays eps.
"""

from __future__ import annotations

import math

from .core import DistanceMode, Point, WeightedPoint
from .coreset import (
    CoresetPoint,
    CoresetWithPartition,
    Region,
    RegionKind,
    default_budget_fn,
    eps_sample_size,
    partition_for,
    unified_sample,
)

LEAF_CAPACITY_CLAMP = 64


def default_leaf_capacity(k: int, dimension: int, eps_level: float, delta: float) -> int:
    """Leaves big enough to be meaningful but still desk-scale."""
    vc = eps_sample_size(2 * dimension, min(0.999, eps_level), delta, float("inf"))
    return max(2 * k + 2, min(LEAF_CAPACITY_CLAMP, vc))


class MergeReduceState:
    """Single-writer merge-and-reduce state over a stream of known maximum length."""

    def __init__(
        self,
        k: int,
        eps: float,
        technique: str,
        n_max: int,
        seed: int,
        mode: DistanceMode = DistanceMode.EUCLIDEAN,
        leaf_capacity: int | None = None,
        delta: float = 0.1,
        c_vc: float = 1.0,
    ):
        if n_max < 2:
            raise ValueError("n_max must be >= 2")
        if not 0 < eps <= 1:
            raise ValueError("eps must be in (0,1]")
        self.k = k
        self.eps = eps
        self.technique = technique
        self.n_max = n_max
        self.seed = seed
        self.mode = mode
        self.delta = delta
        self.c_vc = c_vc
        self.eps_level = eps / (2.0 * math.log2(n_max))
        self.delta_level = delta / n_max
        self.leaf_capacity = leaf_capacity
        self.inserted = 0
        self.leaves: list[list[Point]] = [[], []]
        # level -> [bucket, bucket]; leaves are level 1, reductions start at 2
        self.levels: dict[int, list[CoresetWithPartition | None]] = {}
        self._reductions = 0
        self._cache: tuple[int, CoresetWithPartition] | None = None

    def _ensure_leaf_capacity(self, dimension: int) -> None:
        if self.leaf_capacity is None:
            self.leaf_capacity = default_leaf_capacity(
                self.k, dimension, self.eps_level, self.delta
            )

    def _reduce(self, points: list[WeightedPoint]) -> CoresetWithPartition:
        self._reductions += 1
        seed = self.seed + 104729 * self._reductions
        partition = partition_for(self.technique, points, self.k, self.eps_level, self.mode, seed)
        budget_fn = default_budget_fn(
            self.technique, partition.total_weight, partition.dimension,
            self.k, self.eps_level, self.delta_level,
        )
        return unified_sample(
            points, partition, self.eps_level, self.delta_level, budget_fn, seed + 1,
            c_vc=self.c_vc, n_total=float(self.n_max),
        )

    @staticmethod
    def _as_weighted(bucket: CoresetWithPartition) -> list[WeightedPoint]:
        return [
            WeightedPoint(Point(id=i + 1, coords=cp.coords, arrival=cp.arrival), cp.weight)
            for i, cp in enumerate(bucket.points)
        ]

    def insert(self, p: Point) -> "MergeReduceState":
        if self.inserted >= self.n_max:
            raise ValueError(f"stream capacity n_max={self.n_max} exceeded")
        self._ensure_leaf_capacity(len(p.coords))
        self.inserted += 1
        self._cache = None
        if len(self.leaves[0]) < self.leaf_capacity:
            self.leaves[0].append(p)
        else:
            self.leaves[1].append(p)
        if len(self.leaves[0]) == self.leaf_capacity and len(self.leaves[1]) == self.leaf_capacity:
            union = [WeightedPoint(q, 1.0) for q in self.leaves[0] + self.leaves[1]]
            z = self._reduce(union)
            self.leaves = [[], []]
            self._place(2, z)
        return self

    def _place(self, level: int, bucket: CoresetWithPartition) -> None:
        while True:
            slots = self.levels.setdefault(level, [None, None])
            if slots[0] is None:
                slots[0] = bucket
                return
            if slots[1] is not None:
                raise AssertionError("level already holds two buckets")
            slots[1] = bucket
            # both occupied: reduce upward and cascade
            union = self._as_weighted(slots[0]) + self._as_weighted(slots[1])
            bucket = self._reduce(union)
            self.levels[level] = [None, None]
            level += 1

    @property
    def represented_weight(self) -> float:
        total = float(len(self.leaves[0]) + len(self.leaves[1]))
        for slots in self.levels.values():
            for b in slots:
                if b is not None:
                    total += b.total_weight
        return total

    @property
    def bucket_count(self) -> int:
        n = sum(1 for buf in self.leaves if buf)
        n += sum(1 for slots in self.levels.values() for b in slots if b is not None)
        return n

    def coreset(self) -> CoresetWithPartition:
        """Union of every occupied bucket, region ids namespaced by level and slot."""
        if self.inserted == 0:
            raise ValueError("no points inserted yet")
        if self._cache is not None and self._cache[0] == self.inserted:
            return self._cache[1]
        points: list[CoresetPoint] = []
        regions: list[Region] = []
        for slot, buf in enumerate(self.leaves):
            if not buf:
                continue
            rid = f"L1.{slot}"
            regions.append(Region(rid, RegionKind.LEAF_BLOCK, 0, 1, None, float(len(buf))))
            for p in buf:
                points.append(CoresetPoint(p.coords, 1.0, rid, p.arrival))
        for level in sorted(self.levels):
            for slot, bucket in enumerate(self.levels[level]):
                if bucket is None:
                    continue
                prefix = f"L{level}.{slot}:"
                for r in bucket.partition:
                    if r.count > 0:
                        regions.append(
                            Region(prefix + r.region_id, r.kind, r.center_index, r.level,
                                   r.cell, r.count)
                        )
                for cp in bucket.points:
                    points.append(
                        CoresetPoint(cp.coords, cp.weight, prefix + cp.region_id, cp.arrival)
                    )
        result = CoresetWithPartition(points=points, partition=regions, eps=self.eps, k=self.k)
        self._cache = (self.inserted, result)
        return result


def mr_insert(state: MergeReduceState, p: Point) -> MergeReduceState:
    return state.insert(p)


def mr_coreset(state: MergeReduceState) -> CoresetWithPartition:
    return state.coreset()
