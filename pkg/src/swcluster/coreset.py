"""Partition-based coresets for Euclidean k-median/k-means.

Two partition builders (exponential grids around approximate centers, and
concentric rings), a unified per-region sampler that turns any such partition
into a weighted coreset, and the measurement helpers the test suites use:
epsilon-sample sizing, relative cost error, and per-region perturbation slack.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .core import (
    CenterSet,
    DistanceMode,
    Point,
    WeightedPoint,
    cost,
    dist_matrix,
)
from .offline import local_search_kmedian

HPM_MAX_DIMENSION = 4  # grid region count is eps^(-d); keep d small
ALPHA_OFFLINE = 5.0  # assumed local-search approximation ratio for ball radii
RING_VC_CONSTANT = 2.0


class RegionKind(Enum):
    GRID_CELL = "grid_cell"
    RING = "ring"
    LEAF_BLOCK = "leaf_block"  # raw streaming buffer block, never subsampled


@dataclass(frozen=True)
class Region:
    """One piece of a partition: identity, geometry tag, and represented weight."""

    region_id: str
    kind: RegionKind
    center_index: int
    level: int
    cell: tuple[int, ...] | None
    count: float

    def with_count(self, count: float) -> "Region":
        return Region(self.region_id, self.kind, self.center_index, self.level, self.cell, count)

    def to_dict(self) -> dict:
        return {
            "regionId": self.region_id,
            "kind": self.kind.value,
            "i": self.center_index,
            "j": self.level,
            "count": self.count,
        }


@dataclass
class PartitionResult:
    """A partition of a point set: regions, per-point region index, and geometry.

    The geometry fields (centers, average cost, level count) let membership be
    re-evaluated for arbitrary points, which the merge-and-reduce density
    checks rely on.
    """

    regions: list[Region]
    assignment: list[int]
    centers: CenterSet
    total_weight: float
    dimension: int
    technique: str
    eps: float = 0.0
    mode: DistanceMode = DistanceMode.EUCLIDEAN
    avg_cost: float = 0.0
    levels_max: int = 0

    def members(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in self.regions]
        for point_idx, region_idx in enumerate(self.assignment):
            out[region_idx].append(point_idx)
        return out

    def locate(self, coords: Sequence[float]) -> str:
        """Region id an arbitrary point would fall into under this geometry."""
        carr = self.centers.as_array()
        pt = np.asarray([coords], dtype=float)
        dvec = dist_matrix(pt, carr, self.mode)[0]
        i = int(dvec.argmin())
        if self.avg_cost == 0.0:
            return f"g:{i}:zero" if self.technique == "hpm" else f"r:{i}:0"
        ratio = dvec[i] / self.avg_cost
        j = int(np.clip(math.ceil(math.log2(max(ratio, 1.0))), 0, self.levels_max))
        if self.technique == "chen":
            return f"r:{i}:{j}"
        radius_mode = (2.0**j) * self.avg_cost
        radius_euclid = (
            radius_mode if self.mode is DistanceMode.EUCLIDEAN else math.sqrt(radius_mode)
        )
        side = (self.eps / (10.0 * math.sqrt(self.dimension) * ALPHA_OFFLINE)) * radius_euclid
        cell = tuple(
            int(math.floor((coords[t] - carr[i, t]) / side)) for t in range(self.dimension)
        )
        cell_tag = ",".join(str(c) for c in cell)
        return f"g:{i}:{j}:{cell_tag}"


@dataclass(frozen=True)
class CoresetPoint:
    """A weighted coreset representative tagged with its region and arrival."""

    coords: tuple[float, ...]
    weight: float
    region_id: str
    arrival: int


@dataclass
class CoresetWithPartition:
    """A weighted coreset together with the partition its weights refer to."""

    points: list[CoresetPoint]
    partition: list[Region]
    eps: float
    k: int
    geometry: "PartitionResult | None" = None  # source partition, when one exists

    @property
    def total_weight(self) -> float:
        return sum(p.weight for p in self.points)

    def cost(self, centers: CenterSet, mode: DistanceMode) -> float:
        if not self.points:
            return 0.0
        pts = np.asarray([p.coords for p in self.points], dtype=float)
        w = np.asarray([p.weight for p in self.points], dtype=float)
        return float(w @ dist_matrix(pts, centers.as_array(), mode).min(axis=1))

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "eps": self.eps,
            "k": self.k,
            "points": [
                {
                    "coords": list(p.coords),
                    "weight": p.weight,
                    "regionId": p.region_id,
                    "arrival": p.arrival,
                }
                for p in self.points
            ],
            "partition": [r.to_dict() for r in self.partition],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# -- epsilon-sample sizing ----------------------------------------------------


def eps_sample_size(d_vc: int, eps: float, delta: float, population: float, c_vc: float = 1.0) -> int:
    """Sample size making a uniform subset an eps-sample of a bounded-VC range space.

    Natural logarithms; clamped to the population size.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0,1)")
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0,1)")
    if d_vc < 1:
        raise ValueError("d_vc must be >= 1")
    raw = (c_vc / eps**2) * (d_vc * math.log(d_vc / eps) + math.log(1.0 / delta))
    return int(min(population, math.ceil(raw)))


def _region_vc_dim(kind: RegionKind, d: int) -> int:
    if kind is RegionKind.GRID_CELL:
        return 2 * d
    if kind is RegionKind.RING:
        return max(1, math.ceil(RING_VC_CONSTANT * (d + 1) * math.log2(2 * (d + 1))))
    raise ValueError(f"regions of kind {kind} are never subsampled")


def _vc_budget(d_vc: int, eps: float, delta: float, n_total: float, c_vc: float) -> int:
    """Per-region sample floor from the VC argument, with the log-n inflation."""
    if c_vc <= 0:
        return 0
    log_n = max(1.0, math.log(max(n_total, 2.0)))
    inner = max(2.0, d_vc * log_n / (eps * delta))
    return math.ceil(c_vc * d_vc * log_n * math.log(inner) / eps**2)


def chen_ring_budget(n: float, d: int, k: int, eps: float, delta: float) -> int:
    """Per-ring sample count of the ring-based coreset construction."""
    inner = max(2.0, k * math.log(max(n, 2.0)) / (eps * delta))
    return math.ceil(d * k * math.log(inner) / eps**2)


# -- partition builders -------------------------------------------------------


def _normalize(points: Sequence[Point | WeightedPoint]) -> tuple[np.ndarray, np.ndarray, list[int]]:
    coords = []
    weights = []
    arrivals = []
    for p in points:
        if isinstance(p, WeightedPoint):
            coords.append(p.point.coords)
            weights.append(p.weight)
            arrivals.append(p.point.arrival)
        else:
            coords.append(p.coords)
            weights.append(1.0)
            arrivals.append(p.arrival)
    arr = np.asarray(coords, dtype=float).reshape(len(coords), -1)
    return arr, np.asarray(weights, dtype=float), arrivals


def _approx_centers(
    points: Sequence[Point | WeightedPoint], k: int, mode: DistanceMode, seed: int
) -> CenterSet:
    distinct = list(dict.fromkeys(
        (p.point.coords if isinstance(p, WeightedPoint) else p.coords) for p in points
    ))
    if len(distinct) <= k:
        return CenterSet(tuple(distinct))
    return local_search_kmedian(list(points), k, mode, seed)


def _ball_structure(
    pts: np.ndarray, weights: np.ndarray, centers: CenterSet, mode: DistanceMode
) -> tuple[np.ndarray, np.ndarray, float, int]:
    """Cluster labels, per-point smallest enclosing ball level, avg cost, level count."""
    dmat = dist_matrix(pts, centers.as_array(), mode)
    labels = dmat.argmin(axis=1)
    dnear = dmat.min(axis=1)
    total = float(weights @ dnear)
    n = float(weights.sum())
    if total == 0.0:
        return labels, np.zeros(len(pts), dtype=int), 0.0, 0
    levels_max = max(0, math.ceil(math.log2(max(n, 2.0))))
    avg = total / n
    # smallest j with d <= 2^j * avg, clamped to the top ball
    with np.errstate(divide="ignore"):
        ratio = dnear / avg
    j = np.ceil(np.log2(np.maximum(ratio, 1.0))).astype(int)
    j = np.clip(j, 0, levels_max)
    return labels, j, avg, levels_max


def hpm_partition(
    points: Sequence[Point | WeightedPoint],
    k: int,
    eps: float,
    mode: DistanceMode,
    seed: int,
) -> PartitionResult:
    """Exponential-ball grid partition around approximate centers.

    Each point joins its nearest center's smallest enclosing ball; within the
    ball's level the point lands in an axis-aligned grid cell whose side
    scales with eps and the ball radius. Zero total cost collapses to one
    zero-radius region per center.
    """
    if not points:
        raise ValueError("empty point set")
    pts, weights, _ = _normalize(points)
    d = pts.shape[1]
    if d > HPM_MAX_DIMENSION:
        raise ValueError(f"grid partition supports dimension <= {HPM_MAX_DIMENSION}, got {d}")
    centers = _approx_centers(points, k, mode, seed)
    labels, lvls, avg, levels_max = _ball_structure(pts, weights, centers, mode)
    regions: list[Region] = []
    region_pos: dict[tuple, int] = {}
    assignment: list[int] = []
    counts: dict[int, float] = {}
    carr = centers.as_array()
    if avg == 0.0:
        for idx in range(len(pts)):
            i = int(labels[idx])
            key = ("z", i)
            pos = region_pos.get(key)
            if pos is None:
                pos = len(regions)
                region_pos[key] = pos
                regions.append(
                    Region(f"g:{i}:zero", RegionKind.GRID_CELL, i, 0, tuple([0] * d), 0.0)
                )
            assignment.append(pos)
            counts[pos] = counts.get(pos, 0.0) + float(weights[idx])
    else:
        for idx in range(len(pts)):
            i = int(labels[idx])
            j = int(lvls[idx])
            radius_mode = (2.0**j) * avg
            radius_euclid = radius_mode if mode is DistanceMode.EUCLIDEAN else math.sqrt(radius_mode)
            side = (eps / (10.0 * math.sqrt(d) * ALPHA_OFFLINE)) * radius_euclid
            cell = tuple(int(math.floor((pts[idx, t] - carr[i, t]) / side)) for t in range(d))
            key = (i, j, cell)
            pos = region_pos.get(key)
            if pos is None:
                pos = len(regions)
                region_pos[key] = pos
                cell_tag = ",".join(str(c) for c in cell)
                regions.append(
                    Region(f"g:{i}:{j}:{cell_tag}", RegionKind.GRID_CELL, i, j, cell, 0.0)
                )
            assignment.append(pos)
            counts[pos] = counts.get(pos, 0.0) + float(weights[idx])
    regions = [r.with_count(counts.get(pos, 0.0)) for pos, r in enumerate(regions)]
    return PartitionResult(
        regions=regions,
        assignment=assignment,
        centers=centers,
        total_weight=float(weights.sum()),
        dimension=d,
        technique="hpm",
        eps=eps,
        mode=mode,
        avg_cost=avg,
        levels_max=levels_max,
    )


def chen_partition(
    points: Sequence[Point | WeightedPoint],
    k: int,
    eps: float,
    mode: DistanceMode,
    seed: int,
) -> PartitionResult:
    """Concentric-ring partition around approximate centers (any dimension)."""
    if not points:
        raise ValueError("empty point set")
    pts, weights, _ = _normalize(points)
    d = pts.shape[1]
    centers = _approx_centers(points, k, mode, seed)
    labels, lvls, avg, levels_max = _ball_structure(pts, weights, centers, mode)
    regions: list[Region] = []
    region_pos: dict[tuple, int] = {}
    assignment: list[int] = []
    counts: dict[int, float] = {}
    for idx in range(len(pts)):
        i = int(labels[idx])
        j = int(lvls[idx]) if avg > 0.0 else 0
        key = (i, j)
        pos = region_pos.get(key)
        if pos is None:
            pos = len(regions)
            region_pos[key] = pos
            regions.append(Region(f"r:{i}:{j}", RegionKind.RING, i, j, None, 0.0))
        assignment.append(pos)
        counts[pos] = counts.get(pos, 0.0) + float(weights[idx])
    regions = [r.with_count(counts.get(pos, 0.0)) for pos, r in enumerate(regions)]
    return PartitionResult(
        regions=regions,
        assignment=assignment,
        centers=centers,
        total_weight=float(weights.sum()),
        dimension=d,
        technique="chen",
        eps=eps,
        mode=mode,
        avg_cost=avg,
        levels_max=levels_max,
    )


def partition_for(
    technique: str,
    points: Sequence[Point | WeightedPoint],
    k: int,
    eps: float,
    mode: DistanceMode,
    seed: int,
) -> PartitionResult:
    if technique == "hpm":
        return hpm_partition(points, k, eps, mode, seed)
    if technique == "chen":
        return chen_partition(points, k, eps, mode, seed)
    raise ValueError(f"unknown coreset technique {technique!r} (use hpm|chen)")


def default_budget_fn(
    technique: str, n_total: float, d: int, k: int, eps: float, delta: float
) -> Callable[[Region], int]:
    """The per-region base sample count each technique prescribes."""
    if technique == "hpm":
        return lambda region: 1
    if technique == "chen":
        budget = chen_ring_budget(n_total, d, k, eps, delta)
        return lambda region: budget
    raise ValueError(f"unknown coreset technique {technique!r}")


# -- the unified sampler ------------------------------------------------------


def unified_sample(
    points: Sequence[Point | WeightedPoint],
    partition: PartitionResult,
    eps: float,
    delta: float,
    s_cc_fn: Callable[[Region], int],
    seed: int,
    c_vc: float = 1.0,
    n_total: float | None = None,
) -> CoresetWithPartition:
    """Per-region uniform sampling over expanded weights.

    Each region contributes r = min(|R|, max(s_cc, vc_floor)) samples, every
    sample carrying weight n_R / r, so region weight (and hence total weight)
    is conserved exactly. Regions no larger than their budget are kept
    verbatim. Integer weights sample the implied unit copies without
    replacement; fractional weights fall back to weight-proportional
    point sampling.
    """
    pts, weights, arrivals = _normalize(points)
    if len(partition.assignment) != len(points):
        raise ValueError("partition does not cover the point set")
    if n_total is None:
        n_total = partition.total_weight
    out: list[CoresetPoint] = []
    members = partition.members()
    for pos, region in enumerate(partition.regions):
        idxs = members[pos]
        if not idxs:
            continue
        n_r = float(sum(weights[i] for i in idxs))
        d_vc = _region_vc_dim(region.kind, partition.dimension)
        budget = max(int(s_cc_fn(region)), _vc_budget(d_vc, eps, delta, n_total, c_vc))
        rng = np.random.default_rng(seed + 7919 * pos)
        w_int = [round(weights[i]) for i in idxs]
        integral = all(abs(weights[i] - w_int[t]) < 1e-9 for t, i in enumerate(idxs))
        if integral:
            total = int(sum(w_int))
            r = min(total, budget)
            if r >= total:
                for i in idxs:
                    out.append(
                        CoresetPoint(tuple(pts[i]), float(weights[i]), region.region_id, arrivals[i])
                    )
                continue
            copies = np.repeat(np.asarray(idxs), np.asarray(w_int, dtype=int))
            chosen = rng.choice(copies, size=r, replace=False)
            agg: dict[int, int] = {}
            for i in chosen:
                agg[int(i)] = agg.get(int(i), 0) + 1
            unit = n_r / r
            for i, cnt in sorted(agg.items()):
                out.append(CoresetPoint(tuple(pts[i]), unit * cnt, region.region_id, arrivals[i]))
        else:
            r = min(len(idxs), budget)
            if r >= len(idxs):
                for i in idxs:
                    out.append(
                        CoresetPoint(tuple(pts[i]), float(weights[i]), region.region_id, arrivals[i])
                    )
                continue
            probs = np.asarray([weights[i] for i in idxs], dtype=float)
            probs = probs / probs.sum()
            chosen = rng.choice(np.asarray(idxs), size=r, replace=False, p=probs)
            unit = n_r / r
            for i in sorted(int(x) for x in chosen):
                out.append(CoresetPoint(tuple(pts[i]), unit, region.region_id, arrivals[i]))
    return CoresetWithPartition(
        points=out,
        partition=list(partition.regions),
        eps=eps,
        k=len(partition.centers),
        geometry=partition,
    )


def coreset_cost_error(
    points: Sequence[Point | WeightedPoint],
    coreset: CoresetWithPartition,
    centers: CenterSet,
    mode: DistanceMode,
) -> float:
    """Relative clustering-cost disagreement between a point set and its coreset."""
    full = cost(list(points), centers, mode)
    approx = coreset.cost(centers, mode)
    if full == 0.0:
        if approx == 0.0:
            return 0.0
        raise ValueError("full cost is zero but coreset cost is not")
    return abs(full - approx) / full


def slack_perturbation_check(
    points: Sequence[Point],
    technique: str,
    k: int,
    eps: float,
    trials: int,
    seed: int,
    mode: DistanceMode = DistanceMode.EUCLIDEAN,
    delta: float = 0.1,
    c_vc: float = 1.0,
) -> float:
    """Delete the technique's per-region tolerated fraction and measure the damage.

    Builds the partition, deletes floor(frac * n_R) random points per region
    (frac = eps^2/(5 sqrt(d)) for grid cells, eps^2/2 for rings), re-samples
    the survivors over the same regions, then reports the worst over `trials`
    random center sets of sum_R |cost(R', C) - cost(R, C)| / cost(P, C).
    """
    partition = partition_for(technique, points, k, eps, mode, seed)
    d = partition.dimension
    frac = eps**2 / (5.0 * math.sqrt(d)) if technique == "hpm" else eps**2 / 2.0
    rng = np.random.default_rng(seed + 1)
    members = partition.members()

    surviving_idx: list[int] = []
    surviving_assignment: list[int] = []
    for pos, idxs in enumerate(members):
        n_del = int(math.floor(frac * len(idxs)))
        keep = list(idxs)
        if n_del > 0:
            drop = set(rng.choice(np.asarray(idxs), size=n_del, replace=False).tolist())
            keep = [i for i in idxs if i not in drop]
        for i in keep:
            surviving_idx.append(i)
            surviving_assignment.append(pos)

    survivors = [points[i] for i in surviving_idx]
    new_counts: dict[int, float] = {}
    for pos in surviving_assignment:
        new_counts[pos] = new_counts.get(pos, 0.0) + 1.0
    perturbed = PartitionResult(
        regions=[r.with_count(new_counts.get(pos, 0.0)) for pos, r in enumerate(partition.regions)],
        assignment=surviving_assignment,
        centers=partition.centers,
        total_weight=float(len(survivors)),
        dimension=d,
        technique=technique,
    )
    budget_fn = default_budget_fn(technique, partition.total_weight, d, k, eps, delta)
    resampled = unified_sample(
        survivors, perturbed, eps, delta, budget_fn, seed + 2, c_vc=c_vc,
        n_total=partition.total_weight,
    )
    region_pos = {r.region_id: pos for pos, r in enumerate(partition.regions)}
    n_regions = len(partition.regions)
    pts_all = np.asarray([p.coords for p in points], dtype=float)
    assign_all = np.asarray(partition.assignment, dtype=int)
    cs_pts = np.asarray([cp.coords for cp in resampled.points], dtype=float).reshape(
        len(resampled.points), -1
    )
    cs_w = np.asarray([cp.weight for cp in resampled.points], dtype=float)
    cs_region = np.asarray([region_pos[cp.region_id] for cp in resampled.points], dtype=int)

    lo, hi = pts_all.min(axis=0), pts_all.max(axis=0)
    span = np.maximum(hi - lo, 1e-3)  # keep random centers distinct on degenerate inputs
    worst = 0.0
    for t in range(trials):
        trial_rng = np.random.default_rng(seed + 1000 + t)
        carr = trial_rng.uniform(lo - 0.1 * span, hi + 0.1 * span, size=(k, pts_all.shape[1]))
        dmin_all = dist_matrix(pts_all, carr, mode).min(axis=1)
        total_cost = float(dmin_all.sum())
        if total_cost == 0.0:
            continue
        before = np.bincount(assign_all, weights=dmin_all, minlength=n_regions)
        if len(resampled.points):
            dmin_cs = dist_matrix(cs_pts, carr, mode).min(axis=1)
            after = np.bincount(cs_region, weights=cs_w * dmin_cs, minlength=n_regions)
        else:
            after = np.zeros(n_regions)
        worst = max(worst, float(np.abs(after - before).sum()) / total_cost)
    return worst
