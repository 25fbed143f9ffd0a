"""Offline k-median/k-means solvers: exact brute force and swap-based local search.

Brute force is the verification oracle for everything else in the package;
local search is the O(1)-approximate subroutine the streaming structures call.
Centers are always chosen among the (distinct) input points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import CenterSet, Coords, DistanceMode, Point, WeightedPoint, dist_matrix

BRUTE_FORCE_CAP = 20
MAP_ENUM_CAP = 12
_REL_TOL = 1e-9


def _distinct(points: Sequence[Point | WeightedPoint]) -> tuple[np.ndarray, np.ndarray, list[Coords]]:
    """Collapse duplicate coordinates, summing weights. Returns (coords, weights, keys)."""
    seen: dict[Coords, float] = {}
    for p in points:
        if isinstance(p, WeightedPoint):
            key, w = p.point.coords, p.weight
        else:
            key, w = p.coords, 1.0
        seen[key] = seen.get(key, 0.0) + w
    keys = list(seen.keys())
    coords = np.asarray(keys, dtype=float).reshape(len(keys), -1)
    weights = np.asarray([seen[k] for k in keys], dtype=float)
    return coords, weights, keys


def brute_force_opt(
    points: Sequence[Point | WeightedPoint],
    k: int,
    mode: DistanceMode,
    cap: int = BRUTE_FORCE_CAP,
) -> tuple[CenterSet, float]:
    """Exact optimum over all k-subsets of the distinct input points.

    Deterministic: among equal-cost subsets the lexicographically first wins.
    Refuses instances larger than `cap` points; use local_search_kmedian there.
    """
    if not points:
        raise ValueError("empty point set")
    coords, weights, keys = _distinct(points)
    m = len(keys)
    if m < k:
        raise ValueError(f"need at least k={k} distinct points, got {m}")
    if len(points) > cap:
        raise ValueError(
            f"instance size {len(points)} exceeds brute-force cap {cap}; "
            "use local_search_kmedian"
        )
    dmat = dist_matrix(coords, coords, mode)
    best_cost = np.inf
    best: tuple[int, ...] | None = None
    for subset in itertools.combinations(range(m), k):
        c = float(weights @ dmat[:, subset].min(axis=1))
        if best is None or c < best_cost:
            best_cost = c
            best = subset
    assert best is not None
    return CenterSet(tuple(keys[i] for i in best)), float(best_cost)


def _local_search_once(
    dmat: np.ndarray, weights: np.ndarray, k: int, rng: np.random.Generator, eps_ls: float
) -> tuple[list[int], float]:
    """One local-search run over a precomputed distance matrix; returns (indices, cost)."""
    m = dmat.shape[0]
    centers = sorted(rng.choice(m, size=k, replace=False).tolist())
    cur = float(weights @ dmat[:, centers].min(axis=1))
    threshold = 1.0 - eps_ls / k
    while True:
        best_cost, best_swap = cur, None
        for slot in range(k):
            rest = [c for j, c in enumerate(centers) if j != slot]
            if rest:
                dmin_rest = dmat[:, rest].min(axis=1)
            else:
                dmin_rest = np.full(m, np.inf)
            # evaluate every candidate replacement in one shot
            cand_costs = weights @ np.minimum(dmin_rest[:, None], dmat)
            cand_costs[centers] = np.inf  # a center swapped for a center is a no-op
            q = int(cand_costs.argmin())
            if cand_costs[q] < best_cost:
                best_cost, best_swap = float(cand_costs[q]), (slot, q)
        if best_swap is None or best_cost >= threshold * cur:
            break
        slot, q = best_swap
        centers[slot] = q
        cur = best_cost
    return centers, cur


def local_search_kmedian(
    points: Sequence[Point | WeightedPoint],
    k: int,
    mode: DistanceMode,
    seed: int,
    starts: int = 3,
    eps_ls: float = 0.01,
) -> CenterSet:
    """Single-swap local search with multi-start; centers restricted to input points.

    A swap is taken only if it improves cost by more than a (1 - eps_ls/k)
    factor, which guarantees termination. Deterministic for a fixed seed.
    """
    if not points:
        raise ValueError("empty point set")
    coords, weights, keys = _distinct(points)
    m = len(keys)
    if m < k:
        raise ValueError(f"need at least k={k} distinct points, got {m}")
    if m == k:
        return CenterSet(tuple(keys))
    dmat = dist_matrix(coords, coords, mode)
    best_centers, best_cost = None, np.inf
    for s in range(starts):
        rng = np.random.default_rng(seed + s)
        centers, c = _local_search_once(dmat, weights, k, rng, eps_ls)
        if c < best_cost:
            best_cost, best_centers = c, centers
    assert best_centers is not None
    return CenterSet(tuple(keys[i] for i in best_centers))


@dataclass(frozen=True)
class ClusteringMapWithCounts:
    """A clustering map over two summarized phases plus per-center phase weights."""

    centers: CenterSet
    counts_a: tuple[int, ...]
    counts_b: tuple[int, ...]
    total_cost: float


def clustering_map_with_counts(
    summary_a,
    summary_b,
    k: int,
    mode: DistanceMode,
    seed: int,
    centers: CenterSet | None = None,
) -> ClusteringMapWithCounts:
    """Cluster the union of two summaries and report per-center facility weights.

    With `centers=None` the centers come from local search on the combined
    facilities (fewer than k distinct facilities degenerates to "every
    facility a center"). Passing `centers` skips the solve and measures the
    nearest-center map against that fixed set, which is what the
    sliding-window Update loop needs.

    counts_a[i] is the summed weight of summary_a facilities mapped to
    center i; an empty side contributes zeros.
    """
    fac_a = list(summary_a.facilities)
    fac_b = list(summary_b.facilities)
    combined = fac_a + fac_b
    if not combined:
        raise ValueError("both summaries are empty")
    if centers is None:
        coords, _, keys = _distinct(combined)
        if len(keys) <= k:
            centers = CenterSet(tuple(keys))
        else:
            centers = local_search_kmedian(combined, k, mode, seed)

    carr = centers.as_array()

    def side_counts(facs: list[WeightedPoint]) -> np.ndarray:
        out = np.zeros(len(centers))
        if facs:
            pts = np.asarray([f.point.coords for f in facs], dtype=float)
            labels = dist_matrix(pts, carr, mode).argmin(axis=1)
            w = np.asarray([f.weight for f in facs])
            np.add.at(out, labels, w)
        return out

    ca, cb = side_counts(fac_a), side_counts(fac_b)
    total = 0.0
    for facs in (fac_a, fac_b):
        if facs:
            pts = np.asarray([f.point.coords for f in facs], dtype=float)
            w = np.asarray([f.weight for f in facs])
            total += float(w @ dist_matrix(pts, carr, mode).min(axis=1))
    return ClusteringMapWithCounts(
        centers=centers,
        counts_a=tuple(int(round(x)) for x in ca),
        counts_b=tuple(int(round(x)) for x in cb),
        total_cost=total,
    )


def _assignment_cost_table(dmat: np.ndarray, k: int) -> dict[tuple[int, ...], float]:
    """Min assignment cost for every per-center count vector, via DP over points.

    dmat is (n, k): point-to-center distances. The result maps each count
    vector (c_1..c_k) with sum n to the cheapest assignment achieving it.
    """
    n = dmat.shape[0]
    table: dict[tuple[int, ...], float] = {tuple([0] * k): 0.0}
    for i in range(n):
        nxt: dict[tuple[int, ...], float] = {}
        for counts, c in table.items():
            for j in range(k):
                key = tuple(counts[x] + (1 if x == j else 0) for x in range(k))
                val = c + dmat[i, j]
                if key not in nxt or val < nxt[key]:
                    nxt[key] = val
        table = nxt
    return table


def _constrained_map_cost(
    a_coords: np.ndarray, b_coords: np.ndarray, centers: CenterSet, mode: DistanceMode
) -> float:
    """Cheapest clustering map of A+B onto `centers` with |A_i| <= |B_i| per center.

    Exact search: enumerate reachable count vectors for each side by DP and
    combine. Returns +inf when no assignment satisfies the cardinality
    condition (e.g. |A| > |B|).
    """
    k = len(centers)
    carr = centers.as_array()
    tb = (
        _assignment_cost_table(dist_matrix(b_coords, carr, mode), k)
        if len(b_coords)
        else {tuple([0] * k): 0.0}
    )
    ta = (
        _assignment_cost_table(dist_matrix(a_coords, carr, mode), k)
        if len(a_coords)
        else {tuple([0] * k): 0.0}
    )
    best = np.inf
    for bc, cost_b in tb.items():
        for ac, cost_a in ta.items():
            if all(a <= b for a, b in zip(ac, bc)):
                if cost_a + cost_b < best:
                    best = cost_a + cost_b
    return float(best)


@dataclass(frozen=True)
class SmoothnessCheck:
    """Result of one smoothness-surrogate verification."""

    lhs: float
    rhs: float
    hyp_cost: bool
    hyp_cardinality: bool
    exhaustive: bool
    holds: bool

    @property
    def hypotheses_met(self) -> bool:
        return self.hyp_cost and self.hyp_cardinality


def check_smoothness_bound(
    a: Sequence[Point],
    b: Sequence[Point],
    c: Sequence[Point],
    k: int,
    mode: DistanceMode,
    beta: float,
    gamma: float,
) -> SmoothnessCheck:
    """Verify the clustering smoothness surrogate on one (A, B, C) triple.

    Checks the two hypotheses -- OPT(A+B) <= gamma * OPT(B), and the existence
    of a beta-approximate clustering map of A+B whose per-center A-side count
    never exceeds the B-side count -- and, when both hold, whether
    OPT(A+B+C) <= (1 + lam + beta*gamma*lam) * OPT(B+C). All OPT values come
    from brute force, so the sets must be desk-scale.

    The map existence search is exact over candidate center sets drawn from
    the optima of A+B and B (exhaustive assignment enumeration via DP) when
    |A+B| <= MAP_ENUM_CAP; larger instances only try the solver-induced map
    and the result is flagged non-exhaustive.
    """
    ab = list(a) + list(b)
    abc = ab + list(c)
    bc = list(b) + list(c)
    lam = mode.lam
    if not b:
        raise ValueError("B must be nonempty")
    a_keys = {p.coords for p in a}
    if a_keys & {p.coords for p in b}:
        raise ValueError("A and B must be disjoint")

    def opt(ps: Sequence[Point]) -> float:
        coords = {p.coords for p in ps}
        if len(coords) <= k:
            return 0.0
        return brute_force_opt(ps, k, mode)[1]

    opt_ab, opt_b = opt(ab), opt(b)
    opt_abc, opt_bc = opt(abc), opt(bc)
    hyp_cost = opt_ab <= gamma * opt_b + _REL_TOL * max(1.0, opt_b)

    # candidate center sets for the map search
    cands: list[CenterSet] = []
    for base in (ab, b):
        coords = {p.coords for p in base}
        if len(coords) <= k:
            cands.append(CenterSet(tuple(sorted(coords))))
        else:
            cands.append(brute_force_opt(base, k, mode)[0])
    exhaustive = len(ab) <= MAP_ENUM_CAP

    hyp_card = False
    if not a:
        hyp_card = True  # empty A: any map satisfies the cardinality condition
    else:
        a_arr = np.asarray([p.coords for p in a], dtype=float)
        b_arr = np.asarray([p.coords for p in b], dtype=float)
        budget = beta * opt_ab + _REL_TOL * max(1.0, opt_ab)
        for cand in cands:
            if exhaustive:
                best = _constrained_map_cost(a_arr, b_arr, cand, mode)
            else:
                # weaker test: nearest-center map only
                la = dist_matrix(a_arr, cand.as_array(), mode)
                lb = dist_matrix(b_arr, cand.as_array(), mode)
                counts_a = np.bincount(la.argmin(axis=1), minlength=len(cand))
                counts_b = np.bincount(lb.argmin(axis=1), minlength=len(cand))
                ok = np.all(counts_a <= counts_b)
                best = float(la.min(axis=1).sum() + lb.min(axis=1).sum()) if ok else np.inf
            if best <= budget:
                hyp_card = True
                break

    rhs = (1.0 + lam + beta * gamma * lam) * opt_bc
    holds = opt_abc <= rhs + _REL_TOL * max(1.0, rhs)
    return SmoothnessCheck(
        lhs=opt_abc,
        rhs=rhs,
        hyp_cost=hyp_cost,
        hyp_cardinality=hyp_card,
        exhaustive=exhaustive,
        holds=holds,
    )
