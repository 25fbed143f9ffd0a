"""Sliding-window metric k-median/k-means via an extended smooth-histogram index.

The state keeps a sequence of arrival-time indices, one streaming summarizer
per index, and a table of frozen summary snapshots for index pairs. After
every insertion a pruning pass marks the indices worth keeping: an index
survives either because its cost estimate sits on a fresh geometric level
(beta/gamma rule) or because dropping it would break the per-center
cardinality condition that makes the cost function behave smoothly.
Queries come from the oldest index, whose summarizer covers the window.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import CenterSet, DistanceMode, Point
from .offline import clustering_map_with_counts, local_search_kmedian
from .pls import PlsParams, PlsState, Summary, summary_kcenters


def pair_seed(seed: int, xi: int, xj: int) -> int:
    """Deterministic per-bucket-pair seed so offline replays can reproduce runs."""
    return (seed * 1_000_003 + xi * 8191 + xj) % (2**31 - 1)


@dataclass
class IndexEntry:
    """A live index: its arrival time and the summarizer running since then."""

    x: int
    pls: PlsState


class SwMedianState:
    """Single-writer sliding-window clustering state (insert, then query)."""

    def __init__(
        self,
        W: int,
        k: int,
        mode: DistanceMode,
        seed: int,
        beta: float = 2.0,
        gamma: float = 8.0,
        pls_params: PlsParams | None = None,
        ls_starts: int = 3,
    ):
        if W < 1:
            raise ValueError("window size must be >= 1")
        if k < 1:
            raise ValueError("k must be >= 1")
        if not (beta > 1.0 and gamma > 1.0 and gamma > beta):
            raise ValueError("need gamma > beta > 1")
        self.W = W
        self.k = k
        self.mode = mode
        self.seed = seed
        self.beta = beta
        self.gamma = gamma
        self.pls_params = pls_params or PlsParams()
        self.ls_starts = ls_starts
        self.N = 0
        self.entries: list[IndexEntry] = []
        self.buckets: dict[tuple[int, int], Summary] = {}
        self._centers_memo: dict[tuple[int, int], CenterSet] = {}
        self._newest_snapshot: Summary | None = None

    # -- bucket access -------------------------------------------------------

    def indices(self) -> list[int]:
        return [e.x for e in self.entries]

    @property
    def bucket_count(self) -> int:
        return len(self.buckets)

    def _bucket_now(self, pos: int) -> Summary:
        """Summary of [x_pos, N]; the newest index reads its live instance."""
        entry = self.entries[pos - 1]
        if entry.x == self.N:
            if self._newest_snapshot is None:
                self._newest_snapshot = entry.pls.snapshot()
            return self._newest_snapshot
        return self.buckets[(entry.x, self.N)]

    def _r_now(self, pos: int) -> float:
        return self._bucket_now(pos).R

    def _centers_for(self, xi: int, xj: int) -> tuple[CenterSet, bool]:
        """Offline centers for the stored summary of [xi, xj], memoized.

        Returns (centers, degenerate) where degenerate means the summary had
        fewer than k distinct facilities (every facility became a center).
        """
        summary = self.buckets[(xi, xj)]
        distinct = summary.distinct_coords()
        degenerate = len(distinct) < self.k
        key = (xi, xj)
        cached = self._centers_memo.get(key)
        if cached is not None:
            return cached, degenerate
        if len(distinct) <= self.k:
            centers = CenterSet(tuple(distinct))
        else:
            centers = local_search_kmedian(
                list(summary.facilities),
                self.k,
                self.mode,
                pair_seed(self.seed, xi, xj),
                starts=self.ls_starts,
            )
        self._centers_memo[key] = centers
        return centers, degenerate

    def _cardinality_ok(self, pos_i: int, pos_ell: int, centers: CenterSet) -> bool:
        """Per-center weight condition between prefix [x_i, x_ell] and suffix [x_ell, N]."""
        xi = self.entries[pos_i - 1].x
        xell = self.entries[pos_ell - 1].x
        sa = self.buckets[(xi, xell)]
        sb = self._bucket_now(pos_ell)
        cmc = clustering_map_with_counts(
            sa, sb, self.k, self.mode, pair_seed(self.seed, xi, xell), centers=centers
        )
        return all(a <= b for a, b in zip(cmc.counts_a, cmc.counts_b))

    # -- algorithm -----------------------------------------------------------

    def insert(self, p: Point, run_update: bool = True) -> "SwMedianState":
        if p.arrival != self.N + 1:
            raise ValueError(f"expected arrival {self.N + 1}, got {p.arrival}")
        self.N += 1
        self._newest_snapshot = None
        for entry in self.entries:
            entry.pls.insert(p)
        for entry in self.entries:
            self.buckets[(entry.x, self.N)] = entry.pls.snapshot()
        fresh = PlsState(self.k, self.mode, pair_seed(self.seed, self.N, 0), self.pls_params)
        fresh.insert(p)
        self.entries.append(IndexEntry(self.N, fresh))
        if run_update:
            self.update()
        return self

    def update(self) -> "SwMedianState":
        """Marking/pruning pass; runs after each insertion."""
        marked = self.compute_marks()
        self._apply_marks(marked)
        return self

    def compute_marks(self) -> set[int]:
        """The 1-based index positions that survive this step's pruning rules."""
        T = len(self.entries)
        if T == 0:
            return set()
        if T == 1:
            return {1}
        start = 1 if self.entries[1].x > self.N - self.W else 2
        marked: set[int] = set()
        i = start
        while i <= T:
            if i == T:
                marked.add(T)
                break
            r_i = self._r_now(i)
            j = None
            for jp in range(T, i, -1):
                if self.beta * r_i <= self.gamma * self._r_now(jp):
                    j = jp
                    break
            if j is None:
                j = i + 1
            xi = self.entries[i - 1].x
            xj = self.entries[j - 1].x
            centers, degenerate = self._centers_for(xi, xj)
            while i < j:
                marked.add(i)
                if degenerate:
                    break  # zero-cost regime: jump straight to marking x_j
                ell = None
                for cand in range(j, i, -1):
                    if self._cardinality_ok(i, cand, centers):
                        ell = cand
                        break
                i = ell if ell is not None else i + 1
            marked.add(j)
            i = j + 1
        return marked

    def _apply_marks(self, marked: set[int]) -> None:
        T = len(self.entries)
        dead = {self.entries[pos - 1].x for pos in range(1, T + 1) if pos not in marked}
        if not dead:
            return
        self.entries = [e for e in self.entries if e.x not in dead]
        self.buckets = {
            key: s for key, s in self.buckets.items() if key[0] not in dead and key[1] not in dead
        }
        self._centers_memo = {
            key: c
            for key, c in self._centers_memo.items()
            if key[0] not in dead and key[1] not in dead
        }

    def query(self) -> tuple[CenterSet, float]:
        """Centers and cost estimate for the suffix covering the current window."""
        if not self.entries:
            raise ValueError("no points inserted yet")
        summary = self._bucket_now(1)
        return summary_kcenters(
            summary, self.k, self.mode, pair_seed(self.seed, self.entries[0].x, 1)
        )

    def sandwich_ok(self) -> bool:
        """Window-start bracketing: x_1 <= N-W+1 and (if present) x_2 >= N-W+1."""
        if not self.entries:
            return True
        boundary = self.N - self.W + 1
        if self.N >= self.W and self.entries[0].x > boundary:
            return False
        if len(self.entries) >= 2 and self.N >= self.W and self.entries[1].x < boundary:
            return False
        return True


def sw_insert(state: SwMedianState, p: Point) -> SwMedianState:
    return state.insert(p)


def sw_update(state: SwMedianState) -> SwMedianState:
    return state.update()


def sw_query(state: SwMedianState) -> tuple[CenterSet, float]:
    return state.query()
