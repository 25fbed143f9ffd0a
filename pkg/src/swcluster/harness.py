"""Stream generation, experiment orchestration, and report emission.

Experiments drive either the sliding-window clustering pipeline or the
sliding-window coreset pipeline over a generated (or file-backed) stream,
optionally comparing against exact brute-force window optima, and emit a
deterministic JSON report.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .core import CenterSet, DistanceMode, Point, cost, load_points_csv
from .offline import brute_force_opt
from .pls import PlsParams
from .sw_coreset import SwCoresetState
from .sw_median import SwMedianState

SCHEMA_VERSION = 1
ORACLE_MAX_WINDOW = 16
ORACLE_MAX_K = 3
CORESET_PROBE_CENTER_SETS = 50


@dataclass(frozen=True)
class GeneratorSpec:
    """What to stream: a synthetic family or a CSV file."""

    kind: str  # uniform_box | gaussian_mixture | drift | file
    m: int = 2  # mixture components
    spread: float = 0.5
    period: int = 100
    path: str | None = None


@dataclass
class ExperimentConfig:
    pipeline: str  # kmedian | coreset
    generator: GeneratorSpec
    n: int
    d: int
    W: int
    k: int
    mode: DistanceMode = DistanceMode.EUCLIDEAN
    eps: float = 0.2
    beta: float = 2.0
    gamma: float = 8.0
    seed: int = 1
    oracle_every: int = 0  # 0 = never
    technique: str = "chen"
    leaf_capacity: int | None = None
    timings: bool = False

    def __post_init__(self):
        if self.pipeline not in ("kmedian", "coreset"):
            raise ValueError(f"unknown pipeline {self.pipeline!r}")
        if self.pipeline == "kmedian" and self.oracle_every > 0:
            if self.W > ORACLE_MAX_WINDOW or self.k > ORACLE_MAX_K:
                raise ValueError(
                    "brute-force window oracle needs W <= "
                    f"{ORACLE_MAX_WINDOW} and k <= {ORACLE_MAX_K}"
                )


@dataclass
class StepReport:
    N: int
    index_count: int
    structure_size: int  # bucket count or coreset size
    query_cost: float | None = None
    oracle_cost: float | None = None
    ratio: float | None = None
    query_error: float | None = None
    sigma_sq: float | None = None
    wall_micros: int | None = None


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    steps: list[StepReport]
    hard_failures: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        ratios = [s.ratio for s in self.steps if s.ratio is not None]
        errors = [s.query_error for s in self.steps if s.query_error is not None]
        out = {
            "maxIndexCount": max((s.index_count for s in self.steps), default=0),
            "maxStructureSize": max((s.structure_size for s in self.steps), default=0),
            "hardFailures": list(self.hard_failures),
        }
        if ratios:
            out["maxRatio"] = max(ratios)
            out["medianRatio"] = float(np.median(ratios))
        if errors:
            out["maxQueryError"] = max(errors)
        return out


def generate_stream(config: ExperimentConfig) -> list[Point]:
    """Deterministic point stream for a config; see GeneratorSpec for families."""
    gen = config.generator
    if gen.kind == "file":
        if not gen.path:
            raise ValueError("file generator needs a path")
        pts = load_points_csv(gen.path)
        return pts
    rng = np.random.default_rng(config.seed)
    out: list[Point] = []
    if gen.kind == "uniform_box":
        coords = rng.uniform(0.0, 1.0, size=(config.n, config.d))
    elif gen.kind in ("gaussian_mixture", "drift"):
        means = np.zeros((gen.m, config.d))
        for i in range(gen.m):
            angle = 2.0 * math.pi * i / gen.m
            means[i, 0] = 10.0 * math.cos(angle)
            if config.d > 1:
                means[i, 1] = 10.0 * math.sin(angle)
        coords = np.empty((config.n, config.d))
        for t in range(config.n):
            mean = means[t % gen.m].copy()
            if gen.kind == "drift":
                mean[0] += gen.spread * (t // gen.period)
            coords[t] = mean + rng.normal(0.0, gen.spread, size=config.d)
    else:
        raise ValueError(f"unknown generator {gen.kind!r}")
    for t in range(config.n):
        out.append(Point(id=t + 1, coords=tuple(float(x) for x in coords[t]), arrival=t + 1))
    return out


def _window(points: list[Point], N: int, W: int) -> list[Point]:
    start = max(1, N - W + 1)
    return points[start - 1 : N]


def _ratio(query_cost: float, oracle_cost: float) -> float:
    if oracle_cost == 0.0 and query_cost == 0.0:
        return 1.0  # both-zero convention
    if oracle_cost == 0.0:
        return math.inf
    return query_cost / oracle_cost


def _probe_center_sets(
    points: list[Point], k: int, seed: int, count: int = CORESET_PROBE_CENTER_SETS
) -> list[CenterSet]:
    arr = np.asarray([p.coords for p in points], dtype=float)
    lo, hi = arr.min(axis=0), arr.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        c = rng.uniform(lo - 0.1 * span, hi + 0.1 * span, size=(k, arr.shape[1]))
        out.append(CenterSet(tuple(tuple(float(x) for x in row) for row in c)))
    return out


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Drive one pipeline over one stream; returns per-step rows plus failures."""
    points = generate_stream(config)
    report = ExperimentReport(config=config, steps=[])
    if config.pipeline == "kmedian":
        state = SwMedianState(
            W=config.W, k=config.k, mode=config.mode, seed=config.seed,
            beta=config.beta, gamma=config.gamma, pls_params=PlsParams(),
        )
        _run_kmedian(config, points, state, report)
    else:
        state = SwCoresetState(
            W=config.W, eps=config.eps, k=config.k, technique=config.technique,
            seed=config.seed, n_max=len(points) + 1, mode=config.mode,
            leaf_capacity=config.leaf_capacity,
        )
        _run_coreset(config, points, state, report)
    return report


def _run_kmedian(
    config: ExperimentConfig,
    points: list[Point],
    state: SwMedianState,
    report: ExperimentReport,
) -> None:
    for p in points:
        t0 = time.perf_counter()
        state.insert(p)
        if not state.sandwich_ok():
            report.hard_failures.append(f"step {state.N}: window sandwich violated")
        step = StepReport(
            N=state.N, index_count=len(state.entries), structure_size=state.bucket_count
        )
        if config.oracle_every > 0 and state.N % config.oracle_every == 0:
            window = _window(points, state.N, config.W)
            centers, _ = state.query()
            step.query_cost = cost(window, centers, config.mode)
            distinct = {q.coords for q in window}
            if len(distinct) <= config.k:
                step.oracle_cost = 0.0
            else:
                step.oracle_cost = brute_force_opt(window, config.k, config.mode)[1]
            step.ratio = _ratio(step.query_cost, step.oracle_cost)
            if config.mode is DistanceMode.SQUARED_EUCLIDEAN and config.k >= 2:
                if len(distinct) <= config.k - 1:
                    below = 0.0
                else:
                    below = brute_force_opt(window, config.k - 1, config.mode)[1]
                step.sigma_sq = (step.oracle_cost / below) if below > 0 else 0.0
            if step.ratio < 1.0 - 1e-9:
                report.hard_failures.append(
                    f"step {state.N}: ratio {step.ratio} below 1"
                )
        if config.timings:
            step.wall_micros = int((time.perf_counter() - t0) * 1e6)
        report.steps.append(step)


def _run_coreset(
    config: ExperimentConfig,
    points: list[Point],
    state: SwCoresetState,
    report: ExperimentReport,
) -> None:
    for p in points:
        t0 = time.perf_counter()
        state.insert(p)
        if not state.sandwich_ok():
            report.hard_failures.append(f"step {state.N}: window sandwich violated")
        coreset = state.query()
        step = StepReport(
            N=state.N, index_count=state.index_count, structure_size=len(coreset.points)
        )
        if config.oracle_every > 0 and state.N % config.oracle_every == 0:
            window = _window(points, state.N, config.W)
            worst = 0.0
            for centers in _probe_center_sets(window, config.k, config.seed + state.N):
                full = cost(window, centers, config.mode)
                approx = coreset.cost(centers, config.mode)
                if full == 0.0:
                    err = 0.0 if approx == 0.0 else math.inf
                else:
                    err = abs(full - approx) / full
                worst = max(worst, err)
            step.query_error = worst
        if config.timings:
            step.wall_micros = int((time.perf_counter() - t0) * 1e6)
        report.steps.append(step)


def report_to_dict(report: ExperimentReport) -> dict:
    """JSON-ready report; field names follow the CLI wire format."""
    cfg = report.config
    out: dict = {
        "schemaVersion": SCHEMA_VERSION,
        "pipeline": cfg.pipeline,
        "conventions": {"ratioWhenBothCostsZero": 1.0},
        "config": {
            "generator": cfg.generator.kind,
            "n": cfg.n,
            "d": cfg.d,
            "W": cfg.W,
            "k": cfg.k,
            "mode": cfg.mode.value,
            "eps": cfg.eps,
            "beta": cfg.beta,
            "gamma": cfg.gamma,
            "seed": cfg.seed,
            "oracleEvery": cfg.oracle_every,
            "technique": cfg.technique,
        },
        "summary": report.summary(),
    }
    rows = []
    for s in report.steps:
        if cfg.pipeline == "kmedian":
            row: dict = {"N": s.N, "T": s.index_count, "bucketCount": s.structure_size}
            if s.query_cost is not None:
                row["queryCost"] = s.query_cost
                row["oracleCost"] = s.oracle_cost
                row["ratio"] = s.ratio
            if s.sigma_sq is not None:
                row["sigmaSq"] = s.sigma_sq
        else:
            row = {"N": s.N, "t": s.index_count, "coresetSize": s.structure_size}
            if s.query_error is not None:
                row["queryError"] = s.query_error
        row["wallMicros"] = s.wall_micros
        rows.append(row)
    out["steps"] = rows
    return out


def report_to_json(report: ExperimentReport) -> str:
    return json.dumps(report_to_dict(report), sort_keys=True, indent=1)
