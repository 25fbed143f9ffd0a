"""Acceptance gate: one test per shipping criterion, each printing a verdict line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. The window-ratio suites (criteria 1-3) share module-scoped runs.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from swcluster import (
    CenterSet,
    DistanceMode,
    MergeReduceState,
    Point,
    SwCoresetState,
    brute_force_opt,
    check_smoothness_bound,
    coreset_cost_error,
    cost,
    eps_sample_size,
    mr_coreset,
    slack_perturbation_check,
    unified_sample,
)
from swcluster.cli import main as cli_main
from swcluster.coreset import default_budget_fn, partition_for
from swcluster.harness import ExperimentConfig, GeneratorSpec, generate_stream, run_experiment

EUCLID = DistanceMode.EUCLIDEAN
SQ = DistanceMode.SQUARED_EUCLIDEAN
GOLDEN_DIR = Path(__file__).parent / "golden"

RATIO_CAP_EUCLID = 40.0
RATIO_CAP_SQ = 160.0
SIGMA_SQ_EXEMPTION = 0.5
SUITE_RUNTIME_BUDGET_S = 60.0


def _verdict(tag: str, passed: bool, detail: str) -> None:
    print(f"ACCEPTANCE {tag}: {'PASS' if passed else 'FAIL'} ({detail})")


def _suite_configs(mode: DistanceMode) -> list[ExperimentConfig]:
    out = []
    for seed in range(1, 11):
        for gen in (
            GeneratorSpec("uniform_box"),
            GeneratorSpec("gaussian_mixture", m=3, spread=0.5),
            GeneratorSpec("drift", m=2, spread=0.5, period=60),
        ):
            out.append(
                ExperimentConfig(
                    pipeline="kmedian", generator=gen, n=600, d=2, W=12, k=2,
                    mode=mode, seed=seed, oracle_every=10,
                )
            )
    return out


@pytest.fixture(scope="module")
def suite_euclid():
    t0 = time.perf_counter()
    runs = [(cfg, run_experiment(cfg), generate_stream(cfg)) for cfg in _suite_configs(EUCLID)]
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def suite_squared():
    runs = [(cfg, run_experiment(cfg), generate_stream(cfg)) for cfg in _suite_configs(SQ)]
    return runs


def test_criterion_1_window_ratio_suite(suite_euclid):
    runs, elapsed = suite_euclid
    ratios = []
    violations = []
    for cfg, rep, _ in runs:
        for s in rep.steps:
            if s.ratio is None:
                continue
            ratios.append(s.ratio)
            if not (1 - 1e-9 <= s.ratio <= RATIO_CAP_EUCLID):
                violations.append((cfg.generator.kind, cfg.seed, s.N, s.ratio))
    median = float(np.median(ratios))
    passed = not violations and elapsed < SUITE_RUNTIME_BUDGET_S
    _verdict(
        "1 window-ratio(euclid)",
        passed,
        f"{len(ratios)} ratios, median {median:.3f}, max {max(ratios):.3f}, "
        f"min {min(ratios):.4f}, {len(violations)} outside [1-1e-9, {RATIO_CAP_EUCLID}], "
        f"runtime {elapsed:.1f}s",
    )
    assert elapsed < SUITE_RUNTIME_BUDGET_S
    assert not violations, (
        f"{len(violations)} of {len(ratios)} ratios outside [1-1e-9, {RATIO_CAP_EUCLID}]; "
        f"worst low {min(ratios):.4f}; first few: {violations[:5]}"
    )


def test_criterion_2_window_ratio_suite_squared(suite_squared):
    runs = suite_squared
    ratios, violations, exempted = [], [], []
    for cfg, rep, _ in runs:
        for s in rep.steps:
            if s.ratio is None:
                continue
            ratios.append(s.ratio)
            if not (1 - 1e-9 <= s.ratio <= RATIO_CAP_SQ):
                if s.sigma_sq is not None and s.sigma_sq > SIGMA_SQ_EXEMPTION:
                    exempted.append((cfg.seed, s.N, s.ratio, s.sigma_sq))
                else:
                    violations.append((cfg.generator.kind, cfg.seed, s.N, s.ratio, s.sigma_sq))
    _verdict(
        "2 window-ratio(squared)",
        not violations,
        f"{len(ratios)} ratios, median {float(np.median(ratios)):.3f}, "
        f"max {max(ratios):.3f}, min {min(ratios):.4f}, "
        f"{len(exempted)} poorly-separable steps reported not failed, "
        f"{len(violations)} violations",
    )
    assert not violations, f"first few: {violations[:5]}"


def test_criterion_3_bucket_count_bound(suite_euclid):
    runs, _ = suite_euclid
    worst_margin = math.inf
    failures = []
    for cfg, rep, stream in runs:
        t_max = max(s.index_count for s in rep.steps)
        opt_prime = 0.0
        for s in rep.steps:
            if s.oracle_cost is None or s.oracle_cost == 0.0:
                continue
            window = stream[max(0, s.N - cfg.W) : s.N]
            coords = np.asarray([q.coords for q in window])
            dmat = np.sqrt(((coords[:, None, :] - coords[None, :, :]) ** 2).sum(-1))
            positive = dmat[dmat > 0]
            if positive.size:
                opt_prime = max(opt_prime, s.oracle_cost / float(positive.min()))
        bound = 8 * cfg.k * (1 + math.log2(cfg.n)) * (1 + math.log2(opt_prime + 2))
        worst_margin = min(worst_margin, bound / t_max)
        if t_max > bound:
            failures.append((cfg.generator.kind, cfg.seed, t_max, bound))
    _verdict(
        "3 bucket-count-bound",
        not failures,
        f"worst bound/T margin {worst_margin:.1f}x across {len(runs)} streams",
    )
    assert not failures


def test_criterion_4_smoothness_suite():
    rng = np.random.default_rng(40)
    held = violations = 0
    trials = 0
    while trials < 200:
        total = int(rng.integers(3, 16))
        na = int(rng.integers(0, total))
        nb = int(rng.integers(1, total - na + 1))
        nc = total - na - nb
        pts = rng.uniform(0, 1, size=(total, 2))
        pool = [Point(i + 1, tuple(map(float, pts[i])), i + 1) for i in range(total)]
        a, b, c = pool[:na], pool[na : na + nb], pool[na + nb :]
        a = [p for p in a if p.coords not in {q.coords for q in b}]
        k = int(rng.integers(1, 4))
        mode = EUCLID if trials % 2 == 0 else SQ
        res = check_smoothness_bound(a, b, c, k, mode, beta=2.0, gamma=8.0)
        trials += 1
        if res.hypotheses_met:
            held += 1
            if not res.holds:
                violations += 1
    # the non-smoothness counterexample: k distinct points split so A holds a
    # point B lacks, plus one fresh point
    fixture = check_smoothness_bound(
        [Point(1, (0.0, 0.0), 1)], [Point(2, (5.0, 5.0), 2)], [Point(3, (9.0, 1.0), 3)],
        2, EUCLID, beta=2.0, gamma=8.0,
    )
    fixture_ok = fixture.hyp_cost and not fixture.hyp_cardinality and not fixture.holds
    passed = violations == 0 and fixture_ok and held >= 20
    _verdict(
        "4 smoothness-surrogate",
        passed,
        f"200 triples, hypotheses held on {held}, {violations} bound violations, "
        f"counterexample hypotheses-not-met={fixture_ok}",
    )
    assert violations == 0
    assert fixture_ok
    assert held >= 20


def _coreset_instance(i: int, technique: str):
    n = [80, 160, 300, 500][i % 4]
    d = [1, 2, 3][i % 3]
    k = [1, 2, 3][(i // 3) % 3]
    eps = 0.1 if i % 2 == 0 else 0.2
    gen = (
        GeneratorSpec("uniform_box")
        if i % 4 < 2
        else GeneratorSpec("gaussian_mixture", m=max(2, k), spread=0.8)
    )
    cfg = ExperimentConfig(
        pipeline="kmedian", generator=gen, n=n, d=d, W=4, k=k, seed=500 + i,
    )
    return generate_stream(cfg), n, d, k, eps


@pytest.mark.parametrize("technique", ["hpm", "chen"])
def test_criterion_5_coreset_suites(technique):
    worst_err = 0.0
    worst_slack = 0.0
    for i in range(20):
        pts, n, d, k, eps = _coreset_instance(i, technique)
        part = partition_for(technique, pts, k, eps, EUCLID, seed=600 + i)
        budget = default_budget_fn(technique, n, d, k, eps, 0.1)
        K = unified_sample(pts, part, eps, 0.1, budget, seed=700 + i)
        coords = np.asarray([p.coords for p in pts])
        lo, hi = coords.min(axis=0), coords.max(axis=0)
        span = np.maximum(hi - lo, 1e-3)
        crng = np.random.default_rng(800 + i)
        inst_worst = 0.0
        for _ in range(100):
            centers = CenterSet(
                tuple(tuple(crng.uniform(lo - 0.1 * span, hi + 0.1 * span)) for _ in range(k))
            )
            inst_worst = max(inst_worst, coreset_cost_error(pts, K, centers, EUCLID))
        assert inst_worst <= 1.5 * eps, f"instance {i}: error {inst_worst} > 1.5*{eps}"
        worst_err = max(worst_err, inst_worst / eps)
        slack = slack_perturbation_check(pts, technique, k, eps, trials=50, seed=900 + i)
        assert slack <= 3 * eps, f"instance {i}: slack {slack} > 3*{eps}"
        worst_slack = max(worst_slack, slack / eps)
    _verdict(
        f"5 coreset-suite({technique})",
        True,
        f"20 instances, worst error {worst_err:.3f}x eps (cap 1.5x), "
        f"worst slack {worst_slack:.3f}x eps (cap 3x)",
    )


def test_criterion_6_merge_reduce_density():
    n, eps, leaf = 256, 0.4, 8
    worst_density = 0.0
    worst_cost_err = 0.0
    for seed in range(20):
        technique = "chen" if seed % 2 == 0 else "hpm"
        rng = np.random.default_rng(1000 + seed)
        pts = [Point(i + 1, tuple(map(float, rng.uniform(0, 1, 2))), i + 1) for i in range(n)]
        st = MergeReduceState(
            k=2, eps=eps, technique=technique, n_max=n, seed=seed, leaf_capacity=leaf
        )
        for p in pts:
            st.insert(p)
        top_level = max(lvl for lvl, slots in st.levels.items() if any(slots))
        bucket = st.levels[top_level][0] or st.levels[top_level][1]
        geo = bucket.geometry
        raw: dict[str, float] = {}
        for p in pts:
            rid = geo.locate(p.coords)
            raw[rid] = raw.get(rid, 0.0) + 1.0
        approx: dict[str, float] = {}
        for cp in bucket.points:
            approx[cp.region_id] = approx.get(cp.region_id, 0.0) + cp.weight
        for rid in set(raw) | set(approx):
            diff = abs(raw.get(rid, 0.0) - approx.get(rid, 0.0))
            assert diff <= eps * n, f"seed {seed}: region {rid} density error {diff}"
            worst_density = max(worst_density, diff / (eps * n))
        cs = mr_coreset(st)
        crng = np.random.default_rng(2000 + seed)
        for _ in range(50):
            centers = CenterSet(tuple(tuple(crng.uniform(0, 1, 2)) for _ in range(2)))
            err = coreset_cost_error(pts, cs, centers, EUCLID)
            assert err <= eps, f"seed {seed}: cost error {err} > {eps}"
            worst_cost_err = max(worst_cost_err, err / eps)
    _verdict(
        "6 merge-reduce-density",
        True,
        f"20 seeds, worst density {worst_density:.3f}x cap, "
        f"worst cost error {worst_cost_err:.3f}x eps",
    )


def test_criterion_7_sw_coreset():
    n, W, eps, k = 600, 128, 0.4, 2
    cfg = ExperimentConfig(
        pipeline="kmedian", generator=GeneratorSpec("uniform_box"), n=n, d=2, W=W, k=k, seed=7,
    )
    pts = generate_stream(cfg)
    st = SwCoresetState(W=W, eps=eps, k=k, technique="chen", seed=7, n_max=n + 1, leaf_capacity=8)
    crng = np.random.default_rng(77)
    probes = [
        CenterSet(tuple(tuple(crng.uniform(-0.2, 1.2, 2)) for _ in range(k))) for _ in range(50)
    ]
    worst_err = 0.0
    warn_steps = 0
    t_max = 0
    for i, p in enumerate(pts):
        st.insert(p)
        t_max = max(t_max, st.index_count)
        K = st.query()
        window = pts[max(0, i + 1 - W) : i + 1]
        for centers in probes:
            full = cost(window, centers, EUCLID)
            if full == 0.0:
                continue
            err = abs(full - K.cost(centers, EUCLID)) / full
            assert err <= 3 * eps, f"step {st.N}: query error {err} > {3 * eps}"
            worst_err = max(worst_err, err)
        s = len(K.points)
        soft = 4 * s * eps**-2 * math.log2(max(st.N, 2))
        hard = 4 * soft
        if st.index_count > soft:
            warn_steps += 1
        assert st.index_count <= hard, f"step {st.N}: t={st.index_count} > {hard}"
    _verdict(
        "7 sw-coreset",
        True,
        f"query error max {worst_err:.3f} (cap {3 * eps}), t max {t_max}, "
        f"{warn_steps} soft-bound warnings",
    )


def test_criterion_8_eps_sample():
    pop_rng = np.random.default_rng(88)
    pop = pop_rng.uniform(0, 1, size=(10_000, 2))
    size = eps_sample_size(4, 0.2, 0.1, len(pop))
    grid = np.linspace(0, 1, 6)
    good = 0
    for t in range(100):
        idx = np.random.default_rng(3000 + t).choice(len(pop), size=size, replace=False)
        sub = pop[idx]
        worst = 0.0
        for xi in range(6):
            for xj in range(xi, 6):
                mask_pop_x = (pop[:, 0] >= grid[xi]) & (pop[:, 0] <= grid[xj])
                mask_sub_x = (sub[:, 0] >= grid[xi]) & (sub[:, 0] <= grid[xj])
                for yi in range(6):
                    for yj in range(yi, 6):
                        in_pop = np.mean(
                            mask_pop_x & (pop[:, 1] >= grid[yi]) & (pop[:, 1] <= grid[yj])
                        )
                        in_sub = np.mean(
                            mask_sub_x & (sub[:, 1] >= grid[yi]) & (sub[:, 1] <= grid[yj])
                        )
                        worst = max(worst, abs(float(in_pop) - float(in_sub)))
        if worst <= 0.2:
            good += 1
    _verdict("8 eps-sample", good >= 90, f"sample size {size}, {good}/100 trials within 0.2")
    assert good >= 90


def test_criterion_9_determinism_golden_files(tmp_path):
    GOLDEN_DIR.mkdir(exist_ok=True)
    stream = tmp_path / "stream.csv"
    assert cli_main(["gen", "--n", "40", "--d", "2", "--seed", "11", "--out", str(stream)]) == 0
    cases = {
        "kmedian_small.json": [
            "kmedian", "--stream", str(stream), "--window", "8", "--k", "2",
            "--seed", "11", "--oracle-every", "10",
        ],
        "coreset_small.json": [
            "coreset", "--stream", str(stream), "--window", "8", "--k", "2",
            "--eps", "0.4", "--technique", "chen", "--seed", "11", "--oracle-every", "10",
        ],
    }
    mismatches = []
    for name, args in cases.items():
        out1 = tmp_path / f"run1_{name}"
        out2 = tmp_path / f"run2_{name}"
        cli_main(args + ["--report", str(out1)])
        cli_main(args + ["--report", str(out2)])
        if out1.read_bytes() != out2.read_bytes():
            mismatches.append((name, "rerun"))
        golden = GOLDEN_DIR / name
        if not golden.exists():
            golden.write_bytes(out1.read_bytes())  # first run freezes the golden file
        elif golden.read_bytes() != out1.read_bytes():
            mismatches.append((name, "golden"))
    _verdict("9 determinism", not mismatches, f"{len(cases)} golden reports byte-compared")
    assert not mismatches


def test_acceptance_stream_determinism():
    cfg = _suite_configs(EUCLID)[0]
    a = generate_stream(cfg)
    b = generate_stream(cfg)
    assert [p.coords for p in a] == [p.coords for p in b]
