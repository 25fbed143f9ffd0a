"""Command-line entry points: run experiments, generate streams, run property suites.

Subcommands:
  kmedian  sliding-window clustering over a CSV stream, JSON report out
  coreset  sliding-window coreset maintenance over a CSV stream
  gen      write a synthetic stream to CSV
  verify   run the desk-scale property suites (smoothness, slack, eps-sample)

A JSON file passed via --config supplies defaults for any flag; the
SWCLUSTER_SEED environment variable overrides the seed everywhere.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .core import DistanceMode, Point
from .coreset import eps_sample_size, slack_perturbation_check
from .harness import (
    ExperimentConfig,
    GeneratorSpec,
    generate_stream,
    report_to_json,
    run_experiment,
)
from .offline import check_smoothness_bound


def _load_config_defaults(argv: list[str]) -> dict:
    if "--config" not in argv:
        return {}
    path = argv[argv.index("--config") + 1]
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _seed_override(seed: int) -> int:
    env = os.environ.get("SWCLUSTER_SEED")
    return int(env) if env else seed


def _write_or_print(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _add_common(sub: argparse.ArgumentParser, defaults: dict) -> None:
    sub.add_argument("--config", help="JSON file with default option values")
    sub.add_argument("--seed", type=int, default=defaults.get("seed", 1))
    sub.add_argument("--report", default=defaults.get("report"))


def _run_stream_pipeline(args: argparse.Namespace, pipeline: str) -> int:
    gen = GeneratorSpec(kind="file", path=args.stream)
    cfg = ExperimentConfig(
        pipeline=pipeline,
        generator=gen,
        n=0,
        d=0,
        W=args.window,
        k=args.k,
        mode=DistanceMode.parse(args.mode),
        eps=getattr(args, "eps", 0.2),
        beta=getattr(args, "beta", 2.0),
        gamma=getattr(args, "gamma", 8.0),
        seed=_seed_override(args.seed),
        oracle_every=args.oracle_every,
        technique=getattr(args, "technique", "chen"),
        leaf_capacity=getattr(args, "leaf_capacity", None),
        timings=args.timings,
    )
    report = run_experiment(cfg)
    _write_or_print(report_to_json(report), args.report)
    if report.hard_failures:
        for f in report.hard_failures:
            print(f"hard invariant failure: {f}", file=sys.stderr)
        return 1
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig(
        pipeline="kmedian",
        generator=GeneratorSpec(
            kind=args.generator, m=args.m, spread=args.spread, period=args.period
        ),
        n=args.n,
        d=args.d,
        W=1,
        k=1,
        seed=_seed_override(args.seed),
    )
    points = generate_stream(cfg)
    lines = [",".join(repr(c) for c in p.coords) for p in points]
    _write_or_print("\n".join(lines), args.out)
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    seed = _seed_override(args.seed)
    rng = np.random.default_rng(seed)
    failures = 0

    # smoothness surrogate on random triples
    held = violated = 0
    for trial in range(args.triples):
        sizes = rng.integers(1, 6, size=3)
        pts = rng.uniform(0, 1, size=(int(sizes.sum()), 2))
        arrivals = iter(range(1, len(pts) + 1))
        groups = []
        start = 0
        for s in sizes:
            groups.append(
                [
                    Point(id=i + 1, coords=tuple(map(float, pts[start + i])), arrival=next(arrivals))
                    for i in range(int(s))
                ]
            )
            start += int(s)
        a, b, c = groups
        a = [p for p in a if p.coords not in {q.coords for q in b}]
        k = int(rng.integers(1, 4))
        try:
            res = check_smoothness_bound(a, b, c, k, DistanceMode.EUCLIDEAN, 2.0, 8.0)
        except ValueError:
            continue
        if res.hypotheses_met:
            held += 1
            if not res.holds:
                violated += 1
    ok = violated == 0
    print(f"smoothness: {held}/{args.triples} triples with hypotheses held, "
          f"{violated} bound violations -> {'PASS' if ok else 'FAIL'}")
    failures += 0 if ok else 1

    # per-region slack after tolerated deletions
    for technique in ("hpm", "chen"):
        pts = [
            Point(id=i + 1, coords=(float(x), float(y)), arrival=i + 1)
            for i, (x, y) in enumerate(rng.uniform(0, 1, size=(args.slack_points, 2)))
        ]
        err = slack_perturbation_check(pts, technique, 2, 0.2, trials=20, seed=seed)
        ok = err <= 3 * 0.2
        print(f"slack[{technique}]: max relative error {err:.4f} "
              f"(cap {3 * 0.2:.2f}) -> {'PASS' if ok else 'FAIL'}")
        failures += 0 if ok else 1

    # eps-sample deviation over lattice boxes
    pop = rng.uniform(0, 1, size=(2000, 2))
    size = eps_sample_size(4, 0.2, 0.1, len(pop))
    good = 0
    trials = 50
    grid = np.linspace(0, 1, 6)
    for t in range(trials):
        sub = pop[np.random.default_rng(seed + t).choice(len(pop), size=size, replace=False)]
        worst = 0.0
        for xi in range(6):
            for xj in range(xi, 6):
                for yi in range(6):
                    for yj in range(yi, 6):
                        lo = (grid[xi], grid[yi])
                        hi = (grid[xj], grid[yj])
                        inside_pop = np.mean(
                            (pop[:, 0] >= lo[0]) & (pop[:, 0] <= hi[0])
                            & (pop[:, 1] >= lo[1]) & (pop[:, 1] <= hi[1])
                        )
                        inside_sub = np.mean(
                            (sub[:, 0] >= lo[0]) & (sub[:, 0] <= hi[0])
                            & (sub[:, 1] >= lo[1]) & (sub[:, 1] <= hi[1])
                        )
                        worst = max(worst, abs(float(inside_pop) - float(inside_sub)))
        if worst <= 0.2:
            good += 1
    ok = good >= int(0.9 * trials)
    print(f"eps-sample: {good}/{trials} trials within deviation 0.2 -> "
          f"{'PASS' if ok else 'FAIL'}")
    failures += 0 if ok else 1
    return 1 if failures else 0


def build_parser(defaults: dict) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swcluster")
    subs = parser.add_subparsers(dest="command", required=True)

    km = subs.add_parser("kmedian", help="sliding-window k-median/k-means clustering")
    km.add_argument("--stream", required=True, help="input CSV, one point per line")
    km.add_argument("--window", type=int, required=True)
    km.add_argument("--k", type=int, required=True)
    km.add_argument("--beta", type=float, default=defaults.get("beta", 2.0))
    km.add_argument("--gamma", type=float, default=defaults.get("gamma", 8.0))
    km.add_argument("--mode", default=defaults.get("mode", "euclid"))
    km.add_argument("--oracle-every", type=int, default=defaults.get("oracleEvery", 0))
    km.add_argument("--timings", action="store_true")
    _add_common(km, defaults)

    cs = subs.add_parser("coreset", help="sliding-window coreset maintenance")
    cs.add_argument("--stream", required=True)
    cs.add_argument("--window", type=int, required=True)
    cs.add_argument("--k", type=int, required=True)
    cs.add_argument("--eps", type=float, default=defaults.get("eps", 0.2))
    cs.add_argument("--technique", default=defaults.get("technique", "chen"),
                    choices=["hpm", "chen"])
    cs.add_argument("--mode", default=defaults.get("mode", "euclid"))
    cs.add_argument("--leaf-capacity", type=int, default=defaults.get("leafCapacity"))
    cs.add_argument("--oracle-every", type=int, default=defaults.get("oracleEvery", 0))
    cs.add_argument("--timings", action="store_true")
    _add_common(cs, defaults)

    gen = subs.add_parser("gen", help="generate a synthetic stream CSV")
    gen.add_argument("--generator", default="uniform_box",
                     choices=["uniform_box", "gaussian_mixture", "drift"])
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--d", type=int, default=2)
    gen.add_argument("--m", type=int, default=2)
    gen.add_argument("--spread", type=float, default=0.5)
    gen.add_argument("--period", type=int, default=100)
    gen.add_argument("--out", default=None)
    _add_common(gen, defaults)

    ver = subs.add_parser("verify", help="run the property suites")
    ver.add_argument("--triples", type=int, default=60)
    ver.add_argument("--slack-points", type=int, default=150)
    _add_common(ver, defaults)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    defaults = _load_config_defaults(argv)
    parser = build_parser(defaults)
    args = parser.parse_args(argv)
    if args.command == "kmedian":
        return _run_stream_pipeline(args, "kmedian")
    if args.command == "coreset":
        return _run_stream_pipeline(args, "coreset")
    if args.command == "gen":
        return _cmd_gen(args)
    if args.command == "verify":
        return _cmd_verify(args)
    parser.error(f"unknown command {args.command}")
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
