"""Benchmark harness: element insertion and fused expression evaluation.

Run ``bench --help`` for the command line.  Results are written as CSV (see
:func:`hybridsparse.io.write_csv_results`); a median/mean summary goes to
stderr unless ``BENCH_QUIET=1``.
"""

from __future__ import annotations

import argparse
import math
import os
import statistics
import sys
import time
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import convert
from .expr import eval_diagmat, eval_trace
from .hybrid import SpMat, sprandu
from .io import BenchRecord, write_csv_results
from .storage.coo import CooStorage, coo_append_many, coo_canonicalize
from .storage.csc import CscStorage, csc_insert_many
from .storage.rbt import RbtStorage, rbt_insert_many

EXPERIMENTS = ("insert-unordered", "insert-quasi-ordered", "expr-trace", "expr-diagmat")
DEFAULT_DENSITIES = (1e-4, 1e-3, 1e-2, 1e-1)
STRATEGIES = ("csc", "coo", "rbt", "hybrid")
EXPRESSIONS = ("trace", "diagmat")


class ConfigError(ValueError):
    pass


class CorrectnessError(AssertionError):
    pass


@dataclass
class BenchConfig:
    experiment: str = "insert-unordered"
    n: int = 2000
    densities: Sequence[float] = DEFAULT_DENSITIES
    reps: int = 10
    seed: int = 0
    out: str = "-"
    # direct CSC insertion is skipped above this density in unordered mode
    csc_max_density: float = 0.01
    strategies: Sequence[str] = STRATEGIES
    quiet: bool = field(default_factory=lambda: os.environ.get("BENCH_QUIET", "") == "1")

    def validate(self) -> "BenchConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {EXPERIMENTS}")
        if self.n < 2:
            raise ConfigError(f"n must be at least 2, got {self.n}")
        if self.reps < 1:
            raise ConfigError(f"reps must be at least 1, got {self.reps}")
        if not self.densities:
            raise ConfigError("no densities given")
        for d in self.densities:
            if not (0.0 < d <= 1.0) or math.isnan(d):
                raise ConfigError(f"density {d} outside (0, 1]")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ConfigError(f"unknown strategy {s!r}; choose from {STRATEGIES}")
        return self


# -- workloads -------------------------------------------------------------------


def insertion_workload(n: int, density: float, ordered: bool, seed) -> tuple[np.ndarray, np.ndarray]:
    """Linear indices and values for one build.

    Positions are distinct.  Unordered mode shuffles them; quasi-ordered mode
    makes every index larger than the one before it.
    """
    rng = np.random.default_rng(seed)
    k = int(round(density * n * n))
    indices = rng.choice(n * n, size=k, replace=False).astype(np.int64)
    if ordered:
        indices.sort()
    values = 1.0 - rng.random(k)
    return indices, values


def _build_csc(n, rows, cols, values, ordered):
    return SpMat._wrap(csc_insert_many(CscStorage.empty(n, n), rows, cols, values))


def _build_coo(n, rows, cols, values, ordered):
    coo = coo_append_many(CooStorage.empty(n, n), rows, cols, values)
    if not ordered:
        coo_canonicalize(coo)
    return SpMat._wrap(coo)


def _build_rbt(n, indices, values):
    return rbt_insert_many(RbtStorage(n, n), indices, values)


BUILDERS: dict[str, Callable] = {
    "csc": lambda n, idx, rows, cols, v, ordered: _build_csc(n, rows, cols, v, ordered),
    "coo": lambda n, idx, rows, cols, v, ordered: _build_coo(n, rows, cols, v, ordered),
    "rbt": lambda n, idx, rows, cols, v, ordered: SpMat._wrap(_build_rbt(n, idx, v)),
    "hybrid": lambda n, idx, rows, cols, v, ordered: SpMat._wrap(
        convert.rbt_to_csc(_build_rbt(n, idx, v))
    ),
}


def time_build(strategy: str, n: int, indices, values, ordered: bool) -> tuple[float, SpMat]:
    """Wall-clock seconds for one complete build, allocation included."""
    cols = indices // n
    rows = indices - cols * n
    build = BUILDERS[strategy]
    start = time.perf_counter()
    m = build(n, indices, rows, cols, values, ordered)
    return time.perf_counter() - start, m


def warm_up() -> None:
    """Compile every jitted path once so the first timed rep is not penalised."""
    for ordered in (False, True):
        idx, vals = insertion_workload(8, 0.25, ordered, 0)
        for s in STRATEGIES:
            time_build(s, 8, idx, vals, ordered)
    a, b = sprandu(8, 8, 0.3, 1), sprandu(8, 8, 0.3, 2)
    for fuse in (True, False):
        eval_trace(a.t() @ b, fuse=fuse)
        eval_diagmat(a + b, fuse=fuse)


def _log(cfg: BenchConfig, message: str) -> None:
    if not cfg.quiet:
        print(message, file=sys.stderr, flush=True)


# -- experiments -------------------------------------------------------------------


def bench_insert(cfg: BenchConfig) -> list[BenchRecord]:
    """Time matrix construction by element insertion under each strategy.

    Every rep checks that all strategies built the same matrix and raises
    :class:`CorrectnessError` otherwise.
    """
    cfg.validate()
    ordered = cfg.experiment == "insert-quasi-ordered"
    experiment = "insert-quasi-ordered" if ordered else "insert-unordered"
    records = []
    for di, density in enumerate(cfg.densities):
        for rep in range(cfg.reps):
            indices, values = insertion_workload(cfg.n, density, ordered, (cfg.seed, di, rep))
            built = {}
            for strategy in cfg.strategies:
                if strategy == "csc" and not ordered and density > cfg.csc_max_density:
                    continue
                seconds, m = time_build(strategy, cfg.n, indices, values, ordered)
                built[strategy] = m
                records.append(
                    BenchRecord(experiment, strategy, cfg.n, cfg.n, density, rep, seconds)
                )
                _log(cfg, f"{experiment} d={density:g} rep={rep} {strategy}: {seconds:.6f}s")
            names = list(built)
            for other in names[1:]:
                if not built[names[0]].equals(built[other]):
                    raise CorrectnessError(
                        f"{experiment} d={density:g} rep={rep}: {names[0]} and {other} "
                        "built different matrices"
                    )
    return records


def _rel_close(x: float, y: float, rtol: float) -> bool:
    return abs(x - y) <= rtol * max(abs(x), abs(y), 1e-300) or x == y


def bench_expr(cfg: BenchConfig, expressions: Sequence[str] = EXPRESSIONS) -> list[BenchRecord]:
    """Time ``trace(A.t() @ B)`` and ``diagmat(A + B)`` with and without fusion.

    Both paths must agree to a relative 1e-10 before their timings are kept.
    """
    cfg.validate()
    records = []
    for di, density in enumerate(cfg.densities):
        for rep in range(cfg.reps):
            rng = np.random.default_rng((cfg.seed, di, rep))
            a = sprandu(cfg.n, cfg.n, density, rng)
            b = sprandu(cfg.n, cfg.n, density, rng)
            for name in expressions:
                results = {}
                for label, fuse in (("fused", True), ("unfused", False)):
                    start = time.perf_counter()
                    if name == "trace":
                        results[label] = eval_trace(a.t() @ b, fuse=fuse)
                    else:
                        results[label] = eval_diagmat(a + b, fuse=fuse)
                    seconds = time.perf_counter() - start
                    records.append(
                        BenchRecord(f"expr-{name}", label, cfg.n, cfg.n, density, rep, seconds)
                    )
                    _log(cfg, f"expr-{name} d={density:g} rep={rep} {label}: {seconds:.6f}s")
                _check_agreement(name, results["fused"], results["unfused"], density, rep)
    return records


def _check_agreement(name, fused, unfused, density, rep) -> None:
    where = f"expr-{name} d={density:g} rep={rep}"
    if name == "trace":
        if not _rel_close(fused, unfused, 1e-10):
            raise CorrectnessError(f"{where}: fused {fused!r} vs unfused {unfused!r}")
        return
    fr, fc, fv = fused.triplet_arrays()
    ur, uc, uv = unfused.triplet_arrays()
    if not (np.array_equal(fr, ur) and np.array_equal(fc, uc)):
        raise CorrectnessError(f"{where}: fused and unfused diagonals differ in pattern")
    if not np.allclose(fv, uv, rtol=1e-10, atol=0.0):
        raise CorrectnessError(f"{where}: fused and unfused diagonals differ in value")


def summarize(records: Sequence[BenchRecord]) -> list[tuple]:
    """``(experiment, format, density, median, mean, reps)`` per group."""
    groups = defaultdict(list)
    for r in records:
        groups[(r.experiment, r.format, r.density)].append(r.seconds)
    return [
        (exp, fmt, d, statistics.median(t), statistics.fmean(t), len(t))
        for (exp, fmt, d), t in groups.items()
    ]


def run(cfg: BenchConfig) -> list[BenchRecord]:
    cfg.validate()
    warm_up()
    if cfg.experiment.startswith("insert"):
        return bench_insert(cfg)
    return bench_expr(cfg, (cfg.experiment.split("-", 1)[1],))


# -- command line ----------------------------------------------------------------


def _densities(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bench", description="Sparse matrix insertion and expression benchmarks."
    )
    p.add_argument("--experiment", choices=EXPERIMENTS, default="insert-unordered")
    p.add_argument("--n", type=int, default=2000, help="matrix side length (default 2000)")
    p.add_argument(
        "--densities",
        type=_densities,
        default=list(DEFAULT_DENSITIES),
        help="comma-separated fractions (default 0.0001,0.001,0.01,0.1)",
    )
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="CSV output path, '-' for stdout")
    p.add_argument(
        "--csc-max-density",
        type=float,
        default=0.01,
        help="skip direct CSC insertion above this density in unordered mode",
    )
    p.add_argument(
        "--strategies",
        default=",".join(STRATEGIES),
        help="comma-separated subset of csc,coo,rbt,hybrid",
    )
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    cfg = BenchConfig(
        experiment=args.experiment,
        n=args.n,
        densities=args.densities,
        reps=args.reps,
        seed=args.seed,
        out=args.out,
        csc_max_density=args.csc_max_density,
        strategies=[s for s in args.strategies.split(",") if s],
    )
    try:
        cfg.validate()
    except ConfigError as exc:
        print(f"bench: config error: {exc}", file=sys.stderr)
        return 2
    try:
        records = run(cfg)
    except CorrectnessError as exc:
        print(f"bench: correctness check failed: {exc}", file=sys.stderr)
        return 3
    write_csv_results(records, sys.stdout if cfg.out == "-" else cfg.out)
    for exp, fmt, d, med, mean, reps in summarize(records):
        _log(cfg, f"{exp:22s} {fmt:8s} d={d:<8g} median={med:.6f}s mean={mean:.6f}s reps={reps}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
