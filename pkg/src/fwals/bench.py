"""Wall-clock scaling of weight selection as the number of auxiliary regressors grows."""

from __future__ import annotations

import csv
import io
import statistics
import time
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CapacityError, ConfigError
from .focus import linear
from .methods import estimate, parse_methods
from .simulate import BasicDesignConfig, gen_basic
from .weights import FIC_MAX_K2

AGGREGATES = ("mean", "median_of_means")
BENCH_TAU = 0.3
BENCH_R2 = 0.5
# methods that enumerate all 2^k2 sub-models
ENUMERATING = {"fic", "fic_orig", "mmse", "mmse_orig", "saic", "sbic"}


@dataclass
class BenchResult:
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    COLUMNS = ("method", "k2", "mean_seconds", "repeats", "mu")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([r["method"], r["k2"], format(r["mean_seconds"], ".6g"), r["repeats"],
                        repr(float(r["mu"]))])
        return buf.getvalue()

    def seconds(self, method: str, k2: int) -> float:
        for r in self.rows:
            if r["method"] == method and r["k2"] == k2:
                return r["mean_seconds"]
        raise KeyError(f"no timing for {method} at k2={k2}")


def _aggregate(times: Sequence[float], how: str) -> float:
    if how == "mean":
        return statistics.fmean(times)
    # median of means over up to five consecutive blocks
    n_blocks = min(5, len(times))
    blocks = np.array_split(np.asarray(times), n_blocks)
    return float(statistics.median(float(b.mean()) for b in blocks))


def run_bench(k2_list: Sequence[int], N: int = 100, repeats: int = 3,
              methods=("fwals", "fic", "mmse"), seed: int = 0,
              aggregate: str = "mean") -> BenchResult:
    """Time each method on one basic-design dataset per k2.

    Data generation is outside the timed region. Each (method, k2) cell runs
    one untimed warm-up fit and then ``repeats`` timed fits on the
    monotonic performance counter. Cells beyond a method's enumeration cap
    are skipped with a note.
    """
    if repeats < 3:
        raise ConfigError(f"repeats must be at least 3, got {repeats}")
    if aggregate not in AGGREGATES:
        raise ConfigError(f"unknown aggregate {aggregate!r}; choose from {AGGREGATES}")
    methods = parse_methods(methods)
    k2_list = sorted(set(int(k) for k in k2_list))
    if not k2_list or k2_list[0] < 1:
        raise ConfigError("k2 values must be positive integers")
    out = BenchResult()
    for m in methods:
        for k2 in k2_list:
            if m in ENUMERATING and k2 > FIC_MAX_K2:
                out.notes.append(f"skipped {m} at k2={k2}: exceeds sub-model cap {FIC_MAX_K2}")
                continue
            cfg = BasicDesignConfig(N=N, k2=k2, tau=BENCH_TAU, r2=BENCH_R2)
            draw = gen_basic(cfg, np.random.default_rng([int(seed), k2]))
            fs = linear(np.ones(cfg.k1))
            times = []
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                try:
                    res = estimate(draw.dataset, fs, m, seed=seed)
                except CapacityError as exc:
                    out.notes.append(f"skipped {m} at k2={k2}: {exc}")
                    continue
                for _ in range(repeats):
                    t0 = time.perf_counter()
                    estimate(draw.dataset, fs, m, seed=seed)
                    times.append(time.perf_counter() - t0)
            out.rows.append({"method": m, "k2": k2, "mean_seconds": _aggregate(times, aggregate),
                             "repeats": repeats, "mu": res.mu})
    return out
