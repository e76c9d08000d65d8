"""Timing of the relaxed forward and backward passes across sentence lengths."""

from __future__ import annotations

import timeit
from dataclasses import dataclass

import numpy as np

from .backward import backward_relaxed
from .chart import relaxed_eisner
from .stochastic import child_seed, make_rng

RATIO_TARGET = 8.0
RATIO_TOL = 0.4
BUDGET_N80 = 0.250


@dataclass(frozen=True)
class BenchRow:
    n: int
    seconds: float  # best per-sentence time over the repeats

    @property
    def per_second(self) -> float:
        return 1.0 / self.seconds


@dataclass(frozen=True)
class BenchReport:
    rows: list[BenchRow]
    tau: float

    def ratios(self) -> list[tuple[int, int, float]]:
        out = []
        for prev, cur in zip(self.rows, self.rows[1:]):
            if cur.n == 2 * prev.n:
                out.append((prev.n, cur.n, cur.seconds / prev.seconds))
        return out

    def scaling_ok(self) -> bool:
        lo, hi = RATIO_TARGET * (1 - RATIO_TOL), RATIO_TARGET * (1 + RATIO_TOL)
        return all(lo <= r <= hi for _, _, r in self.ratios())

    def budget_ok(self) -> bool:
        return all(r.seconds < BUDGET_N80 for r in self.rows if r.n == 80)


def forward_backward(w: np.ndarray, G: np.ndarray, tau: float) -> np.ndarray:
    tree, chart, contrib = relaxed_eisner(w, tau)
    return backward_relaxed(chart, contrib, G)


def time_forward_backward(n: int, tau: float = 1.0, seed: int = 0, repeat: int = 7, min_time: float = 0.2) -> float:
    rng = make_rng(child_seed(seed, n))
    w = rng.standard_normal((n + 1, n + 1))
    G = rng.standard_normal((n + 1, n + 1))
    forward_backward(w, G, tau)  # compile and warm caches
    timer = timeit.Timer(lambda: forward_backward(w, G, tau))
    number = 1
    while timer.timeit(number) < min_time / repeat:
        number *= 2
    return min(timer.repeat(repeat=repeat, number=number)) / number


def run_bench(sizes=(10, 20, 40, 80), tau: float = 1.0, seed: int = 0, repeat: int = 7) -> BenchReport:
    sizes = sorted(int(n) for n in sizes)
    if not sizes or sizes[0] < 1:
        raise ValueError("sizes must be positive integers")
    rows = [BenchRow(n, time_forward_backward(n, tau, seed, repeat)) for n in sizes]
    return BenchReport(rows, tau)
