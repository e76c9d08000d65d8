"""Eisner charts: hard argmax parsing, the relaxed inside pass with soft
backpointers, contribution reconstruction, and the log-partition function."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .trees import DomainError, check_weights, is_projective, is_valid_tree, tree_score


class ItemKind(enum.IntEnum):
    RT = K.RT  # incomplete, arc i -> j
    LT = K.LT  # incomplete, arc j -> i
    RC = K.RC  # complete, headed by i
    LC = K.LC  # complete, headed by j


@dataclass(frozen=True)
class Chart:
    """Antecedent scores ``a``, soft backpointers ``b`` and item values ``c``.

    ``a`` and ``b`` are flat ``(4, n_splits)`` arrays addressed through
    ``off``; use :meth:`scores`, :meth:`backpointers` and :meth:`splits` rather
    than indexing them directly. ``mode`` records whether items combine their
    antecedents by softmax-weighted expectation or by log-sum-exp.
    """

    n: int
    tau: float
    mode: int
    off: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def splits(self, kind: ItemKind, i: int, j: int) -> range:
        if kind == ItemKind.RC:
            return range(i + 1, j + 1)
        return range(i, j)

    def _slice(self, i: int, j: int) -> slice:
        if not 0 <= i < j <= self.n:
            raise IndexError(f"no split vector for span ({i}, {j})")
        o = int(self.off[i, j])
        return slice(o, o + j - i)

    def scores(self, kind: ItemKind, i: int, j: int) -> np.ndarray:
        return self.a[kind, self._slice(i, j)]

    def backpointers(self, kind: ItemKind, i: int, j: int) -> np.ndarray:
        return self.b[kind, self._slice(i, j)]

    def value(self, kind: ItemKind, i: int, j: int) -> float:
        return float(self.c[kind, i, j])

    @property
    def root_value(self) -> float:
        return float(self.c[ItemKind.RC, 0, self.n])


@dataclass(frozen=True)
class ContribChart:
    """Contribution ``ct[kind, i, j]`` of every item to the goal item."""

    n: int
    ct: np.ndarray

    def value(self, kind: ItemKind, i: int, j: int) -> float:
        return float(self.ct[kind, i, j])


class RelaxedParse(NamedTuple):
    tree: np.ndarray
    chart: Chart
    contrib: ContribChart


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not tau > 0 or not np.isfinite(tau):
        raise DomainError(f"temperature must be positive and finite, got {tau}")
    return tau


def hard_eisner(w) -> tuple[np.ndarray, float]:
    """Highest-scoring projective tree and its score.

    Ties between split points go to the smallest split index.
    """
    w = check_weights(w)
    n = w.shape[0] - 1
    c, bp = K.inside_max(w)
    heads = np.zeros(n, dtype=np.int64)
    stack = [(K.RC, 0, n)]
    while stack:
        kind, i, j = stack.pop()
        if i == j:
            continue
        k = int(bp[kind, i, j])
        if kind == K.RT or kind == K.LT:
            if kind == K.RT:
                heads[j - 1] = i
            else:
                heads[i - 1] = j
            stack.append((K.RC, i, k))
            stack.append((K.LC, k + 1, j))
        elif kind == K.RC:
            stack.append((K.RT, i, k))
            stack.append((K.RC, k, j))
        else:
            stack.append((K.LC, i, k))
            stack.append((K.LT, k, j))
    t = np.zeros((n + 1, n + 1), dtype=np.int64)
    t[heads, np.arange(1, n + 1)] = 1
    return t, float(c[K.RC, 0, n])


def inside_relaxed(w, tau: float = 1.0) -> Chart:
    """Inside pass where every argmax is replaced by a peaked softmax."""
    w = check_weights(w)
    tau = _check_tau(tau)
    off, a, b, c = K.inside(w, tau, K.SMOOTH)
    return Chart(w.shape[0] - 1, tau, K.SMOOTH, off, a, b, c)


def backptr_reconstruct(chart: Chart) -> tuple[ContribChart, np.ndarray]:
    """Push the goal item's unit contribution down the soft backpointers.

    Returns the contribution chart and the soft tree read off its trapezoids.
    """
    if chart.b.shape != chart.a.shape or chart.c.shape != (4, chart.n + 1, chart.n + 1):
        raise RuntimeError("malformed chart: buffer shapes disagree with n")
    ct = K.reconstruct(chart.off, chart.b, chart.n)
    return ContribChart(chart.n, ct), K.prob_arcs_from_items(ct, chart.n)


def relaxed_eisner(w, tau: float = 1.0) -> RelaxedParse:
    """Soft tree for ``w`` plus the charts needed by the backward pass."""
    w = check_weights(w)
    tau = _check_tau(tau)
    n = w.shape[0] - 1
    # same as inside_relaxed followed by backptr_reconstruct, in one compiled call
    off, a, b, c, ct, tree = K.relaxed_forward(w, tau)
    return RelaxedParse(tree, Chart(n, tau, K.SMOOTH, off, a, b, c), ContribChart(n, ct))


def log_partition(w) -> tuple[float, Chart]:
    """Log of the summed exponentiated scores of all projective trees."""
    w = check_weights(w)
    off, a, b, c = K.inside(w, 1.0, K.LOGSUMEXP)
    chart = Chart(w.shape[0] - 1, 1.0, K.LOGSUMEXP, off, a, b, c)
    return chart.root_value, chart


def tree_log_prob(t, w) -> float:
    """Log-probability of ``t`` under the log-linear model over projective trees."""
    w = check_weights(w)
    if not is_valid_tree(t, w.shape[0] - 1) or not is_projective(t):
        raise DomainError("tree must be a valid projective dependency tree")
    log_z, _ = log_partition(w)
    return tree_score(t, w) - log_z
