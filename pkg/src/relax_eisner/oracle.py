"""Brute-force ground truth on small sentences.

Everything here enumerates projective trees by filtering head vectors and
never touches the chart code, so it can be used to check it.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .chart import Chart, ItemKind
from .trees import DomainError, heads_to_matrix, is_valid_tree, sentence_length

MAX_N = 8


@dataclass(frozen=True)
class TreeSet:
    n: int
    heads: np.ndarray  # (count, n), canonical lexicographic order

    @property
    def trees(self) -> list[np.ndarray]:
        return [heads_to_matrix(h) for h in self.heads]

    @property
    def matrices(self) -> np.ndarray:
        count = len(self.heads)
        t = np.zeros((count, self.n + 1, self.n + 1))
        rows = np.arange(count)[:, None]
        t[rows, self.heads, np.arange(1, self.n + 1)[None, :]] = 1.0
        return t

    def __len__(self) -> int:
        return len(self.heads)


@dataclass(frozen=True)
class OracleBest:
    tree: np.ndarray
    score: float
    tied: bool
    maximizers: list[np.ndarray]


def _check_n(n: int) -> None:
    if n < 1:
        raise DomainError("n must be at least 1")
    if n > MAX_N:
        raise DomainError(
            f"enumeration refused for n={n}: the candidate space grows like n^n, "
            f"so the oracle is limited to n <= {MAX_N}"
        )


def reachability(heads) -> np.ndarray:
    """``reach[u, v]`` is true when ``v`` lies in the subtree of ``u``."""
    heads = np.asarray(heads)
    n = len(heads)
    reach = np.eye(n + 1, dtype=bool)
    reach[heads, np.arange(1, n + 1)] = True
    # transitive closure by repeated squaring
    for _ in range(max(1, int(np.ceil(np.log2(n + 1))))):
        reach = reach | ((reach.astype(np.int64) @ reach.astype(np.int64)) > 0)
    return reach


def projective_by_closure(heads) -> bool:
    heads = np.asarray(heads)
    reach = reachability(heads)
    for m, h in enumerate(heads, start=1):
        lo, hi = sorted((h, m))
        if not reach[h, lo + 1 : hi].all():
            return False
    return True


def _crosses(h1: int, m1: int, h2: int, m2: int) -> bool:
    a, b = sorted((h1, m1))
    c, d = sorted((h2, m2))
    return a < c < b < d or c < a < d < b


@functools.lru_cache(maxsize=None)
def _enumerate_heads(n: int) -> tuple[tuple[int, ...], ...]:
    heads = [0] * n
    found = []

    def extend(m: int) -> None:
        if m > n:
            cand = tuple(heads)
            if is_valid_tree(heads_to_matrix(cand), n) and projective_by_closure(cand):
                found.append(cand)
            return
        for h in range(n + 1):
            if h == m:
                continue
            # necessary conditions only; the full filter runs on complete vectors
            v = h
            while 0 < v < m:
                v = heads[v - 1]
                if v == m:
                    break
            if v == m:
                continue
            if any(_crosses(h, m, heads[q - 1], q) for q in range(1, m)):
                continue
            heads[m - 1] = h
            extend(m + 1)
        heads[m - 1] = 0

    extend(1)
    return tuple(sorted(found))


def enumerate_projective(n: int) -> TreeSet:
    _check_n(n)
    return TreeSet(n, np.array(_enumerate_heads(n), dtype=np.int64).reshape(-1, n))


def oracle_count(n: int) -> int:
    return len(enumerate_projective(n))


def _scores(w) -> tuple[TreeSet, np.ndarray]:
    w = np.asarray(w, dtype=np.float64)
    n = sentence_length(w)
    ts = enumerate_projective(n)
    cols = np.arange(1, n + 1)
    return ts, w[ts.heads, cols[None, :]].sum(axis=1)


def oracle_best(w) -> OracleBest:
    ts, scores = _scores(w)
    best = scores.max()
    tol = 1e-12 * max(1.0, abs(best))
    winners = np.flatnonzero(scores >= best - tol)
    trees = [heads_to_matrix(ts.heads[i]) for i in winners]
    return OracleBest(trees[0], float(best), len(winners) > 1, trees)


def _tree_probs(w) -> tuple[TreeSet, np.ndarray, float]:
    ts, scores = _scores(w)
    top = scores.max()
    log_z = top + np.log(np.sum(np.exp(scores - top)))
    return ts, np.exp(scores - log_z), float(log_z)


def oracle_logZ(w) -> float:
    return _tree_probs(w)[2]


def oracle_marginals(w) -> np.ndarray:
    ts, p, _ = _tree_probs(w)
    return np.tensordot(p, ts.matrices, axes=1)


def oracle_entropy(w) -> float:
    _, p, _ = _tree_probs(w)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def oracle_kl_to_uniform(w) -> float:
    ts, p, _ = _tree_probs(w)
    p = p[p > 0]
    return float(np.sum(p * np.log(p * len(ts))))


def derivations(chart: Chart) -> list[tuple[float, np.ndarray]]:
    """Every derivation of the goal item with its backpointer probability.

    Walks the grammar recursively from the goal item, multiplying the soft
    backpointer weights along each derivation; returns ``(prob, tree)`` pairs.
    """
    n = chart.n

    @functools.lru_cache(maxsize=None)
    def expand(kind: ItemKind, i: int, j: int) -> tuple[tuple[float, frozenset], ...]:
        if i == j:
            return ((1.0, frozenset()),)
        out = []
        probs = chart.backpointers(kind, i, j)
        for p, k in zip(probs, chart.splits(kind, i, j)):
            if kind == ItemKind.RT:
                left, right, arc = (ItemKind.RC, i, k), (ItemKind.LC, k + 1, j), (i, j)
            elif kind == ItemKind.LT:
                left, right, arc = (ItemKind.RC, i, k), (ItemKind.LC, k + 1, j), (j, i)
            elif kind == ItemKind.RC:
                left, right, arc = (ItemKind.RT, i, k), (ItemKind.RC, k, j), None
            else:
                left, right, arc = (ItemKind.LC, i, k), (ItemKind.LT, k, j), None
            for pl, al in expand(*left):
                for pr, ar in expand(*right):
                    arcs = al | ar if arc is None else al | ar | {arc}
                    out.append((float(p) * pl * pr, arcs))
        return tuple(out)

    result = []
    for p, arcs in expand(ItemKind.RC, 0, n):
        t = np.zeros((n + 1, n + 1))
        for h, m in arcs:
            t[h, m] = 1.0
        result.append((p, t))
    return result


def derivation_expectation(chart: Chart) -> np.ndarray:
    return sum(p * t for p, t in derivations(chart))
