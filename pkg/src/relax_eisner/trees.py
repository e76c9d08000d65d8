"""Dependency tree representations, validity predicates and scoring.

A tree over a sentence of ``n`` words is an ``(n+1, n+1)`` adjacency matrix
``t`` with ``t[h, m] == 1`` when word ``h`` heads word ``m``; position 0 is the
artificial root. The equivalent head vector has length ``n`` and stores the
head of word ``m`` at index ``m - 1``, which is the layout of the CoNLL HEAD
column.
"""

from __future__ import annotations

import numpy as np

MASK_VALUE = -1e9


class ShapeError(ValueError):
    """Array dimensions disagree with the sentence length."""


class DomainError(ValueError):
    """Input lies outside the domain of an operation."""


def sentence_length(w) -> int:
    w = np.asarray(w)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {w.shape}")
    n = w.shape[0] - 1
    if n < 1:
        raise ShapeError("a sentence needs at least one word besides the root")
    return n


def check_weights(w) -> np.ndarray:
    """Return ``w`` as a float64 array after shape and finiteness checks."""
    w = np.asarray(w, dtype=np.float64)
    sentence_length(w)
    if not np.all(np.isfinite(w)):
        raise DomainError("arc weights must be finite")
    return w


def valid_arc_mask(n: int) -> np.ndarray:
    """Boolean mask of positions that denote real arcs (h != m, m != 0)."""
    mask = ~np.eye(n + 1, dtype=bool)
    mask[:, 0] = False
    return mask


def mask_weights(w, value: float = MASK_VALUE) -> np.ndarray:
    w = np.array(w, dtype=np.float64)
    w[~valid_arc_mask(sentence_length(w))] = value
    return w


def heads_to_matrix(heads) -> np.ndarray:
    heads = np.asarray(heads, dtype=np.int64)
    n = heads.shape[0]
    if heads.ndim != 1 or n < 1:
        raise ShapeError("head vector must be one-dimensional and non-empty")
    if np.any(heads < 0) or np.any(heads > n):
        raise DomainError(f"heads must lie in 0..{n}")
    t = np.zeros((n + 1, n + 1), dtype=np.int64)
    t[heads, np.arange(1, n + 1)] = 1
    return t


def matrix_to_heads(t) -> np.ndarray:
    """Head vector of a binary tree matrix (argmax per modifier column)."""
    t = np.asarray(t)
    sentence_length(t)
    return np.argmax(t[:, 1:], axis=0).astype(np.int64)


def as_heads(tree) -> np.ndarray:
    tree = np.asarray(tree)
    if tree.ndim == 2:
        return matrix_to_heads(tree)
    return tree.astype(np.int64)


def arcs_to_matrix(arcs, n: int) -> np.ndarray:
    t = np.zeros((n + 1, n + 1), dtype=np.int64)
    for h, m in arcs:
        t[h, m] = 1
    return t


def is_valid_tree(t, n: int | None = None) -> bool:
    """True iff ``t`` is a spanning arborescence rooted at vertex 0."""
    t = np.asarray(t)
    if n is None:
        n = sentence_length(t)
    if t.shape != (n + 1, n + 1):
        raise ShapeError(f"expected shape {(n + 1, n + 1)}, got {t.shape}")
    if not np.all((t == 0) | (t == 1)):
        return False
    cols = t.sum(axis=0)
    if cols[0] != 0 or np.any(cols[1:] != 1) or np.any(np.diag(t) != 0):
        return False
    heads = matrix_to_heads(t)
    for m in range(1, n + 1):
        # following heads from any word must hit the root within n steps
        v = m
        for _ in range(n):
            v = heads[v - 1]
            if v == 0:
                break
        if v != 0:
            return False
    return True


def is_projective(t) -> bool:
    """True iff every word strictly inside an arc descends from its head."""
    heads = as_heads(t)
    n = heads.shape[0]

    def descends(k: int, h: int) -> bool:
        while k != 0:
            k = heads[k - 1]
            if k == h:
                return True
        return h == 0

    for m in range(1, n + 1):
        h = heads[m - 1]
        lo, hi = min(h, m), max(h, m)
        for k in range(lo + 1, hi):
            if not descends(k, h):
                return False
    return True


def tree_score(t, w) -> float:
    t = np.asarray(t, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if t.shape != w.shape:
        raise ShapeError(f"tree shape {t.shape} does not match weights {w.shape}")
    return float(np.sum(t * w))


def uas(predicted, gold) -> float:
    """Unlabeled attachment score: fraction of words with the gold head."""
    p, g = as_heads(predicted), as_heads(gold)
    if p.shape != g.shape:
        raise ShapeError(f"length mismatch: {p.shape[0]} vs {g.shape[0]} words")
    return float(np.mean(p == g))
