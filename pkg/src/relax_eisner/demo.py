"""Gradient-flow demonstration: recover a target tree by ascending the
overlap between the target and the relaxed parse."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backward import backward_relaxed
from .chart import hard_eisner, relaxed_eisner
from .oracle import enumerate_projective
from .stochastic import SeedLike, make_rng
from .trees import DomainError, heads_to_matrix, is_projective, is_valid_tree, valid_arc_mask


@dataclass(frozen=True)
class RecoverResult:
    target: np.ndarray
    weights: np.ndarray
    steps: int
    recovered: bool
    overlap: float


def random_projective_tree(n: int, seed: SeedLike) -> np.ndarray:
    """Uniform draw from the enumerated projective trees of ``n`` words."""
    trees = enumerate_projective(n)
    return heads_to_matrix(trees.heads[int(make_rng(seed).integers(len(trees)))])


def recover(
    target,
    seed: SeedLike,
    steps: int = 500,
    lr: float = 0.5,
    tau: float = 1.0,
) -> RecoverResult:
    """Start from random weights and step along the gradient of
    ``<target, SoftTree(w)>`` until the hard parse equals ``target``."""
    target = np.asarray(target, dtype=np.int64)
    if not is_valid_tree(target) or not is_projective(target):
        raise DomainError("target must be a valid projective tree")
    if steps < 0 or not lr > 0:
        raise ValueError("steps must be non-negative and lr positive")
    n = target.shape[0] - 1
    mask = valid_arc_mask(n)
    w = np.where(mask, make_rng(seed).standard_normal((n + 1, n + 1)), 0.0)
    G = target.astype(np.float64)
    step = 0
    while True:
        if np.array_equal(hard_eisner(w)[0], target):
            break
        if step == steps:
            break
        tree, chart, contrib = relaxed_eisner(w, tau)
        w += lr * np.where(mask, backward_relaxed(chart, contrib, G), 0.0)
        step += 1
    overlap = float(np.sum(G * relaxed_eisner(w, tau).tree))
    return RecoverResult(target, w, step, bool(np.array_equal(hard_eisner(w)[0], target)), overlap)
