"""Gumbel noise, Gumbel-Max sampling, Gaussian reparametrization and
perturb-and-parse tree sampling.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence``; a
``(seed, *stream)`` pair always yields the same bits, and distinct stream keys
give independent substreams.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .chart import RelaxedParse, hard_eisner, relaxed_eisner
from .trees import DomainError, check_weights, valid_arc_mask

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]

# keeps -log(-log u) finite at both ends of the unit interval
_U_EPS = 2.0**-53


def make_rng(seed: SeedLike, *stream: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        if stream:
            raise ValueError("stream keys need an integer seed or a SeedSequence")
        return seed
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + stream)
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=stream)
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(seed: SeedLike, *stream: int) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + stream)
    if isinstance(seed, np.random.Generator):
        raise ValueError("cannot derive substreams from a Generator")
    return np.random.SeedSequence(int(seed), spawn_key=stream)


def gumbel(rng: np.random.Generator, size=None) -> np.ndarray:
    u = np.clip(rng.random(size), _U_EPS, 1.0 - _U_EPS)
    return -np.log(-np.log(u))


def sample_gumbel(n: int, seed: SeedLike) -> np.ndarray:
    """Standard Gumbel noise for every real arc of an ``n``-word sentence.

    Positions that are not arcs (self loops, arcs into the root) stay 0.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    p = gumbel(make_rng(seed), (n + 1, n + 1))
    p[~valid_arc_mask(n)] = 0.0
    return p


def gumbel_max_categorical(log_weights, seed: SeedLike, size: int | None = None):
    """``argmax_k(log_weights[k] + g_k)``, distributed as softmax(log_weights)."""
    lw = np.asarray(log_weights, dtype=np.float64)
    if lw.ndim != 1 or lw.size == 0:
        raise ValueError("log_weights must be a non-empty vector")
    if not np.all(np.isfinite(lw)):
        raise DomainError("log_weights must be finite")
    rng = make_rng(seed)
    if size is None:
        return int(np.argmax(lw + gumbel(rng, lw.shape)))
    return np.argmax(lw + gumbel(rng, (size, lw.size)), axis=1)


@dataclass(frozen=True)
class GaussianParams:
    """Diagonal Gaussian with mean ``m`` and standard deviation ``v``."""

    m: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.m, dtype=np.float64))
        v = np.atleast_1d(np.asarray(self.v, dtype=np.float64))
        if m.shape != v.shape or m.ndim != 1:
            raise ValueError(f"mean {m.shape} and std {v.shape} must be vectors of equal size")
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(v))):
            raise DomainError("Gaussian parameters must be finite")
        if np.any(v <= 0):
            raise DomainError("standard deviations must be strictly positive")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "v", v)

    @property
    def dim(self) -> int:
        return self.m.shape[0]


def reparam_gaussian(params: GaussianParams, seed: SeedLike) -> tuple[np.ndarray, np.ndarray]:
    """Sample ``z = m + v * e`` with ``e ~ N(0, I)``; returns ``(z, e)``."""
    e = make_rng(seed).standard_normal(params.dim)
    return params.m + params.v * e, e


def perturb_and_parse_hard(w, seed: SeedLike) -> np.ndarray:
    w = check_weights(w)
    return hard_eisner(w + sample_gumbel(w.shape[0] - 1, seed))[0]


def perturb_and_parse_relaxed(w, tau: float, seed: SeedLike) -> RelaxedParse:
    """Relaxed parse of Gumbel-perturbed weights.

    The noise does not depend on ``w``, so gradients from
    :func:`relax_eisner.backward.backward_relaxed` are gradients w.r.t. ``w``.
    """
    w = check_weights(w)
    return relaxed_eisner(w + sample_gumbel(w.shape[0] - 1, seed), tau)
