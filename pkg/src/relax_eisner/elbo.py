"""Loss composition for the semi-supervised tree VAE.

The decoder is abstract: anything with a ``log_prob(T, z)`` method returning
the value and its gradients w.r.t. ``T`` and ``z`` can be plugged in.
:class:`StubDecoder` is a linear stand-in that exercises every gradient path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Protocol, Sequence

import numpy as np

from .backward import backward_relaxed, marginals, marginals_jvp
from .chart import log_partition
from .stochastic import GaussianParams, SeedLike, child_seed, perturb_and_parse_relaxed, reparam_gaussian
from .trees import (
    DomainError,
    ShapeError,
    check_weights,
    is_projective,
    is_valid_tree,
    tree_score,
    valid_arc_mask,
)

DEFAULT_BETA_Z = 0.01
DEFAULT_BETA_T = 0.0


class Decoder(Protocol):
    def log_prob(self, T: np.ndarray, z: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        """Return ``(log p(s | T, z), d/dT, d/dz)``."""


@dataclass(frozen=True)
class StubDecoder:
    """``log p(s | T, z) = <G, T> + <g, z> - c0``."""

    G: np.ndarray
    g: np.ndarray
    c0: float = 0.0

    def log_prob(self, T, z):
        T = np.asarray(T, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        if T.shape != np.shape(self.G) or z.shape != np.shape(self.g):
            raise ShapeError(f"stub expects T {np.shape(self.G)} and z {np.shape(self.g)}")
        value = float(np.sum(self.G * T) + np.dot(self.g, z) - self.c0)
        return value, np.array(self.G, dtype=np.float64), np.array(self.g, dtype=np.float64)


class GaussianGrad(NamedTuple):
    dm: np.ndarray
    dv: np.ndarray


class UnsupElbo(NamedTuple):
    value: float
    dW: np.ndarray
    d_gparams: GaussianGrad


class SupElbo(NamedTuple):
    value: float
    d_gparams: GaussianGrad


def gaussian_kl(params: GaussianParams) -> float:
    """KL from a diagonal Gaussian to the standard normal."""
    m, v = params.m, params.v
    return float(0.5 * np.sum(m**2 + v**2 - np.log(v**2) - 1.0))


def gaussian_kl_grad(params: GaussianParams) -> GaussianGrad:
    return GaussianGrad(params.m.copy(), params.v - 1.0 / params.v)


def _valid(w: np.ndarray) -> np.ndarray:
    return np.where(valid_arc_mask(w.shape[0] - 1), w, 0.0)


def tree_entropy(w) -> float:
    """Entropy of the log-linear distribution over projective trees."""
    w = check_weights(w)
    log_z, _ = log_partition(w)
    return float(log_z - np.sum(marginals(w) * _valid(w)))


def tree_entropy_grad(w) -> np.ndarray:
    # dH/dw = -Hess(log Z) w
    w = check_weights(w)
    _, mu_dot = marginals_jvp(w, _valid(w))
    return -mu_dot


def log_tree_count(n: int) -> float:
    return log_partition(np.zeros((n + 1, n + 1)))[0]


def tree_kl_to_uniform(w) -> float:
    """KL divergence from the tree distribution to the uniform prior."""
    w = check_weights(w)
    return log_tree_count(w.shape[0] - 1) - tree_entropy(w)


def tree_kl_to_uniform_grad(w) -> np.ndarray:
    return -tree_entropy_grad(w)


def _check_gcn_shapes(O, T, M_head, M_mod, M_self):
    O = np.asarray(O, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if O.ndim != 2 or T.shape != (O.shape[0], O.shape[0]):
        raise ShapeError(f"adjacency {T.shape} does not match {O.shape[0]} positions")
    mats = [np.asarray(M, dtype=np.float64) for M in (M_head, M_mod, M_self)]
    for M in mats:
        if M.ndim != 2 or M.shape[1] != O.shape[1] or M.shape[0] != mats[2].shape[0]:
            raise ShapeError(f"transform of shape {M.shape} incompatible with inputs of size {O.shape[1]}")
    return O, T, mats


def soft_gcn_layer(O, T, M_head, M_mod, M_self) -> np.ndarray:
    """One graph-convolution step over a (soft) adjacency matrix.

    Row ``i`` of the result only sees positions ``< i`` through the arcs, so it
    can feed an autoregressive decoder. ``O`` holds one input vector per
    position, root included; the transforms map input size to output size.
    """
    O, T, (M_head, M_mod, M_self) = _check_gcn_shapes(O, T, M_head, M_mod, M_self)
    P_head, P_mod, P_self = O @ M_head.T, O @ M_mod.T, O @ M_self.T
    A_head = np.tril(T.T, -1)  # A_head[i, h] = T[h, i] for h < i
    A_mod = np.tril(T, -1)  # A_mod[i, m] = T[i, m] for m < i
    from_heads = np.zeros_like(P_self)
    from_mods = np.zeros_like(P_self)
    for src in range(O.shape[0]):
        from_heads += A_head[:, src, None] * P_head[src]
        from_mods += A_mod[:, src, None] * P_mod[src]
    return np.tanh(P_self + from_heads + from_mods)


def hard_gcn_layer(O, heads, M_head, M_mod, M_self) -> np.ndarray:
    """Same layer for a binary tree given as a head vector (``heads[m-1]`` heads ``m``)."""
    heads = np.asarray(heads, dtype=np.int64)
    n = heads.shape[0]
    O, _, (M_head, M_mod, M_self) = _check_gcn_shapes(O, np.zeros((n + 1, n + 1)), M_head, M_mod, M_self)
    P_head, P_mod, P_self = O @ M_head.T, O @ M_mod.T, O @ M_self.T
    children = [[] for _ in range(n + 1)]
    for m, h in enumerate(heads, start=1):
        children[h].append(m)
    out = np.empty_like(P_self)
    for i in range(n + 1):
        from_heads = np.zeros(P_self.shape[1])
        if i >= 1 and heads[i - 1] < i:
            from_heads += P_head[heads[i - 1]]
        from_mods = np.zeros(P_self.shape[1])
        for m in sorted(children[i]):
            if m < i:
                from_mods += P_mod[m]
        out[i] = np.tanh(P_self[i] + from_heads + from_mods)
    return out


def _decode(decoder: Decoder, T, z, where: str):
    try:
        value, dT, dz = decoder.log_prob(T, z)
    except Exception as exc:
        raise RuntimeError(f"decoder failed on {where}: {exc}") from exc
    return float(value), np.asarray(dT, dtype=np.float64), np.asarray(dz, dtype=np.float64)


def unsup_elbo_estimate(
    w,
    gparams: GaussianParams,
    decoder: Decoder,
    tau: float,
    seed: SeedLike,
    beta_z: float = DEFAULT_BETA_Z,
    beta_T: float = DEFAULT_BETA_T,
    where: str = "unlabeled sentence",
) -> UnsupElbo:
    """Single-sample ELBO estimate for an unlabeled sentence, with gradients.

    The tree is a relaxed perturb-and-parse sample and ``z`` a reparametrized
    Gaussian draw; the two use independent substreams of ``seed``.
    """
    w = check_weights(w)
    if beta_z < 0 or beta_T < 0:
        raise ValueError("KL weights must be non-negative")
    T, chart, contrib = perturb_and_parse_relaxed(w, tau, child_seed(seed, 0))
    z, e = reparam_gaussian(gparams, child_seed(seed, 1))
    value, dT, dz = _decode(decoder, T, z, where)
    dW = backward_relaxed(chart, contrib, dT)
    dm, dv = dz, dz * e
    if beta_z:
        value -= beta_z * gaussian_kl(gparams)
        kg = gaussian_kl_grad(gparams)
        dm, dv = dm - beta_z * kg.dm, dv - beta_z * kg.dv
    if beta_T:
        value -= beta_T * tree_kl_to_uniform(w)
        dW = dW - beta_T * tree_kl_to_uniform_grad(w)
    return UnsupElbo(value, dW, GaussianGrad(dm, dv))


def sup_elbo_estimate(
    T_gold,
    gparams: GaussianParams,
    decoder: Decoder,
    seed: SeedLike,
    beta_z: float = DEFAULT_BETA_Z,
    where: str = "labeled sentence",
) -> SupElbo:
    """Single-sample ELBO estimate when the tree is observed."""
    T_gold = np.asarray(T_gold)
    if not is_valid_tree(T_gold) or not is_projective(T_gold):
        raise DomainError(f"{where}: gold tree is not a valid projective tree")
    if beta_z < 0:
        raise ValueError("KL weight must be non-negative")
    z, e = reparam_gaussian(gparams, child_seed(seed, 1))
    value, _, dz = _decode(decoder, T_gold.astype(np.float64), z, where)
    dm, dv = dz, dz * e
    if beta_z:
        value -= beta_z * gaussian_kl(gparams)
        kg = gaussian_kl_grad(gparams)
        dm, dv = dm - beta_z * kg.dm, dv - beta_z * kg.dv
    return SupElbo(value, GaussianGrad(dm, dv))


@dataclass(frozen=True)
class LossBundle:
    """Semi-supervised loss split into its three sums.

    ``discriminative`` is the summed negative log-likelihood of the gold
    trees, so ``total = discriminative - sup_elbo - unsup_elbo``. Gradients are
    those of ``total`` and are listed per sentence as ``(dW, GaussianGrad)``.
    """

    discriminative: float
    sup_elbo: float
    unsup_elbo: float
    kl_z_weight: float
    kl_T_weight: float
    total: float
    labeled_grads: list = field(default_factory=list)
    unlabeled_grads: list = field(default_factory=list)


def semi_supervised_loss(
    labeled: Sequence[tuple],
    unlabeled: Sequence[tuple],
    decoder: Decoder,
    tau: float,
    seed: SeedLike,
    beta_z: float = DEFAULT_BETA_Z,
    beta_T: float = DEFAULT_BETA_T,
) -> LossBundle:
    """Loss over a labeled batch of ``(w, T_gold, gparams)`` and an unlabeled
    batch of ``(w, gparams)``. Sentence ``i`` of each batch draws its noise from
    its own substream of ``seed``, so terms are reproducible independently."""
    disc = sup = unsup = 0.0
    lab_grads, unlab_grads = [], []
    for idx, (w, T_gold, gparams) in enumerate(labeled):
        w = check_weights(w)
        T_gold = np.asarray(T_gold)
        where = f"labeled sentence {idx}"
        if T_gold.shape != w.shape or not is_valid_tree(T_gold) or not is_projective(T_gold):
            raise DomainError(f"{where}: gold tree is not a valid projective tree for its weights")
        log_z, _ = log_partition(w)
        disc += log_z - tree_score(T_gold, w)
        d_disc = marginals(w) - T_gold
        s = sup_elbo_estimate(T_gold, gparams, decoder, child_seed(seed, 0, idx), beta_z, where)
        sup += s.value
        lab_grads.append((d_disc, GaussianGrad(-s.d_gparams.dm, -s.d_gparams.dv)))
    for idx, (w, gparams) in enumerate(unlabeled):
        u = unsup_elbo_estimate(
            w, gparams, decoder, tau, child_seed(seed, 1, idx), beta_z, beta_T, f"unlabeled sentence {idx}"
        )
        unsup += u.value
        unlab_grads.append((-u.dW, GaussianGrad(-u.d_gparams.dm, -u.d_gparams.dv)))
    return LossBundle(
        discriminative=disc,
        sup_elbo=sup,
        unsup_elbo=unsup,
        kl_z_weight=beta_z,
        kl_T_weight=beta_T,
        total=disc - sup - unsup,
        labeled_grads=lab_grads,
        unlabeled_grads=unlab_grads,
    )
