"""Reverse-mode differentiation through the relaxed parser and the
log-partition chart, plus a central finite-difference checker."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels as K
from .chart import Chart, ContribChart, log_partition
from .trees import ShapeError, check_weights, valid_arc_mask


@dataclass(frozen=True)
class GradBuffers:
    """Adjoints of every chart quantity after a backward run."""

    dc: np.ndarray
    dct: np.ndarray
    db: np.ndarray
    da: np.ndarray
    dW: np.ndarray
    dT: np.ndarray


def backward_buffers(chart: Chart, contrib: ContribChart, dT) -> GradBuffers:
    if chart.mode != K.SMOOTH:
        raise ValueError("backward_relaxed needs a chart from inside_relaxed")
    n = chart.n
    dT = np.asarray(dT, dtype=np.float64)
    if dT.shape != (n + 1, n + 1):
        raise ShapeError(f"dT has shape {dT.shape}, expected {(n + 1, n + 1)}")
    if contrib.n != n:
        raise ShapeError("chart and contribution chart disagree on n")
    if not np.all(np.isfinite(dT)):
        raise ValueError("dT must be finite")
    dct, db, dc, da, dW = K.relaxed_backward(chart.off, chart.a, chart.b, contrib.ct, dT, chart.tau, n)
    return GradBuffers(dc=dc, dct=dct, db=db, da=da, dW=dW, dT=dT)


def backward_relaxed(chart: Chart, contrib: ContribChart, dT) -> np.ndarray:
    """Gradient w.r.t. arc weights given the gradient w.r.t. the soft tree."""
    return backward_buffers(chart, contrib, dT).dW


def marginals(w) -> np.ndarray:
    """Arc marginals, i.e. the gradient of log Z w.r.t. the arc weights."""
    _, chart = log_partition(w)
    n = chart.n
    dc = np.zeros_like(chart.c)
    dc[K.RC, 0, n] = 1.0
    db = np.zeros_like(chart.b)
    K.backward_inside(chart.off, chart.a, chart.b, dc, db, 1.0, K.LOGSUMEXP, n)
    return K.prob_arcs_from_items(dc, n)


def marginals_jvp(w, v) -> tuple[np.ndarray, np.ndarray]:
    """Marginals and their derivative along direction ``v`` (a Hessian-vector
    product of log Z)."""
    w = check_weights(w)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != w.shape:
        raise ShapeError(f"direction shape {v.shape} does not match weights {w.shape}")
    _, chart = log_partition(w)
    return K.logsumexp_tangent(chart.off, chart.b, v, chart.n)


@dataclass(frozen=True)
class GradCheckReport:
    max_abs_err: float
    max_rel_err: float
    worst_coordinate: tuple[int, int]

    def passed(self, rtol: float) -> bool:
        return self.max_rel_err < rtol


def grad_check(
    f: Callable[[np.ndarray], float],
    grad: np.ndarray,
    w0,
    h: float = 1e-5,
    mask: np.ndarray | None = None,
) -> GradCheckReport:
    """Compare an analytic gradient to central finite differences of ``f``.

    Only valid arc positions are probed unless ``mask`` says otherwise. The
    relative error is normwise: the largest absolute discrepancy divided by
    the largest gradient magnitude seen on either side.
    """
    if not h > 0:
        raise ValueError("step h must be positive")
    w0 = np.array(w0, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != w0.shape:
        raise ShapeError(f"gradient shape {grad.shape} does not match point {w0.shape}")
    if mask is None:
        mask = valid_arc_mask(w0.shape[0] - 1)
    numeric = np.zeros_like(w0)
    for idx in zip(*(ix.tolist() for ix in np.nonzero(mask))):
        old = w0[idx]
        w0[idx] = old + h
        fp = f(w0)
        w0[idx] = old - h
        fm = f(w0)
        w0[idx] = old
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise FloatingPointError(f"non-finite function value when perturbing coordinate {idx}")
        numeric[idx] = (fp - fm) / (2 * h)
    err = np.where(mask, np.abs(grad - numeric), 0.0)
    worst = np.unravel_index(int(np.argmax(err)), err.shape)
    max_abs = float(err[worst])
    scale = max(float(np.max(np.abs(grad[mask]), initial=0.0)), float(np.max(np.abs(numeric[mask]), initial=0.0)))
    max_rel = 0.0 if max_abs == 0.0 else max_abs / max(scale, np.finfo(float).tiny)
    return GradCheckReport(max_abs, max_rel, (int(worst[0]), int(worst[1])))
