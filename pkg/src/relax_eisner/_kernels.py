"""Compiled chart loops for the first-order projective parser.

Every kernel walks spans bottom-up (or top-down) with explicit loops so the
work is exactly the cubic number of split evaluations. Item kinds are plain
integers so they can be used inside nopython code:

    RT  right trapezoid (i, j): incomplete span, arc i -> j
    LT  left trapezoid (i, j):  incomplete span, arc j -> i
    RC  right triangle (i, j):  complete span headed by i
    LC  left triangle (i, j):   complete span headed by j

Split vectors of every span are stored in flat arrays of shape
``(4, n_splits)``; span ``(i, j)`` owns the slice ``off[i, j] : off[i, j] + j - i``.
Slot ``r`` maps to split ``k = i + r`` except for RC, where ``k = i + 1 + r``.
"""

import numpy as np
from numba import njit

RT, LT, RC, LC = 0, 1, 2, 3

SMOOTH = 0
LOGSUMEXP = 1


@njit(cache=True, nogil=True)
def span_offsets(n):
    off = np.zeros((n + 1, n + 1), dtype=np.int64)
    pos = 0
    for l in range(1, n + 1):
        for i in range(n - l + 1):
            off[i, i + l] = pos
            pos += l
    return off, pos


@njit(cache=True, nogil=True, inline="always")
def _combine(a, b, kd, o, l, tau, mode):
    # fills b[kd, o:o+l] = softmax(a[kd, o:o+l] / tau) and returns the item value
    m = a[kd, o]
    for r in range(1, l):
        if a[kd, o + r] > m:
            m = a[kd, o + r]
    s = 0.0
    for r in range(l):
        e = np.exp((a[kd, o + r] - m) / tau)
        b[kd, o + r] = e
        s += e
    val = 0.0
    for r in range(l):
        b[kd, o + r] /= s
        val += b[kd, o + r] * a[kd, o + r]
    if mode == LOGSUMEXP:
        return m + tau * np.log(s)
    return val


@njit(cache=True, nogil=True)
def inside(w, tau, mode):
    n = w.shape[0] - 1
    off, total = span_offsets(n)
    a = np.zeros((4, total))
    b = np.zeros((4, total))
    c = np.zeros((4, n + 1, n + 1))
    for l in range(1, n + 1):
        for i in range(n - l + 1):
            j = i + l
            o = off[i, j]
            for r in range(l):
                k = i + r
                v = c[RC, i, k] + c[LC, k + 1, j]
                a[RT, o + r] = v
                a[LT, o + r] = v
            c[RT, i, j] = w[i, j] + _combine(a, b, RT, o, l, tau, mode)
            c[LT, i, j] = w[j, i] + _combine(a, b, LT, o, l, tau, mode)
            # triangles read the trapezoid of the same span at the boundary split
            for r in range(l):
                k = i + 1 + r
                a[RC, o + r] = c[RT, i, k] + c[RC, k, j]
            c[RC, i, j] = _combine(a, b, RC, o, l, tau, mode)
            for r in range(l):
                k = i + r
                a[LC, o + r] = c[LC, i, k] + c[LT, k, j]
            c[LC, i, j] = _combine(a, b, LC, o, l, tau, mode)
    return off, a, b, c


@njit(cache=True, nogil=True)
def inside_max(w):
    n = w.shape[0] - 1
    c = np.zeros((4, n + 1, n + 1))
    bp = np.zeros((4, n + 1, n + 1), dtype=np.int64)
    for l in range(1, n + 1):
        for i in range(n - l + 1):
            j = i + l
            best = -np.inf
            arg = i
            for k in range(i, j):
                v = c[RC, i, k] + c[LC, k + 1, j]
                if v > best:
                    best = v
                    arg = k
            c[RT, i, j] = w[i, j] + best
            c[LT, i, j] = w[j, i] + best
            bp[RT, i, j] = arg
            bp[LT, i, j] = arg
            best = -np.inf
            arg = i + 1
            for k in range(i + 1, j + 1):
                v = c[RT, i, k] + c[RC, k, j]
                if v > best:
                    best = v
                    arg = k
            c[RC, i, j] = best
            bp[RC, i, j] = arg
            best = -np.inf
            arg = i
            for k in range(i, j):
                v = c[LC, i, k] + c[LT, k, j]
                if v > best:
                    best = v
                    arg = k
            c[LC, i, j] = best
            bp[LC, i, j] = arg
    return c, bp


@njit(cache=True, nogil=True)
def reconstruct(off, b, n):
    ct = np.zeros((4, n + 1, n + 1))
    ct[RC, 0, n] = 1.0
    for l in range(n, 0, -1):
        for i in range(n - l + 1):
            j = i + l
            o = off[i, j]
            x = ct[RC, i, j]
            for r in range(l):
                k = i + 1 + r
                p = x * b[RC, o + r]
                ct[RT, i, k] += p
                ct[RC, k, j] += p
            x = ct[LC, i, j]
            for r in range(l):
                k = i + r
                p = x * b[LC, o + r]
                ct[LC, i, k] += p
                ct[LT, k, j] += p
            for kd in (RT, LT):
                x = ct[kd, i, j]
                for r in range(l):
                    k = i + r
                    p = x * b[kd, o + r]
                    ct[RC, i, k] += p
                    ct[LC, k + 1, j] += p
    return ct


@njit(cache=True, nogil=True)
def arcs_from_items(items, n):
    t = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            t[i, j] = items[RT, i, j]
            t[j, i] = items[LT, i, j]
    return t


@njit(cache=True, nogil=True)
def prob_arcs_from_items(items, n):
    # exact values lie in [0, 1]; accumulation can overshoot by an ulp
    t = arcs_from_items(items, n)
    for i in range(n + 1):
        for j in range(n + 1):
            t[i, j] = min(max(t[i, j], 0.0), 1.0)
    return t


@njit(cache=True, nogil=True)
def backward_backptr(off, b, ct, dT, n):
    total = b.shape[1]
    dct = np.zeros((4, n + 1, n + 1))
    db = np.zeros((4, total))
    for l in range(1, n + 1):
        for i in range(n - l + 1):
            j = i + l
            o = off[i, j]
            dct[RT, i, j] += dT[i, j]
            dct[LT, i, j] += dT[j, i]
            # trapezoids first: same-span triangles distribute into them
            for kd in (RT, LT):
                x = ct[kd, i, j]
                acc = 0.0
                for r in range(l):
                    k = i + r
                    g = dct[RC, i, k] + dct[LC, k + 1, j]
                    acc += g * b[kd, o + r]
                    db[kd, o + r] += g * x
                dct[kd, i, j] += acc
            x = ct[RC, i, j]
            acc = 0.0
            for r in range(l):
                k = i + 1 + r
                g = dct[RT, i, k] + dct[RC, k, j]
                acc += g * b[RC, o + r]
                db[RC, o + r] += g * x
            dct[RC, i, j] += acc
            x = ct[LC, i, j]
            acc = 0.0
            for r in range(l):
                k = i + r
                g = dct[LC, i, k] + dct[LT, k, j]
                acc += g * b[LC, o + r]
                db[LC, o + r] += g * x
            dct[LC, i, j] += acc
    return dct, db


@njit(cache=True, nogil=True, inline="always")
def _item_back(a, b, db, da, kd, o, l, dcv, tau, mode):
    if mode == LOGSUMEXP:
        for r in range(l):
            da[kd, o + r] = dcv * b[kd, o + r]
        return
    s = 0.0
    for r in range(l):
        g = dcv * a[kd, o + r] + db[kd, o + r]
        db[kd, o + r] = g
        s += b[kd, o + r] * g
    for r in range(l):
        da[kd, o + r] = dcv * b[kd, o + r] + b[kd, o + r] * (db[kd, o + r] - s) / tau


@njit(cache=True, nogil=True)
def backward_inside(off, a, b, dc, db, tau, mode, n):
    """Reverse sweep through the inside recurrences.

    ``dc`` arrives seeded (e.g. with the root for log Z) and ``db`` carries the
    contribution gathered by the reconstruction sweep; both are updated in place.
    """
    da = np.zeros(a.shape)
    for l in range(n, 0, -1):
        for i in range(n - l + 1):
            j = i + l
            o = off[i, j]
            _item_back(a, b, db, da, RC, o, l, dc[RC, i, j], tau, mode)
            for r in range(l):
                k = i + 1 + r
                g = da[RC, o + r]
                dc[RT, i, k] += g
                dc[RC, k, j] += g
            _item_back(a, b, db, da, LC, o, l, dc[LC, i, j], tau, mode)
            for r in range(l):
                k = i + r
                g = da[LC, o + r]
                dc[LC, i, k] += g
                dc[LT, k, j] += g
            for kd in (RT, LT):
                _item_back(a, b, db, da, kd, o, l, dc[kd, i, j], tau, mode)
                for r in range(l):
                    k = i + r
                    g = da[kd, o + r]
                    dc[RC, i, k] += g
                    dc[LC, k + 1, j] += g
    return da


@njit(cache=True, nogil=True)
def logsumexp_tangent(off, b, v, n):
    """Arc marginals and their directional derivative along ``v``.

    Operates on a chart filled in LOGSUMEXP mode. Returns ``(mu, mu_dot)``
    with ``mu_dot = d/de mu(w + e v)`` at ``e = 0``.
    """
    total = b.shape[1]
    cdot = np.zeros((4, n + 1, n + 1))
    bdot = np.zeros((4, total))
    adot = np.zeros(n + 1)
    for l in range(1, n + 1):
        for i in range(n - l + 1):
            j = i + l
            o = off[i, j]
            for r in range(l):
                k = i + r
                adot[r] = cdot[RC, i, k] + cdot[LC, k + 1, j]
            for kd in (RT, LT):
                s = 0.0
                for r in range(l):
                    s += b[kd, o + r] * adot[r]
                for r in range(l):
                    bdot[kd, o + r] = b[kd, o + r] * (adot[r] - s)
                if kd == RT:
                    cdot[RT, i, j] = v[i, j] + s
                else:
                    cdot[LT, i, j] = v[j, i] + s
            for r in range(l):
                k = i + 1 + r
                adot[r] = cdot[RT, i, k] + cdot[RC, k, j]
            s = 0.0
            for r in range(l):
                s += b[RC, o + r] * adot[r]
            for r in range(l):
                bdot[RC, o + r] = b[RC, o + r] * (adot[r] - s)
            cdot[RC, i, j] = s
            for r in range(l):
                k = i + r
                adot[r] = cdot[LC, i, k] + cdot[LT, k, j]
            s = 0.0
            for r in range(l):
                s += b[LC, o + r] * adot[r]
            for r in range(l):
                bdot[LC, o + r] = b[LC, o + r] * (adot[r] - s)
            cdot[LC, i, j] = s

    dc = np.zeros((4, n + 1, n + 1))
    u = np.zeros((4, n + 1, n + 1))
    dc[RC, 0, n] = 1.0
    for l in range(n, 0, -1):
        for i in range(n - l + 1):
            j = i + l
            o = off[i, j]
            x = dc[RC, i, j]
            y = u[RC, i, j]
            for r in range(l):
                k = i + 1 + r
                g = x * b[RC, o + r]
                h = y * b[RC, o + r] + x * bdot[RC, o + r]
                dc[RT, i, k] += g
                dc[RC, k, j] += g
                u[RT, i, k] += h
                u[RC, k, j] += h
            x = dc[LC, i, j]
            y = u[LC, i, j]
            for r in range(l):
                k = i + r
                g = x * b[LC, o + r]
                h = y * b[LC, o + r] + x * bdot[LC, o + r]
                dc[LC, i, k] += g
                dc[LT, k, j] += g
                u[LC, i, k] += h
                u[LT, k, j] += h
            for kd in (RT, LT):
                x = dc[kd, i, j]
                y = u[kd, i, j]
                for r in range(l):
                    k = i + r
                    g = x * b[kd, o + r]
                    h = y * b[kd, o + r] + x * bdot[kd, o + r]
                    dc[RC, i, k] += g
                    dc[LC, k + 1, j] += g
                    u[RC, i, k] += h
                    u[LC, k + 1, j] += h
    return prob_arcs_from_items(dc, n), arcs_from_items(u, n)


@njit(cache=True, nogil=True)
def relaxed_forward(w, tau):
    n = w.shape[0] - 1
    off, a, b, c = inside(w, tau, SMOOTH)
    ct = reconstruct(off, b, n)
    return off, a, b, c, ct, prob_arcs_from_items(ct, n)


@njit(cache=True, nogil=True)
def relaxed_backward(off, a, b, ct, dT, tau, n):
    dct, db = backward_backptr(off, b, ct, dT, n)
    dc = np.zeros((4, n + 1, n + 1))
    da = backward_inside(off, a, b, dc, db, tau, SMOOTH, n)
    return dct, db, dc, da, arcs_from_items(dc, n)
