"""Numpy implementations of the hot loops.

These mirror the compiled versions in ``_kernels.pyx`` and are used when the
extension is not built (or when ``BESOVLAB_PURE=1`` is set).
"""

import math

import numpy as np

_SPLIT = 134217729.0  # 2**27 + 1, Veltkamp splitter for binary64


def panel_sums(logvals, weights, shift):
    """Weighted sums of ``exp(logvals - shift)`` over the last axis.

    logvals has shape (K, P, q), weights (q,), shift (K,). Returns (K, P).
    """
    scaled = np.exp(logvals - shift[:, None, None])
    return scaled @ weights


def _two_product(a, b):
    p = a * b
    ca = _SPLIT * a
    ah = ca - (ca - a)
    al = a - ah
    cb = _SPLIT * b
    bh = cb - (cb - b)
    bl = b - bh
    e = al * bl - (((p - ah * bh) - al * bh) - ah * bl)
    return p, e


def kaluza_recursion(F, compensated=False):
    """Reciprocal-series recursion ``c_n = F_n - sum_{k<n} c_k F_{n-k}``.

    Returns ``(c, mag)`` with ``c[0] = 0`` and ``mag[n]`` the sum of absolute
    values of the terms entering step n (used for the negativity tolerance).
    """
    F = np.ascontiguousarray(F, dtype=np.float64)
    N = F.shape[0] - 1
    c = np.zeros(N + 1)
    mag = np.zeros(N + 1)
    for n in range(1, N + 1):
        if n == 1:
            c[1] = F[1]
            mag[1] = abs(F[1])
            continue
        ck = c[1:n]
        Fr = F[n - 1:0:-1]
        if compensated:
            p, e = _two_product(ck, Fr)
            terms = [F[n]]
            terms.extend((-p).tolist())
            terms.extend((-e).tolist())
            c[n] = math.fsum(terms)
            mag[n] = abs(F[n]) + float(np.abs(p).sum())
        else:
            prods = ck * Fr
            c[n] = F[n] - float(prods.sum())
            mag[n] = abs(F[n]) + float(np.abs(prods).sum())
    return c, mag
