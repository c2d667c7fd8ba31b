"""Adaptive Gauss-Legendre quadrature for integrands given in log space.

A family of K integrands shares one panel set. Each panel is integrated
with a 15-point rule on the whole panel and on both halves; the halves give
the estimate and their difference to the whole gives the error. Panels are
bisected until every member of the family meets the relative tolerance.
Values are accumulated relative to a per-member running maximum of the log
integrand, so integrands far below the double range are still resolved.
"""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import kernels

ORDER = 15
_X, _W = leggauss(ORDER)
# nodes of [whole, left half, right half] on the reference panel [-1, 1]
_REF = np.concatenate([_X, (_X - 1.0) / 2.0, (_X + 1.0) / 2.0])


class ConvergenceError(RuntimeError):
    """Raised when the panel cap is hit before the tolerance is met."""

    def __init__(self, message, achieved, failing=None):
        super().__init__(f"{message} (achieved relative error {achieved:.3e})")
        self.achieved = achieved
        self.failing = failing


@dataclass
class QuadResult:
    value: np.ndarray
    log_value: np.ndarray
    error: np.ndarray
    panels: int

    @property
    def rel_error(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            r = self.error / np.abs(self.value)
        return np.where(self.value == 0, 0.0, r)


def _evaluate(logf, lo, hi, K):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = (mid[:, None] + half[:, None] * _REF[None, :]).ravel()
    lv = np.asarray(logf(pts), dtype=np.float64)
    if lv.ndim == 1:
        lv = lv[None, :]
    lv = np.where(np.isnan(lv), -np.inf, lv)
    return lv.reshape(K, lo.size * 3, ORDER), half


def integrate_log(logf, a, b, *, rtol=1e-10, breakpoints=(), max_panels=2**14,
                  initial_edges=None, K=None, log_atol=None):
    """Integrate ``exp(logf(x))`` over [a, b] for a family of integrands.

    ``logf`` maps a 1-D array of abscissae to an array of shape (K, m) (or
    (m,) for a single integrand). ``log_atol`` optionally gives, per member,
    the log of an absolute error that is good enough. Returns a
    :class:`QuadResult` with arrays of length K.
    """
    if initial_edges is None:
        edges = np.linspace(a, b, 5)
    else:
        edges = np.asarray(initial_edges, dtype=np.float64)
    extra = [p for p in breakpoints if a < p < b]
    edges = np.unique(np.concatenate([edges, extra, [a, b]]))
    if K is None:
        probe = np.asarray(logf(np.array([0.5 * (a + b)])))
        K = 1 if probe.ndim == 1 else probe.shape[0]

    shift = np.full(K, -np.inf)
    lo = edges[:-1].copy()
    hi = edges[1:].copy()
    est = np.zeros((K, 0))
    err = np.zeros((K, 0))
    plo = np.zeros(0)
    phi = np.zeros(0)

    while True:
        lv, half = _evaluate(logf, lo, hi, K)
        new_max = lv.max(axis=(1, 2))
        grow = new_max > shift
        if np.any(grow):
            old = shift.copy()
            shift = np.where(grow, new_max, shift)
            with np.errstate(invalid="ignore"):
                factor = np.where(np.isfinite(old), np.exp(old - shift), 0.0)
            est = est * factor[:, None]
            err = err * factor[:, None]
        safe_shift = np.where(np.isfinite(shift), shift, 0.0)
        sums = kernels.panel_sums(np.ascontiguousarray(lv), _W, safe_shift)
        sums = sums.reshape(K, lo.size, 3) * half[None, :, None]
        whole = sums[:, :, 0]
        halves = sums[:, :, 1] * 0.5 + sums[:, :, 2] * 0.5
        est = np.concatenate([est, halves], axis=1)
        err = np.concatenate([err, np.abs(whole - halves)], axis=1)
        plo = np.concatenate([plo, lo])
        phi = np.concatenate([phi, hi])

        total = est.sum(axis=1)
        errsum = err.sum(axis=1)
        # the halves-vs-whole estimate runs low by about 2.4x on a panel
        # touching an inverse-square-root endpoint, hence the margin
        tol = 0.25 * rtol * np.abs(total)
        if log_atol is not None:
            with np.errstate(over="ignore"):
                tol = np.maximum(tol, np.exp(np.asarray(log_atol) - safe_shift))
        live = errsum > tol
        if not np.any(live):
            break
        P = plo.size
        # split the worst panels until, for every live member, the error left
        # in the unsplit panels is at most half its tolerance
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.where(live[:, None], err / tol[:, None], 0.0)
        rel = np.nan_to_num(rel, nan=0.0, posinf=1e300)
        order = np.argsort(-rel.max(axis=0), kind="stable")
        remaining = rel.sum(axis=1)[:, None] - np.cumsum(rel[:, order], axis=1)
        worst = remaining.max(axis=0)
        count = int(np.searchsorted(-worst, -0.5)) + 1
        split = np.zeros(P, dtype=bool)
        split[order[:min(count, P)]] = True
        mids = 0.5 * (plo + phi)
        splittable = (mids > plo) & (mids < phi)
        split &= splittable
        if not np.any(split) or P + int(split.sum()) > max_panels:
            achieved = float(np.max(np.where(live, errsum / np.abs(total), 0.0)))
            failing = np.flatnonzero(live)
            raise ConvergenceError(
                f"quadrature did not converge with {P} panels", achieved, failing)
        keep = ~split
        lo = np.concatenate([plo[split], mids[split]])
        hi = np.concatenate([mids[split], phi[split]])
        est = est[:, keep]
        err = err[:, keep]
        plo = plo[keep]
        phi = phi[keep]

    total = est.sum(axis=1)
    errsum = err.sum(axis=1)
    # positivity guard: a negative total within its error is clamped to it
    total = np.where((total < 0) & (-total <= errsum), errsum, total)
    with np.errstate(divide="ignore"):
        log_value = np.where(total > 0, np.log(np.abs(total)) + shift, -np.inf)
    with np.errstate(over="ignore"):
        scale = np.where(np.isfinite(shift), np.exp(shift), 0.0)
    return QuadResult(value=total * scale, log_value=log_value,
                      error=errsum * scale, panels=plo.size)
