"""Fractional index shift v -> v_x and its ball form.

    v_x(t) = integral over [t, 1] of (s - t)**(x-1) / Gamma(x) dmu(s)

Power weights, step densities and atoms have exact shifts. Any other
density is shifted numerically: v_x is computed on 1024 Chebyshev-spaced
nodes in y = -log(1 - t) and interpolated in between. The interpolated
quantity is log v_x minus a reference built from v itself, which is smooth
in y even for the exponential cusp where log v_x is not.
"""

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gammaln, logsumexp

from .measures import DiscreteMeasure, StepDensity, measure_log_moments
from .quadrature import integrate_log
from .reports import Report, verdict
from .weights import (DomainError, Power, RadialWeight, Scaled, Sum, WeightDensity,
                      log_moments, trend_verdict)

CACHE_NODES = 1024
CACHE_Y_MAX = 45.0  # 1 - t down to ~3e-20


def _log_omt_pow(p, omt):
    with np.errstate(divide="ignore"):
        return p * np.log(omt)


class ShiftedDensity(WeightDensity):
    """v_x for a base density or measure. ``closed_form`` marks exact shifts."""

    kind = "Shifted"
    closed_form = False

    def __init__(self, base, x):
        self.base = base
        self.x = float(x)

    def log_moment_identity(self, ns):
        """log a_n(v_x) = log Gamma(n+1) - log Gamma(n+x+1) + log m_{n+x}(base)."""
        ns = np.atleast_1d(np.asarray(ns, dtype=float))
        return (gammaln(ns + 1.0) - gammaln(ns + self.x + 1.0)
                + measure_log_moments(self.base, ns + self.x))

    def closed_log_moments(self, ns):
        return self.log_moment_identity(ns)

    def exact_log(self, t):
        t = np.asarray(t, dtype=float)
        return self._log(t, 1.0 - t)

    def config(self):
        base = self.base.config() if hasattr(self.base, "config") else repr(self.base)
        return {"kind": self.kind, "params": {"base": base, "x": self.x}}


class PowerShift(ShiftedDensity):
    """c * (1-t)**p: the exact shift of a Power weight (or of such a shift)."""

    kind = "PowerShift"
    closed_form = True

    def __init__(self, base, x, logc, power):
        super().__init__(base, x)
        self.logc = float(logc)
        self.power = float(power)

    @classmethod
    def of(cls, v, x):
        p = v.alpha if isinstance(v, Power) else v.power
        logc = 0.0 if isinstance(v, Power) else v.logc
        logc += gammaln(p + 1.0) - gammaln(p + x + 1.0)
        return cls(v, x, logc, p + x)

    def _log(self, t, omt):
        return self.logc + _log_omt_pow(self.power, omt)

    def closed_log_moments(self, ns):
        return self.logc + Power(self.power).closed_log_moments(ns)


class LinearShift(ShiftedDensity):
    """Shift of a sum or positive multiple, taken term by term."""

    kind = "LinearShift"

    def __init__(self, base, x, combined):
        super().__init__(base, x)
        self.combined = combined
        self.closed_form = _is_closed(combined)

    def _log(self, t, omt):
        return self.combined._log(t, omt)

    def closed_log_moments(self, ns):
        return self.combined.closed_log_moments(ns)


def _is_closed(v):
    if isinstance(v, ShiftedDensity):
        return v.closed_form
    if isinstance(v, Sum):
        return all(_is_closed(p) for p in v.parts)
    if isinstance(v, Scaled):
        return _is_closed(v.inner)
    return True


class StepShift(ShiftedDensity):
    """Exact shift of a piecewise-constant density."""

    kind = "StepShift"
    closed_form = True

    def _log(self, t, omt):
        b = self.base
        keep = b.heights > 0
        lo, hi, h = b.edges[:-1][keep], b.edges[1:][keep], b.heights[keep]
        t = np.asarray(t, dtype=float)
        shape = np.broadcast(t, omt).shape
        x = self.x
        # distances measured from 1 keep precision near t = 1
        of = np.broadcast_to(omt, shape).ravel()[:, None]
        dhi = np.clip(of - (1.0 - hi)[None, :], 0.0, None)
        dlo = np.clip(of - (1.0 - lo)[None, :], 0.0, None)
        with np.errstate(divide="ignore", invalid="ignore"):
            top = x * np.log(dhi)
            bot = x * np.log(dlo)
            piece = top + np.log(-np.expm1(np.where(dhi > 0, bot - top, -np.inf)))
            piece = np.where(dhi > 0, piece + np.log(h)[None, :], -np.inf)
        out = logsumexp(piece, axis=1) - gammaln(x + 1.0)
        return out.reshape(shape)


class AtomShift(ShiftedDensity):
    """Exact shift of a DiscreteMeasure: a finite sum over atoms."""

    kind = "AtomShift"
    closed_form = True

    def __init__(self, base, x):
        super().__init__(base, x)
        self._density_shift = None if base.density is None else shift(base.density, x)

    def _log(self, t, omt):
        omt = np.asarray(omt, dtype=float)
        shape = np.broadcast(np.asarray(t), omt).shape
        of = np.broadcast_to(omt, shape).ravel()[:, None]
        x = self.x
        parts = []
        if self.base.atoms:
            loc, mass = self.base.locations, self.base.masses
            dist = of - (1.0 - loc)[None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                terms = np.where(dist > 0, (x - 1.0) * np.log(np.where(dist > 0, dist, 1.0)),
                                 -np.inf)
                if x == 1.0:
                    terms = np.where(dist >= 0, 0.0, -np.inf)
                terms = terms + np.log(mass)[None, :] - gammaln(x)
            parts.append(logsumexp(terms, axis=1))
        if self._density_shift is not None:
            tt = np.broadcast_to(np.asarray(t, dtype=float), shape).ravel()
            parts.append(self._density_shift._log(tt, of.ravel()))
        return np.logaddexp.reduce(np.stack(parts), axis=0).reshape(shape)


_HALF_EDGES = np.concatenate([[0.0], 0.5 ** np.arange(32, 0, -1)])
_CHUNK = 128


def _shift_integral_log(base, x, t, omt, rtol=1e-10):
    """log v_x at points (t, omt) by direct quadrature (family over points).

    With s = t + (1-t) sigma the integral runs over sigma in [0, 1]. It is
    split at sigma = 1/2 and each half is integrated in a variable that
    vanishes at its own endpoint: near sigma = 0 the base density may be a
    sharp cusp of width ~ (1-t), near sigma = 1 it may be singular. For
    x < 1 the kernel singularity is removed with sigma = tau**(1/x).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    omt = np.atleast_1d(np.asarray(omt, dtype=float))
    out = np.empty(t.size)
    for lo in range(0, t.size, _CHUNK):
        sl = slice(lo, lo + _CHUNK)
        out[sl] = _shift_chunk(base, x, t[sl], omt[sl], rtol)
    return out


def _shift_chunk(base, x, t, omt, rtol):
    """log v_x(t) - anchor(t) for one chunk of points."""
    K = t.size
    tc, oc = t[:, None], omt[:, None]

    def integral(logf, hi, log_atol=None):
        res = integrate_log(logf, 0.0, hi, rtol=rtol, K=K, log_atol=log_atol,
                            initial_edges=_HALF_EDGES[_HALF_EDGES <= hi])
        return res.log_value

    def both(near_t, near_one, mid):
        # the half away from t only needs accuracy relative to the whole
        first = integral(near_t, mid)
        return np.logaddexp(first, integral(near_one, 1.0 - mid, first + np.log(rtol)))

    if x < 1.0:
        tau_mid = 0.5 ** x  # tau at sigma = 1/2

        def near_t(tau):
            with np.errstate(divide="ignore"):
                ls = np.log(tau)[None, :] / x
            return base._log_rel(tc, oc, np.exp(ls), -np.expm1(ls))

        def near_one(rho):
            ls = np.log1p(-rho)[None, :] / x
            return base._log_rel(tc, oc, np.exp(ls), -np.expm1(ls))

        total = both(near_t, near_one, tau_mid)
        return total + x * np.log(omt) - gammaln(x + 1.0)

    def near_t(sigma):
        with np.errstate(divide="ignore"):
            kern = (x - 1.0) * np.log(sigma) if x != 1.0 else np.zeros_like(sigma)
        return kern[None, :] + base._log_rel(tc, oc, sigma[None, :], (1.0 - sigma)[None, :])

    def near_one(w):
        kern = (x - 1.0) * np.log1p(-w) if x != 1.0 else np.zeros_like(w)
        return kern[None, :] + base._log_rel(tc, oc, (1.0 - w)[None, :], w[None, :])

    total = both(near_t, near_one, 0.5)
    return total + x * np.log(omt) - gammaln(x)


def _chebyshev(a, b, n):
    k = np.arange(n)
    return a + 0.5 * (b - a) * (1.0 - np.cos(np.pi * k / (n - 1)))


def _cache_nodes(base, nodes, y_max):
    """Chebyshev nodes in y = -log(1-t), one block per smooth piece of v.

    A breakpoint node is repeated at the end of one block and the start of
    the next; the repeat marks where the pieces join.
    """
    bps = sorted(-np.log1p(-b) for b in base.breakpoints() if 0.0 < b < 1.0)
    if not bps or len(bps) > 8:
        return _chebyshev(0.0, y_max, nodes)
    edges = [0.0] + [b for b in bps if b < y_max] + [y_max]
    lengths = np.diff(edges)
    counts = np.maximum(64, np.round(nodes * lengths / lengths.sum())).astype(int)
    counts[np.argmax(counts)] -= counts.sum() - nodes
    return np.concatenate([_chebyshev(a, b, n) for a, b, n in zip(edges[:-1], edges[1:], counts)])


class NumericShift(ShiftedDensity):
    """Quadrature shift with a cached interpolant on a Chebyshev grid.

    The cache holds r(y) = log v_x - anchor - ref on the nodes, where the
    reference is x log(1-t) + log(v(t) + v((1+t)/2)) taken relative to the
    base's anchor. Off-node values use a cubic spline of r in y; past the
    last node r is continued linearly.
    """

    kind = "NumericShift"

    def __init__(self, base, x, nodes=CACHE_NODES, y_max=CACHE_Y_MAX, rtol=1e-10):
        super().__init__(base, x)
        self.rtol = rtol
        y = _cache_nodes(base, nodes, y_max)
        omt = np.exp(-y)
        t = -np.expm1(-y)
        exact = _shift_integral_log(base, self.x, t, omt, rtol=rtol)
        resid = exact - self._ref(t, omt)
        if not np.all(np.isfinite(resid)):
            raise DomainError("shift vanishes on part of [0, 1); base is degenerate")
        self.grid_y = y
        self.grid_rel = exact
        # one spline per smooth piece; pieces share their end nodes
        cuts = np.flatnonzero(np.diff(y) == 0)
        starts = np.concatenate([[0], cuts + 1])
        stops = np.concatenate([cuts + 1, [y.size]])
        self._bounds = y[stops[:-1] - 1] if cuts.size else np.zeros(0)
        self._splines = [CubicSpline(y[a:b], resid[a:b], bc_type="not-a-knot")
                         for a, b in zip(starts, stops)]
        self._y_max = y_max
        self._end = resid[-1]
        self._slope = float(self._splines[-1](y_max, 1))

    def _ref(self, t, omt):
        at_t = self.base._log_rel(t, omt, np.zeros_like(omt), np.ones_like(omt))
        at_mid = self.base._log_rel(t, omt, np.full_like(omt, 0.5), np.full_like(omt, 0.5))
        return np.logaddexp(at_t, at_mid) + _log_omt_pow(self.x, omt)

    def _resid(self, omt):
        with np.errstate(divide="ignore"):
            y = -np.log(omt)
        yc = np.clip(y, 0.0, self._y_max)
        piece = np.searchsorted(self._bounds, yc, side="right")
        out = np.empty(np.shape(yc))
        for i, spline in enumerate(self._splines):
            sel = piece == i
            if np.any(sel):
                out[sel] = spline(yc[sel])
        return np.where(y <= self._y_max, out, self._end + self._slope * (y - self._y_max))

    def _rel_at(self, t, omt):
        """log v_x(t) - anchor(t)."""
        return self._resid(omt) + self._ref(t, omt)

    def _log(self, t, omt):
        t, omt = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(omt, dtype=float))
        return self._rel_at(t, omt) + self.base._anchor(t, omt)

    def breakpoints(self):
        return self.base.breakpoints()

    # the base's anchor is reused, so differences stay cancellation free
    def _anchor(self, t, omt):
        return self.base._anchor(t, omt)

    def _anchor_shift(self, t, omt, sigma, oms):
        return self.base._anchor_shift(t, omt, sigma, oms)

    def _log_rel(self, t, omt, sigma, oms):
        t, omt, sigma, oms = np.broadcast_arrays(t, omt, sigma, oms)
        s, oms_ = t + omt * sigma, omt * oms
        return self._rel_at(s, oms_) + self.base._anchor_shift(t, omt, sigma, oms)

    def exact_log(self, t):
        t = np.asarray(t, dtype=float)
        return self.exact_log_omt(1.0 - t)

    def exact_log_omt(self, omt):
        omt = np.atleast_1d(np.asarray(omt, dtype=float))
        t = 1.0 - omt
        rel = _shift_integral_log(self.base, self.x, t, omt, rtol=self.rtol)
        return rel + self.base._anchor(t, omt)


def shift(v, x):
    """Return v_x. x = 0 gives v back unchanged."""
    x = float(x)
    if not x >= 0:
        raise DomainError(f"shift parameter must be nonnegative, got {x}")
    if x == 0.0:
        return v
    if isinstance(v, DiscreteMeasure):
        return AtomShift(v, x)
    if isinstance(v, StepDensity):
        return StepShift(v, x)
    if isinstance(v, (Power, PowerShift)):
        return PowerShift.of(v, x)
    if isinstance(v, Scaled):
        return LinearShift(v, x, Scaled(v.c, shift(v.inner, x)))
    if isinstance(v, Sum):
        return LinearShift(v, x, Sum([shift(p, x) for p in v.parts]))
    if isinstance(v, LinearShift):
        return LinearShift(v, x, _shift_combined(v.combined, x))
    if isinstance(v, WeightDensity):
        return NumericShift(v, x)
    raise DomainError(f"cannot shift {type(v).__name__}")


def _shift_combined(v, x):
    if isinstance(v, Scaled):
        return Scaled(v.c, _shift_combined(v.inner, x))
    if isinstance(v, Sum):
        return Sum([_shift_combined(p, x) for p in v.parts])
    return shift(v, x)


def shift_log_on_grid(v, x, t, omt=None):
    """log v_x on an array of t, by the exact route when there is one.

    Numeric shifts are integrated directly at the requested points rather
    than read from a cache.  Pass ``omt`` (1 - t) when it is known more
    accurately than 1 - t rounds to.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    omt = 1.0 - t if omt is None else np.atleast_1d(np.asarray(omt, dtype=float))
    if x == 0:
        return v._log(t, omt)
    if isinstance(v, DiscreteMeasure) or _has_exact_shift(v):
        return shift(v, x)._log(t, omt)
    return _shift_integral_log(v, float(x), t, omt) + v._anchor(t, omt)


def _has_exact_shift(v):
    if isinstance(v, (Power, PowerShift, StepDensity)):
        return True
    if isinstance(v, Scaled):
        return _has_exact_shift(v.inner)
    if isinstance(v, Sum):
        return all(_has_exact_shift(p) for p in v.parts)
    if isinstance(v, LinearShift):
        return _has_exact_shift(v.combined)
    return False


def semigroup_check(v, x, y, grid, tol=1e-6):
    """Compare (v_x)_y with v_{x+y} on a grid."""
    t = np.asarray(grid, dtype=float)
    inner = shift(v, x)
    lhs = shift_log_on_grid(inner, y, t)
    rhs = shift_log_on_grid(v, x + y, t)
    rel = np.abs(np.expm1(lhs - rhs))
    worst = float(rel.max())
    return Report("semigroup", verdict(worst <= tol), ("t", "iterated", "direct", "rel_diff"),
                  list(zip(t, np.exp(lhs), np.exp(rhs), rel)),
                  {"x": x, "y": y, "max_rel_diff": worst, "tolerance": tol})


def hat_relation_check(v, x, grid, tol=1e-8):
    """v_{x+1}(t) against the tail integral of v_x."""
    t = np.asarray(grid, dtype=float)
    vx = shift(v, x)
    tail = shift_log_on_grid(vx, 1.0, t)
    direct = shift_log_on_grid(v, x + 1.0, t)
    rel = np.abs(np.expm1(tail - direct))
    worst = float(rel.max())
    return Report("hat_relation", verdict(worst <= tol), ("t", "tail_integral", "shift", "rel_diff"),
                  list(zip(t, np.exp(tail), np.exp(direct), rel)),
                  {"x": x, "max_rel_diff": worst, "tolerance": tol})


def pointwise_bound_check(v, x, alpha, grid, slack=1e-9):
    """v_{x+a}(t) <= Gamma(x)/Gamma(x+a) (1-t)**a v_x(t) on a grid."""
    if not x > 0 or not alpha > 0:
        raise DomainError("pointwise bound needs x > 0 and alpha > 0")
    t = np.asarray(grid, dtype=float)
    upper = shift_log_on_grid(v, x + alpha, t)
    bound = (gammaln(x) - gammaln(x + alpha) + alpha * np.log1p(-t)
             + shift_log_on_grid(v, x, t))
    ratio = np.exp(upper - bound)
    worst = float(ratio.max())
    return Report("pointwise_bound", verdict(worst <= 1.0 + slack), ("t", "v_x", "bound", "ratio"),
                  list(zip(t, np.exp(upper), np.exp(bound), ratio)),
                  {"x": x, "alpha": alpha, "max_ratio": worst, "slack": slack})


class ProfileFromLine(WeightDensity):
    """Radial profile P with line density v: P(t) = v(t) / (d t**(d-1))."""

    kind = "ProfileFromLine"

    def __init__(self, line, dim):
        self.line = line
        self.dim = int(dim)

    def _log(self, t, omt):
        base = self.line._log(t, omt)
        if self.dim == 1:
            return base
        with np.errstate(divide="ignore"):
            return base - np.log(self.dim) - (self.dim - 1) * np.log(t)

    def config(self):
        return {"kind": self.kind, "params": {"dim": self.dim, "line": self.line.config()}}


class ShiftedBallWeight(RadialWeight):
    """omega_x: the radial weight whose line density is v_{2x}."""

    def __init__(self, base: RadialWeight, x, line):
        super().__init__(base.dim, ProfileFromLine(line, base.dim))
        self.base = base
        self.x = x
        self.line = line

    def to_line_density(self):
        return self.line


def ball_shift(omega: RadialWeight, x):
    if not x >= 0:
        raise DomainError("ball shift needs x >= 0")
    if x == 0:
        return omega
    return ShiftedBallWeight(omega, x, shift(omega.to_line_density(), 2.0 * x))


def moment_shift_asymptotic(mu, x, n_list, tol=0.05, method="identity"):
    """n**x a_n(v_x) / m_n(mu) at each n; PASS when it approaches 1.

    ``method="identity"`` uses a_n(v_x) = Gamma(n+1)/Gamma(n+x+1) m_{n+x};
    ``method="quadrature"`` integrates the shifted density itself.
    """
    ns = np.sort(np.asarray(n_list, dtype=float))
    vx = shift(mu, x)
    if method == "identity":
        la = vx.log_moment_identity(ns)
    elif method == "quadrature":
        la = log_moments(vx, ns, method="quadrature")[0]
    else:
        raise ValueError(f"unknown method {method!r}")
    rep = trend_verdict(ns, x * np.log(ns) + la - measure_log_moments(mu, ns), tol)
    return Report("moment_shift_asymptotic", rep.verdict, ("n", "ratio", "deviation"),
                  list(zip(ns.astype(int), rep.ratio, rep.deviation)),
                  {"x": x, "tolerance": tol, "final_deviation": float(rep.deviation[-1])})


def ball_growth_bound_check(omega: RadialWeight, x, alpha, radii, slack=1e-9):
    """omega_{x+a}(z) / (1-|z|^2)**(2a) <= Gamma(2x)/Gamma(2x+2a) omega_x(z)."""
    if not x > 0 or not alpha >= 0:
        raise DomainError("growth bound needs x > 0 and alpha >= 0")
    r = np.asarray(radii, dtype=float)
    t = r * r
    # the factor d t**(d-1) relating profile and line density cancels
    hi = ball_shift(omega, x + alpha).to_line_density()
    lo = ball_shift(omega, x).to_line_density()
    lhs = hi._log(t, 1.0 - t) - 2 * alpha * np.log1p(-t)
    rhs = gammaln(2 * x) - gammaln(2 * x + 2 * alpha) + lo._log(t, 1.0 - t)
    ratio = np.exp(lhs - rhs)
    worst = float(ratio.max())
    return Report("ball_growth_bound", verdict(worst <= 1.0 + slack), ("r", "lhs", "bound", "ratio"),
                  list(zip(r, np.exp(lhs), np.exp(rhs), ratio)),
                  {"x": x, "alpha": alpha, "max_ratio": worst, "slack": slack})
