"""Numerical classification of weights near t = 1.

Grids are dyadic in the distance to 1: t = 1 - 2**-y with y on a uniform
mesh, so every node carries 1 - t exactly.  "Almost decreasing" and
"bounded" are decided operationally: a constant counts as finite when it
settles (within a relative tolerance) as the grid is refined and pushed two
dyadic decades closer to 1.
"""

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln

from .measures import DiscreteMeasure, StepDensity, measure_log_moments
from .reports import Report, verdict
from .shift import shift, shift_log_on_grid
from .weights import DomainError, ExpCusp, Power, WeightDensity, log_moments

Y_MAX = 20.0  # t_max = 1 - 2**-20
DIVERGENCE = 1e3
SETTLE_TOL = 0.05
LN2 = math.log(2.0)


def _exp(a):
    """exp that lets huge ratios become inf quietly."""
    with np.errstate(over="ignore"):
        return np.exp(a)


def dyadic_grid(t0=0.0, y_max=Y_MAX, per_decade=32):
    """(t, 1 - t) with 1 - t = 2**-y, y stepping by 1/per_decade from t0."""
    y0 = -math.log2(1.0 - t0)
    j0 = math.ceil(y0 * per_decade - 1e-9)
    y = np.arange(j0, int(round(y_max * per_decade)) + 1) / per_decade
    if y.size == 0 or y[0] > y0 + 1e-12:
        y = np.concatenate([[y0], y])
    omt = np.exp2(-y)
    return 1.0 - omt, omt


@functools.lru_cache(maxsize=128)
def _shifted(v, x):
    return v if x == 0 else shift(v, x)


def log_shift_on(v, x, t, omt):
    return _shifted(v, float(x))._log(t, omt)


def _tail_spread(log_vals, omt, decades=2.0):
    """max/min of exp(log_vals) over the last ``decades`` dyadic decades."""
    y = -np.log2(omt)
    tail = log_vals[y >= y[-1] - decades - 1e-9]
    return float(_exp(tail.max() - tail.min())), tail


# ------------------------------------------------------------ doubling


@dataclass
class ClassificationReport:
    doubling_constant: float
    doubling_verdict: str
    weakly_normal_candidates: List[Tuple[float, float, float]] = field(default_factory=list)
    b2_profile: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)

    @property
    def order(self):
        if not self.weakly_normal_candidates:
            return None
        return min(a for a, _, _ in self.weakly_normal_candidates)


def doubling_check(v, t0=0.0, y_max=Y_MAX, per_decade=16, threshold=DIVERGENCE, flat_tol=SETTLE_TOL):
    """Ratio of the tail integral at t and at (1+t)/2."""
    t, omt = dyadic_grid(t0, y_max, per_decade)
    half = omt / 2.0
    hat = log_shift_on(v, 1.0, t, omt)
    hat_mid = log_shift_on(v, 1.0, 1.0 - half, half)
    log_ratio = hat - hat_mid
    spread, tail = _tail_spread(log_ratio, omt)
    final = float(_exp(log_ratio[-1]))
    if np.all(np.isfinite(log_ratio)) and spread <= 1.0 + flat_tol and final < threshold:
        status = "IN_DHAT"
    elif final >= threshold and np.all(np.diff(tail) >= -1e-12):
        status = "NOT_DHAT"
    else:
        status = "INCONCLUSIVE"
    ratio = _exp(log_ratio)
    return Report("doubling", status, ("t", "one_minus_t", "ratio"),
                  list(zip(t, omt, ratio)),
                  {"doubling_constant": float(ratio.max()), "final_ratio": final,
                   "tail_spread": spread, "threshold": threshold, "t_max": float(t[-1])})


def doubling_equivalence_check(v, t0=0.0, y_max=Y_MAX, per_decade=16, slack=1e-9):
    """(1-t) v_1(t) against v_2(t): the left inequality always, and a finite
    constant exactly when the weight is doubling."""
    t, omt = dyadic_grid(t0, y_max, per_decade)
    v1 = log_shift_on(v, 1.0, t, omt)
    v2 = log_shift_on(v, 2.0, t, omt)
    log_m = np.log(omt) + v1 - v2
    lower_ok = bool(np.all(log_m >= -slack))
    spread, _ = _tail_spread(log_m, omt)
    bounded = bool(np.all(np.isfinite(log_m))) and spread <= 1.0 + SETTLE_TOL
    dbl = doubling_check(v, t0, y_max, per_decade)
    consistent = dbl.verdict == "INCONCLUSIVE" or bounded == (dbl.verdict == "IN_DHAT")
    m = _exp(log_m)
    return Report("doubling_equivalence", verdict(lower_ok and consistent),
                  ("t", "M"), list(zip(t, m)),
                  {"M": float(m.max()), "M_bounded": bounded, "doubling": dbl.verdict,
                   "inequality_holds": lower_ok, "consistent": consistent})


def _band_report(name, t, log_ratio, omt, extra):
    spread, _ = _tail_spread(log_ratio, omt)
    ratio = _exp(log_ratio)
    c = float(_exp(np.max(np.abs(log_ratio))))
    ok = bool(np.all(np.isfinite(log_ratio))) and spread <= 1.0 + SETTLE_TOL
    summary = {"C": c, "min_ratio": float(ratio.min()), "max_ratio": float(ratio.max()),
               "tail_spread": spread}
    summary.update(extra)
    return Report(name, verdict(ok), ("t", "ratio"), list(zip(t, ratio)), summary)


def vx_doubling_asymptotic_check(v, x, t0=0.0, y_max=Y_MAX, per_decade=16):
    """v_{x+1}(t) / ((1-t)**x v_1(t)) stays in a band."""
    if not x >= 0:
        raise DomainError("x must be nonnegative")
    t, omt = dyadic_grid(t0, y_max, per_decade)
    log_ratio = (log_shift_on(v, x + 1.0, t, omt) - x * np.log(omt)
                 - log_shift_on(v, 1.0, t, omt))
    return _band_report("vx_doubling_asymptotic", t, log_ratio, omt, {"x": x})


# ----------------------------------------------------- almost monotone


@dataclass
class MonotoneEnvelope:
    source: str
    grid: np.ndarray
    log_f: np.ndarray
    log_g: np.ndarray
    C: float
    constants: List[float]
    almost_decreasing: Optional[bool]

    @property
    def values(self):
        return np.exp(self.log_g)

    def check_invariants(self, slack=1e-12):
        problems = []
        if np.any(np.diff(self.log_g) > slack):
            problems.append("envelope increases")
        if np.any(self.log_g > self.log_f + slack):
            problems.append("envelope exceeds f")
        return problems


def _running_min_constant(log_f):
    log_g = np.minimum.accumulate(log_f)
    with np.errstate(invalid="ignore"):
        gap = log_f - log_g
    gap = np.where(np.isnan(gap), np.inf, gap)
    return log_g, float(gap.max())


def almost_monotone_envelope(f: Callable, t0=0.0, y_max=Y_MAX, per_decade=32, refinements=2,
                             tol=SETTLE_TOL, log=False, grid=None, source="f"):
    """Running-minimum envelope g of f and the constant C = sup f/g.

    f takes (t, 1 - t) arrays and returns values (or logs with ``log=True``).
    Without an explicit grid, C is computed on ``refinements + 1`` nested
    grids, each twice as fine as the last and reaching two dyadic decades
    closer to 1; f counts as almost decreasing when successive constants
    agree within ``tol``.
    """
    def logf(t, omt):
        out = np.asarray(f(t, omt), dtype=float)
        if log:
            return out
        with np.errstate(divide="ignore"):
            return np.log(out)

    if grid is not None:
        t = np.asarray(grid, dtype=float)
        lf = logf(t, 1.0 - t)
        lg, lc = _running_min_constant(lf)
        return MonotoneEnvelope(source, t, lf, lg, float(_exp(lc)), [float(_exp(lc))], None)

    t, omt = dyadic_grid(t0, y_max, per_decade)
    lf = logf(t, omt)
    y = -np.log2(omt)
    logs = []
    for level in range(refinements, -1, -1):
        step = 2 ** level
        keep = y <= y_max - 2 * level + 1e-9
        idx = np.flatnonzero(keep)
        sub = idx[::step]
        if sub[-1] != idx[-1]:
            sub = np.append(sub, idx[-1])
        logs.append(_running_min_constant(lf[sub])[1])
    lg, lc = _running_min_constant(lf)
    settled = all(np.isfinite(a) and np.isfinite(b) and abs(b - a) <= math.log1p(tol)
                  for a, b in zip(logs, logs[1:]))
    constants = [float(_exp(c)) for c in logs]
    return MonotoneEnvelope(source, t, lf, lg, float(_exp(lc)), constants, settled)


# ------------------------------------------------------ weak normality


def _check_order(alpha):
    if not alpha > -1:
        raise DomainError("weak normality of order <= -1 is impossible; alpha must exceed -1")


def weak_normal_envelope(v, alpha, x, t0=0.5, **kw):
    """Envelope of (1-t)**(alpha+x) / v_x on [t0, 1)."""
    def logf(t, omt):
        return (alpha + x) * np.log(omt) - log_shift_on(v, x, t, omt)

    return almost_monotone_envelope(logf, t0=t0, log=True,
                                    source=f"(1-t)^{alpha + x}/v_{x}", **kw)


def weakly_normal_check(v, alpha, x=0.0, t0=0.5, **kw):
    _check_order(alpha)
    env = weak_normal_envelope(v, alpha, x, t0, **kw)
    return Report("weakly_normal", verdict(bool(env.almost_decreasing)),
                  ("t", "ratio", "envelope"),
                  list(zip(env.grid, _exp(env.log_f), _exp(env.log_g))),
                  {"alpha": alpha, "x": x, "t0": t0, "C": env.C,
                   "C_levels": " ".join(repr(c) for c in env.constants)})


def weakly_normal_order(v, alphas=None, xs=(0.0, 0.5, 1.0, 2.0), t0=0.5, **kw):
    """All passing (alpha, x, C) over a scan; the order estimate is the least alpha."""
    if alphas is None:
        alphas = np.arange(-0.75, 10.0 + 1e-9, 0.25)
    found = []
    for x in xs:
        for a in alphas:
            env = weak_normal_envelope(v, float(a), float(x), t0, **kw)
            if env.almost_decreasing:
                found.append((float(a), float(x), env.C))
    found.sort()
    order = min((a for a, _, _ in found), default=None)
    rows = [(a, x, c) for a, x, c in found]
    return Report("weakly_normal_order", verdict(order is not None), ("alpha", "x", "C"), rows,
                  {"order": "none" if order is None else order, "candidates": len(found)})


def weakly_normal_shift_check(v, alpha, x, y, t0=0.5, **kw):
    """Almost decreasing at shift x carries over to shift x + y."""
    _check_order(alpha)
    before = weak_normal_envelope(v, alpha, x, t0, **kw)
    after = weak_normal_envelope(v, alpha, x + y, t0, **kw)
    ok = bool(before.almost_decreasing) and bool(after.almost_decreasing)
    return Report("weakly_normal_shift", verdict(ok), ("t", "ratio_x", "ratio_x_plus_y"),
                  list(zip(after.grid, _exp(before.log_f), _exp(after.log_f))),
                  {"alpha": alpha, "x": x, "y": y, "C_x": before.C, "C_x_plus_y": after.C,
                   "precondition": bool(before.almost_decreasing)})


# ------------------------------------------------------------ B2 profile


class _ReciprocalWeight(WeightDensity):
    """(1-s)**(2 eta) / v(s)."""

    kind = "Reciprocal"

    def __init__(self, v, eta):
        self.v, self.eta = v, float(eta)

    def _log(self, t, omt):
        with np.errstate(divide="ignore"):
            return 2.0 * self.eta * np.log(omt) - self.v._log(t, omt)

    def breakpoints(self):
        return self.v.breakpoints()


def _reciprocal(v, eta):
    if isinstance(v, Power):
        return Power(2.0 * eta - v.alpha) if 2.0 * eta - v.alpha > -1 else None
    return _ReciprocalWeight(v, eta)


def _integrable_at_one(w, k_lo=30, k_hi=60):
    """Heuristic: (1-s) w(s) must decay along 1 - s = 2**-k, k = 30..60."""
    omt = np.exp2(-np.array([k_lo, k_hi], dtype=float))
    lw = w._log(1.0 - omt, omt) + np.log(omt)
    if not np.all(np.isfinite(lw)):
        return False
    return bool(lw[1] - lw[0] < -1.0)


def bekolle_b2_profile(v, eta, t0=0.5, y_max=Y_MAX, per_decade=16):
    """[int_t^1 v * int_t^1 (1-s)^(2 eta)/v] / (1-t)^(2 eta + 2) on a grid."""
    if not eta > -1:
        raise DomainError("B2 profile needs eta > -1")
    t, omt = dyadic_grid(t0, y_max, per_decade)
    w = _reciprocal(v, eta)
    if w is None or not _integrable_at_one(w):
        return Report("bekolle_b2", "NOT_B2", ("t", "ratio"), [(t[0], math.inf)],
                      {"eta": eta, "failing_t": float(t[0]),
                       "reason": "(1-s)^(2 eta)/v is not integrable near 1"})
    hat_v = log_shift_on(v, 1.0, t, omt)
    hat_w = shift_log_on_grid(w, 1.0, t, omt) if not isinstance(w, Power) else shift(w, 1.0)._log(t, omt)
    log_ratio = hat_v + hat_w - (2.0 * eta + 2.0) * np.log(omt)
    bad = ~np.isfinite(log_ratio)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        return Report("bekolle_b2", "NOT_B2", ("t", "ratio"), list(zip(t, _exp(log_ratio))),
                      {"eta": eta, "failing_t": float(t[i]), "reason": "divergent inner integral"})
    rep = _band_report("bekolle_b2", t, log_ratio, omt, {"eta": eta})
    rep.verdict = "IN_B2" if rep.verdict == "PASS" else "NOT_B2"
    return rep


def classify(v, t0=0.5, etas=(-0.5, 0.0, 0.5, 1.0, 2.0, 4.0)):
    """Doubling, weak normality order search and B2 profiles in one report."""
    dbl = doubling_check(v)
    wn = weakly_normal_order(v, t0=t0)
    b2 = {eta: bekolle_b2_profile(v, eta).verdict for eta in etas}
    return ClassificationReport(dbl.summary["doubling_constant"], dbl.verdict,
                                [tuple(r) for r in wn.rows], b2,
                                {"y_max": Y_MAX, "t0": t0})


# ------------------------------------------------------- pairing measure


@dataclass
class PairingMeasure:
    measure: DiscreteMeasure
    envelope: MonotoneEnvelope
    alpha: float
    x: float


def _envelope_measure(t, log_g):
    """mu([t_k, 1]) = g(t_k): step density from differences of g, atom g(t_K) at 1."""
    g = np.exp(log_g)
    heights = (g[:-1] - g[1:]) / np.diff(t)
    edges = np.concatenate([t, [1.0]])
    heights = np.concatenate([np.maximum(heights, 0.0), [0.0]])
    return DiscreteMeasure([(1.0, float(g[-1]))], StepDensity(edges, heights))


def _band(v, mu, alpha, ns):
    log_a = log_moments(v, ns)[0]
    log_m = measure_log_moments(mu, ns)
    return log_a + log_m + (alpha + 1.0) * np.log(ns)


def construct_pairing_measure(v, alpha, x=1.0, t0=0.5, N=256, lift=True, per_decade=32,
                              refine_tol=0.10):
    """Measure mu with a_n(v) m_n(mu) comparable to n**-(alpha+1).

    mu is realised from the envelope g of (1-t)**(alpha+x)/v_x by
    mu([t,1]) = g(t).  With ``lift`` a shift below 1 is raised to 1 first,
    which keeps the weight weakly normal of the same order.
    """
    _check_order(alpha)
    if lift and x < 1:
        x = 1.0
    ns = np.unique(np.round(np.geomspace(16, N, 64)).astype(int)).astype(float)
    base = {"alpha": alpha, "x": x, "t0": t0, "N": N}
    wn = weakly_normal_check(v, alpha, x, t0, per_decade=per_decade)
    pre_dbl = doubling_check(_shifted(v, float(x - 1.0))).verdict if x >= 1 else "skipped"
    if wn.verdict != "PASS" or pre_dbl not in ("IN_DHAT", "skipped"):
        base.update({"failure": "precondition", "weakly_normal": wn.verdict,
                     "shift_doubling": pre_dbl})
        return None, Report("pairing_measure", "FAIL", ("n", "band"), [], base)

    bands = []
    for pd in (per_decade, 2 * per_decade):
        env = weak_normal_envelope(v, alpha, x, t0, per_decade=pd)
        mu = _envelope_measure(env.grid, env.log_g)
        lb = _band(v, mu, alpha, ns)
        bands.append((env, mu, lb))
    env, mu, lb = bands[-1]
    widths = [float(np.exp(b.max() - b.min())) for _, _, b in bands]
    stable = all(np.isfinite(widths)) and abs(widths[1] / widths[0] - 1.0) <= refine_tol

    # n**x a_n(v_x) m_n(mu), the quantity the construction controls directly
    vx = _shifted(v, float(x))
    lx = x * np.log(ns) + log_moments(vx, ns)[0] + measure_log_moments(mu, ns)

    # comparison int t^n g against int_{1-1/n}^1 g for the envelope itself
    g_measure = DiscreteMeasure([], StepDensity(np.concatenate([env.grid, [1.0]]),
                                                np.exp(env.log_g)))
    tail_ratio = g_measure.log_moments(ns) - np.log(g_measure.tail_mass(1.0 - 1.0 / ns))
    tail_band = float(np.exp(tail_ratio.max() - tail_ratio.min()))

    base.update({"band_max_over_min": widths[-1], "band_coarse": widths[0], "stable": stable,
                 "band_min": float(np.exp(lb.min())), "band_max": float(np.exp(lb.max())),
                 "atom_at_one": float(np.exp(env.log_g[-1])),
                 "tail_mass_band": tail_band})
    rows = list(zip(ns.astype(int), np.exp(lb), np.exp(lx)))
    rep = Report("pairing_measure", verdict(stable), ("n", "a_n_m_n_n^(alpha+1)", "n^x_a_n(v_x)_m_n"),
                 rows, base)
    return PairingMeasure(mu, env, alpha, x), rep


# ----------------------------------------------------------- cusp example


def exp_example_check(beta=0.0, t0=0.5, y_max=Y_MAX, per_decade=16, slack=1e-8, band=3.0,
                      band_t0=0.75):
    """(1-t)^2 v / v_1 against its two-sided bound, then v_N / ((1-t)^(2N) v).

    The iterated ratios are asymptotic statements, so their band is judged
    on t >= band_t0 only; the full columns are still reported.
    """
    v = ExpCusp(beta)
    t, omt = dyadic_grid(t0, y_max, per_decade)
    lv = v._log(t, omt)
    r = np.exp(2.0 * np.log(omt) + lv - shift_log_on_grid(v, 1.0, t, omt))
    corr = 1.0 + (beta + 2.0) * omt
    lo, hi = np.minimum(1.0, corr), np.maximum(1.0, corr)
    inside = bool(np.all(r >= lo * (1 - slack)) and np.all(r <= hi * (1 + slack)))
    iterated = {}
    cols = [r]
    for N in (1, 2):
        q = np.exp(log_shift_on(v, float(N), t, omt) - 2 * N * np.log(omt) - lv)
        near = q[t >= band_t0]
        iterated[N] = (float(near.min()), float(near.max()))
        cols.append(q)
    in_band = all(1.0 / band <= a and b <= band for a, b in iterated.values())
    return Report("exp_example", verdict(inside and in_band), ("t", "identity_ratio", "v1_ratio", "v2_ratio"),
                  list(zip(t, *cols)),
                  {"beta": beta, "identity_band_holds": inside,
                   "v1_ratio_range": f"{iterated[1][0]!r} {iterated[1][1]!r}",
                   "v2_ratio_range": f"{iterated[2][0]!r} {iterated[2][1]!r}",
                   "band": band, "band_t0": band_t0})
