"""Complete Pick certificates for unitarily invariant kernels.

A normalized kernel sum F_n <z, w>^n is a complete Pick kernel exactly when
the coefficients c_n of 1 - 1/F(z) are all nonnegative.  Raw kernels of
Besov norms often fail this while an equivalent norm passes; the equivalent
kernel is built from the pairing measure of the weight.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .besov import BesovSpace, GradedSpace, kernel_coeffs, log_sphere_norm_axis
from .classify import construct_pairing_measure
from .kernels import kaluza_recursion
from .measures import DiscreteMeasure, measure_log_moments
from .reports import Report, verdict
from .shift import shift
from .weights import DomainError, WeightDensity, log_moments

EPS_FACTOR = 1e-12
RECON_TOL = 1e-9
PICK_N = 512


@dataclass
class PowerSeriesKernel:
    """Normalized coefficients F_0 = 1, F_1, ..., F_N."""

    F: np.ndarray
    origin: str = "coefficients"

    def __post_init__(self):
        self.F = np.asarray(self.F, dtype=float)
        if self.F.size == 0 or np.any(~(self.F > 0)):
            raise DomainError("kernel coefficients must be positive")
        if abs(self.F[0] - 1.0) > 1e-12:
            raise DomainError("kernel must be normalized (F_0 = 1)")

    @classmethod
    def from_coeffs(cls, b, origin="coefficients"):
        b = np.asarray(b, dtype=float)
        return cls(b / b[0], origin)

    @classmethod
    def from_log(cls, log_b, origin="coefficients"):
        log_b = np.asarray(log_b, dtype=float)
        return cls(np.exp(log_b - log_b[0]), origin)

    @classmethod
    def from_measure(cls, mu, N):
        lm = measure_log_moments(mu, np.arange(N + 1))
        return cls.from_log(lm, "moments")

    @property
    def N(self):
        return self.F.size - 1

    def truncate(self, N):
        return PowerSeriesKernel(self.F[:N + 1], self.origin)


def binomial_kernel(gamma, N):
    """Taylor coefficients of (1 - z)**-gamma."""
    F = np.empty(N + 1)
    F[0] = 1.0
    for n in range(N):
        F[n + 1] = F[n] * (n + gamma) / (n + 1)
    return PowerSeriesKernel(F, f"binomial(gamma={gamma!r})")


def binomial_space(gamma, N, dim=1):
    """Graded space whose kernel is (1 - <z, w>)**-gamma."""
    space = GradedSpace.from_kernel(binomial_kernel(gamma, N).F, dim, f"binomial({gamma!r})")
    space.binomial_gamma = gamma
    return space


@dataclass
class KaluzaResult:
    """c[n] for n = 0..N with c[0] = 0 unused."""

    c: np.ndarray
    eps: np.ndarray
    first_negative: Optional[int]
    min_value: float
    reconstruction_error: float
    compensated: bool
    N: int
    F: np.ndarray = field(repr=False, default=None)

    @property
    def verdict(self):
        return "CERTIFIED_PICK_UP_TO_N" if self.first_negative is None else "NEGATIVE_COEFFICIENT"

    @property
    def passed(self):
        return self.first_negative is None

    def report(self):
        return Report("kaluza", self.verdict, ("n", "F_n", "c_n"),
                      list(zip(range(self.N + 1), self.F, self.c)),
                      {"N": self.N, "first_negative": self.first_negative or "none",
                       "min_value": self.min_value, "eps_factor": EPS_FACTOR,
                       "reconstruction_error": self.reconstruction_error,
                       "compensated": self.compensated})


def _reconstruction_error(F, c):
    """Largest |coefficient of (1 - sum c z^n) F| beyond degree 0, relative
    to the largest term entering it."""
    N = F.size - 1
    poly = -c.copy()
    poly[0] = 1.0
    prod = np.convolve(poly, F)[:N + 1]
    scale = np.convolve(np.abs(poly), np.abs(F))[:N + 1]
    rel = np.abs(prod[1:]) / scale[1:]
    return float(rel.max()) if rel.size else 0.0


def _run(F, compensated):
    c, mag = kaluza_recursion(F, compensated)
    eps = EPS_FACTOR * mag
    neg = np.flatnonzero(c[1:] < -eps[1:])
    first = int(neg[0]) + 1 if neg.size else None
    return c, eps, first


def kaluza_coeffs(F, N=None, precision="double"):
    """Coefficients c_n with 1/(1 - sum c_n z^n) = sum F_n z^n.

    c_n counts as negative below -eps_n, eps_n = 1e-12 times the summed
    magnitude of the terms at step n.  Any run with some |c_n| within ten
    tolerances is repeated in compensated arithmetic.
    """
    if not isinstance(F, PowerSeriesKernel):
        F = PowerSeriesKernel(F)
    if N is not None:
        F = F.truncate(N)
    if precision not in ("double", "extended"):
        raise ValueError(f"unknown precision {precision!r}")
    compensated = precision == "extended"
    c, eps, first = _run(F.F, compensated)
    if not compensated and np.any(np.abs(c[1:]) <= 10.0 * eps[1:]):
        compensated = True
        c, eps, first = _run(F.F, True)
    err = _reconstruction_error(F.F, c)
    if err > RECON_TOL:
        raise ArithmeticError(f"Kaluza reconstruction off by {err:.3g}")
    min_value = float(min(0.0, c[1:].min())) if F.N > 0 else 0.0
    return KaluzaResult(c, eps, first, min_value, err, compensated, F.N, F.F)


def log_convexity_check(F, slack=1e-12):
    """F_{n+1}/F_n nondecreasing, which implies every c_n >= 0."""
    if not isinstance(F, PowerSeriesKernel):
        F = PowerSeriesKernel(F)
    r = F.F[1:] / F.F[:-1]
    bad = np.flatnonzero(r[1:] < r[:-1] * (1.0 - slack))
    ok = bad.size == 0
    kal = kaluza_coeffs(F)
    if ok and not kal.passed:
        raise ArithmeticError("log-convex kernel produced a negative Kaluza coefficient")
    return Report("log_convexity", verdict(ok), ("n", "F_n+1/F_n"), list(zip(range(r.size), r)),
                  {"N": F.N, "first_violation": int(bad[0]) + 1 if bad.size else "none",
                   "kaluza": kal.verdict})


# -------------------------------------------------------- Besov spaces


def pick_equivalent_kernel(space: BesovSpace, N=256, x=1.0, t0=0.5, per_decade=32,
                           refine_tol=0.10):
    """Kernel sum m_n(mu) <z, w>^n with mu the pairing measure at order 2s - d.

    Returns (kernel or None, report); the band compares m_n(mu)/m_0(mu) with
    the space's own normalized b_n over n in [16, N].
    """
    alpha = 2.0 * space.s - space.dim
    summary = {"alpha_prime": alpha, "s": space.s, "dim": space.dim, "N": N}
    if not alpha > -1:
        summary["failure"] = "order 2s - d must exceed -1"
        return None, Report("pick_equivalent_kernel", "FAIL", (), [], summary)
    N = min(N, space.N_max)
    ns = np.arange(16, N + 1, dtype=float)
    log_b = kernel_coeffs(space).log_b
    runs = []
    for pd in (per_decade, 2 * per_decade):
        pm, rep = construct_pairing_measure(space.line, alpha, x, t0=t0, N=N, per_decade=pd)
        if pm is None:
            summary.update(rep.summary)
            return None, Report("pick_equivalent_kernel", "FAIL", (), [], summary)
        lm = measure_log_moments(pm.measure, np.arange(N + 1))
        band = (lm[16:] - lm[0]) - (log_b[16:N + 1] - log_b[0])
        runs.append((pm, lm, band))
    pm, lm, band = runs[-1]
    widths = [float(np.exp(b.max() - b.min())) for _, _, b in runs]
    stable = abs(widths[1] / widths[0] - 1.0) <= refine_tol
    kernel = PowerSeriesKernel.from_log(lm, "pairing measure moments")
    kal = kaluza_coeffs(kernel)
    ok = kal.passed and stable and np.isfinite(widths[1])
    summary.update({"band_max_over_min": widths[1], "band_coarse": widths[0],
                    "band_stable": stable, "kaluza": kal.verdict,
                    "band_min": float(np.exp(band.min())), "band_max": float(np.exp(band.max()))})
    rows = list(zip(ns.astype(int), kernel.F[16:], np.exp(log_b[16:N + 1] - log_b[0]), np.exp(band)))
    return kernel, Report("pick_equivalent_kernel", verdict(ok), ("n", "F_n", "b_n/b_0", "ratio"),
                          rows, summary)


def pick_test(space: GradedSpace, N=PICK_N, precision="double", equivalent_N=256):
    """RAW_PICK, EQUIVALENT_PICK or NEGATIVE_INCONCLUSIVE.

    A negative raw coefficient never refutes the Pick property up to an
    equivalent norm, hence the inconclusive verdict when both paths fail.
    """
    N = min(N, space.N_max)
    raw = kaluza_coeffs(PowerSeriesKernel.from_log(kernel_coeffs(space).log_b[:N + 1], "raw"),
                        precision=precision)
    summary = {"N": N, "raw_kaluza": raw.verdict,
               "raw_first_negative": raw.first_negative or "none",
               "raw_min_value": raw.min_value}
    if raw.passed:
        return Report("pick_test", "RAW_PICK", ("n", "F_n", "c_n"),
                      list(zip(range(N + 1), raw.F, raw.c)), summary)
    if isinstance(space, BesovSpace):
        kernel, rep = pick_equivalent_kernel(space, N=min(equivalent_N, N))
        summary.update({f"equivalent_{k}": v for k, v in rep.summary.items()})
        if rep.verdict == "PASS":
            return Report("pick_test", "EQUIVALENT_PICK", rep.columns, rep.rows, summary)
    if getattr(space, "binomial_gamma", None) is not None:
        summary["note"] = "exact binomial kernel: the negative coefficient is analytic"
    else:
        summary["note"] = "negative raw coefficient does not refute Pick under an equivalent norm"
    return Report("pick_test", "NEGATIVE_INCONCLUSIVE", ("n", "F_n", "c_n"),
                  list(zip(range(N + 1), raw.F, raw.c)), summary)


# --------------------------------------------------- integral kernels


class _DampedDensity(WeightDensity):
    """(1 - t)**x times another density."""

    kind = "Damped"

    def __init__(self, inner, x):
        self.inner, self.x = inner, float(x)

    def _log(self, t, omt):
        with np.errstate(divide="ignore"):
            return self.x * np.log(omt) + self.inner._log(t, omt)

    def breakpoints(self):
        return self.inner.breakpoints()


def _log_tail_integral(mu: DiscreteMeasure):
    """The second tail integral of mu as a density."""
    return shift(mu, 2.0)


def kernel_integral_representation(space: BesovSpace, s0, y, x, pairing, N=256, n_min=8,
                                   band_limit=10.0):
    """Coefficients of int (1-t)^x g2(t) / (1 - t<z,w>)^(x+3+2y) dt against b_n.

    g2 is the second tail integral of the pairing measure; the comparison is
    with the kernel coefficients of the space at smoothness s0 - y.
    """
    if not (x >= 0 and y >= 0):
        raise DomainError("x and y must be nonnegative")
    mu = pairing.measure if hasattr(pairing, "measure") else pairing
    g2 = _log_tail_integral(mu)
    dens = g2 if x == 0 else _DampedDensity(g2, x)
    ns = np.arange(n_min, N + 1, dtype=float)
    p = x + 3.0 + 2.0 * y
    log_binom = gammaln(ns + p) - gammaln(ns + 1.0) - gammaln(p)
    log_int = log_moments(dens, ns, method="quadrature" if x != 0 else "auto")[0]
    log_rep = log_binom + log_int
    target = space.with_s(s0 - y)
    log_b = kernel_coeffs(target).log_b[ns.astype(int)]
    log_ratio = log_rep - log_b
    ratio = np.exp(log_ratio)
    c = float(np.exp(np.max(np.abs(log_ratio - np.median(log_ratio)))))
    width = float(ratio.max() / ratio.min())
    ok = bool(np.all(np.isfinite(log_ratio))) and width <= band_limit
    return Report("kernel_integral_representation", verdict(ok), ("n", "a_rep", "b_n", "ratio"),
                  list(zip(ns.astype(int), np.exp(log_rep), np.exp(log_b), ratio)),
                  {"s0": s0, "x": x, "y": y, "band_max_over_min": width, "band_limit": band_limit,
                   "C": c, "ratio_min": float(ratio.min()), "ratio_max": float(ratio.max())})
