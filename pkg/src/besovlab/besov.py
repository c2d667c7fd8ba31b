"""Norms and kernel coefficients of radially weighted Besov spaces.

Every space here is graded: the squared norm of a monomial z^a is
``w_|a| * ||z^a||^2`` with the sphere norm ``||z^a||^2 = a!(d-1)!/(|a|+d-1)!``.
For a Besov space the degree weights are w_0 = a_0 and w_n = n^(2s) a_n.
Other graded spaces (Hardy, Drury-Arveson, spaces given by kernel
coefficients) use the same machinery through :class:`GradedSpace`.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from scipy.special import gammaln

from .reports import Report, verdict
from .shift import shift
from .weights import RadialWeight, WeightDensity, log_moments, trend_verdict

MultiIndex = Tuple[int, ...]


def log_sphere_norm(index, d=None) -> float:
    """log of ||z^a||^2 in H^2 of the unit sphere of C^d."""
    index = tuple(int(i) for i in index)
    d = len(index) if d is None else d
    return (sum(gammaln(i + 1.0) for i in index) + gammaln(d)
            - gammaln(sum(index) + d))


def sphere_monomial_norm(index, d=None) -> float:
    return math.exp(log_sphere_norm(index, d))


def log_sphere_norm_axis(n, d):
    """log ||z_1^n||^2 = log(n!(d-1)!/(n+d-1)!) for arrays of n."""
    n = np.asarray(n, dtype=float)
    return gammaln(n + 1.0) + gammaln(d) - gammaln(n + d)


def drury_arveson_ratio(n, d):
    """(n+d-1)! / (n!(d-1)!): squared Drury-Arveson norm over squared sphere
    norm, the same for every homogeneous polynomial of degree n."""
    return math.comb(int(n) + int(d) - 1, int(d) - 1)


da_ratio = drury_arveson_ratio


def multi_indices(d, n):
    """All multi-indices of length d and total degree n, lexicographic."""
    if d == 1:
        return [(n,)]
    out = []
    for first in range(n, -1, -1):
        for rest in multi_indices(d - 1, n - first):
            out.append((first,) + rest)
    return out


@dataclass
class GradedSeries:
    """Polynomial in d variables, stored as {multi-index: coefficient}."""

    coeffs: Dict[MultiIndex, complex]
    dim: int

    @classmethod
    def monomial(cls, index, c=1.0):
        index = tuple(int(i) for i in index)
        return cls({index: complex(c)}, len(index))

    @classmethod
    def from_1d(cls, coeffs):
        return cls({(n,): complex(c) for n, c in enumerate(coeffs) if c != 0}, 1)

    @property
    def degree(self):
        return max((sum(a) for a in self.coeffs), default=0)

    def homogeneous(self, n):
        return GradedSeries({a: c for a, c in self.coeffs.items() if sum(a) == n}, self.dim)

    def __add__(self, other):
        out = dict(self.coeffs)
        for a, c in other.coeffs.items():
            out[a] = out.get(a, 0) + c
        return GradedSeries(out, self.dim)

    def __mul__(self, other):
        if isinstance(other, GradedSeries):
            out: Dict[MultiIndex, complex] = {}
            for (a, c), (b, e) in itertools.product(self.coeffs.items(), other.coeffs.items()):
                key = tuple(i + j for i, j in zip(a, b))
                out[key] = out.get(key, 0) + c * e
            return GradedSeries(out, self.dim)
        return GradedSeries({a: c * other for a, c in self.coeffs.items()}, self.dim)

    __rmul__ = __mul__

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return sum(c * np.prod(z ** np.array(a)) for a, c in self.coeffs.items())

    def evaluate(self, points):
        """Values at an array of points of shape (m, d)."""
        points = np.asarray(points, dtype=complex)
        out = np.zeros(points.shape[0], dtype=complex)
        for a, c in self.coeffs.items():
            out += c * np.prod(points ** np.array(a)[None, :], axis=1)
        return out


class GradedSpace:
    """Unitarily invariant space with squared monomial norms w_|a| ||z^a||^2."""

    def __init__(self, log_w, dim, name="graded"):
        self.log_w = np.asarray(log_w, dtype=float)
        self.dim = int(dim)
        self.name = name

    @property
    def N_max(self):
        return self.log_w.size - 1

    def log_monomial_norm_sq(self, index):
        n = sum(index)
        if n > self.N_max:
            raise ValueError(f"degree {n} exceeds the space's cap {self.N_max}")
        return self.log_w[n] + log_sphere_norm(index, self.dim)

    @classmethod
    def from_kernel(cls, b, dim=1, name="kernel"):
        """Space whose kernel is sum b_n <z, w>^n."""
        b = np.asarray(b, dtype=float)
        n = np.arange(b.size)
        return cls(-np.log(b) - log_sphere_norm_axis(n, dim), dim, name)

    @classmethod
    def hardy(cls, N, dim=1):
        return cls(np.zeros(N + 1), dim, "hardy")

    @classmethod
    def drury_arveson(cls, N, dim):
        n = np.arange(N + 1)
        return cls(gammaln(n + dim) - gammaln(n + 1.0) - gammaln(dim), dim, "drury_arveson")


class BesovSpace(GradedSpace):
    """B^s_omega truncated at degree N_max."""

    def __init__(self, weight, s, N_max, dim=None, method="auto"):
        if isinstance(weight, RadialWeight):
            dim = weight.dim if dim is None else dim
            line = weight.to_line_density()
        else:
            line = weight
            dim = 1 if dim is None else dim
        self.weight = weight
        self.line = line
        self.s = float(s)
        n = np.arange(N_max + 1)
        self.log_a, self.sources = log_moments(line, n, method=method)
        with np.errstate(divide="ignore"):
            log_w = self.log_a + 2.0 * self.s * np.where(n > 0, np.log(np.maximum(n, 1)), 0.0)
        super().__init__(log_w, dim, f"besov(s={self.s})")

    def with_s(self, s):
        out = object.__new__(BesovSpace)
        out.weight, out.line, out.s = self.weight, self.line, float(s)
        out.log_a, out.sources = self.log_a, self.sources
        n = np.arange(self.log_a.size)
        GradedSpace.__init__(out, self.log_a + 2.0 * out.s * np.log(np.maximum(n, 1)),
                             self.dim, f"besov(s={out.s})")
        return out


def besov_norm(f: GradedSeries, space: GradedSpace) -> float:
    total = 0.0
    for a, c in f.coeffs.items():
        if c != 0:
            total += abs(c) ** 2 * math.exp(space.log_monomial_norm_sq(a))
    return math.sqrt(total)


def radial_derivative(f: GradedSeries, s) -> GradedSeries:
    """R^s: degree-n part times n^s; the constant term is dropped for s != 0."""
    out = {}
    for a, c in f.coeffs.items():
        n = sum(a)
        if n == 0:
            if s == 0:
                out[a] = c
            continue
        out[a] = c * float(n) ** s
    return GradedSeries(out, f.dim)


@dataclass
class KernelCoefficients:
    b: np.ndarray
    log_b: np.ndarray
    dim: int

    def ratio_trend(self, n_list, tol=0.02):
        """|b_n/b_{n+1} - 1| shrinking along n_list."""
        ns = np.asarray(n_list, dtype=int)
        return trend_verdict(ns, self.log_b[ns] - self.log_b[ns + 1], tol)

    def rows(self, log_a=None):
        for n in range(self.b.size):
            ratio = math.exp(self.log_b[n] - self.log_b[n + 1]) if n + 1 < self.b.size else float("nan")
            a = math.exp(log_a[n]) if log_a is not None else float("nan")
            yield (n, a, self.b[n], ratio)


def kernel_coeffs(space: GradedSpace) -> KernelCoefficients:
    n = np.arange(space.N_max + 1)
    log_b = -space.log_w - log_sphere_norm_axis(n, space.dim)
    return KernelCoefficients(np.exp(log_b), log_b, space.dim)


def kernel_table(space: BesovSpace) -> Report:
    k = kernel_coeffs(space)
    return Report("kernel_coefficients", "PASS", ("n", "a_n", "b_n", "b_n/b_n+1"),
                  list(k.rows(space.log_a)), {"s": space.s, "dim": space.dim})


def index_shift_equivalence_check(space: BesovSpace, x, n_list, band=10.0):
    """r_n = n^(2(s+x)) a_n(omega_x) / (n^(2s) a_n(omega)); bounded and -> 1."""
    ns = np.sort(np.asarray(n_list, dtype=float))
    if x == 0:
        log_r = np.zeros(ns.size)
    else:
        # omega_x has line density v_{2x}
        shifted = shift(space.line, 2.0 * x)
        log_r = (2.0 * x * np.log(ns) + log_moments(shifted, ns)[0]
                 - log_moments(space.line, ns)[0])
    rep = trend_verdict(ns, log_r, np.inf)
    c = float(np.exp(np.max(np.abs(log_r))))
    ok = c <= band and rep.passed
    return Report("index_shift_equivalence", verdict(ok), ("n", "ratio", "deviation"),
                  list(zip(ns.astype(int), rep.ratio, rep.deviation)),
                  {"x": x, "s": space.s, "band_constant": c, "band_limit": band,
                   "trend_to_one": rep.passed})


def _ratio_sup(log_b, start):
    """sup over n >= start of b_{n+1}/b_n, or None when the ratio is not
    monotone on the computed tail."""
    r = np.diff(log_b[start - 1:])
    d = np.diff(r)
    # log-gamma rounding at large n puts ~1e-10 noise into second differences
    slack = 1e-9
    if np.all(d <= slack):
        return float(np.exp(r.max()))  # nonincreasing ratios: the head is the sup
    if np.all(d >= -slack) and r[-1] <= slack:
        return float(np.exp(max(r.max(), 0.0)))  # nondecreasing towards the limit 1
    return None


def kernel_diag(coeffs, radii, strict=False):
    """k_z(z) = sum b_n |z|^(2n) with a certified truncation bound."""
    if isinstance(coeffs, GradedSpace):
        coeffs = kernel_coeffs(coeffs)
    log_b = coeffs.log_b
    N = log_b.size - 1
    r = np.asarray(radii, dtype=float)
    if np.any(r >= 1) or np.any(r < 0):
        raise ValueError("radii must lie in [0, 1)")
    n = np.arange(N + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = log_b[None, :] + 2.0 * n[None, :] * np.log(r)[:, None]
    terms[:, 0] = log_b[0]
    terms[r == 0, 1:] = -np.inf
    m = terms.max(axis=1)
    values = np.exp(m) * np.exp(terms - m[:, None]).sum(axis=1)
    rho = _ratio_sup(log_b, max(1, (3 * N) // 4))
    certified = rho is not None
    if certified:
        q = rho * r * r
        with np.errstate(divide="ignore"):
            tail = np.where(q < 1, np.exp(terms[:, -1]) * q / (1.0 - q), np.inf)
        certified = bool(np.all(np.isfinite(tail)))
    else:
        tail = np.full(r.size, np.nan)
    if strict and not certified:
        raise ArithmeticError("kernel tail not certifiable: coefficient ratios not monotone")
    return Report("kernel_diag", verdict(certified), ("r", "k", "tail_bound"),
                  list(zip(r, values, tail)), {"N": N, "ratio_sup": rho, "certified": certified})


def _dyadic_tail(space_s, space_t, s, t, rel_tail=1e-6, k_max=40):
    """Profile at 1 - r^2 = 2^-k for k = 1.. while both kernel sums stay certified."""
    k = np.arange(1, k_max + 1)
    r = np.sqrt(1.0 - 2.0 ** -k)
    ds, dt = kernel_diag(space_s, r), kernel_diag(space_t, r)
    good = np.ones(k.size, dtype=bool)
    for rep in (ds, dt):
        tail = rep.column("tail_bound")
        good &= np.isfinite(tail) & (tail <= rel_tail * rep.column("k"))
    n = int(np.argmin(good)) if not good.all() else k.size
    prof = ds.column("k")[:n] * (2.0 ** -k[:n]) ** (2.0 * (t - s)) / dt.column("k")[:n]
    return k[:n], prof


def kernel_growth_check(space_s: GradedSpace, space_t: GradedSpace, s, t, radii, decay=0.75, levels=4):
    """Profile of k^s (1-r^2)^(2(t-s)) / k^t on a radius grid; PASS when bounded.

    Any finite grid is bounded, so boundedness is judged on a dyadic tail
    1 - r^2 = 2^-k reaching as far as the truncated kernels are certified:
    over the last ``levels`` levels the log-profile increments must be
    nonpositive or shrink at least geometrically by ``decay``.  Logarithmic
    growth shrinks like k/(k+1) and power growth not at all.
    """
    r = np.asarray(radii, dtype=float)
    ks = kernel_diag(space_s, r).column("k")
    kt = kernel_diag(space_t, r).column("k")
    prof = ks * (1.0 - r * r) ** (2.0 * (t - s)) / kt
    k, tail = _dyadic_tail(space_s, space_t, s, t)
    finite = bool(np.all(np.isfinite(prof)) and np.all(np.isfinite(tail)))
    summary = {"c": float(np.max(np.concatenate([prof, tail]))), "s": s, "t": t,
               "dyadic_levels": int(k.size)}
    if k.size < levels + 1:
        summary["reason"] = "kernel truncation too short for the dyadic tail"
        ok = False
    else:
        inc = np.diff(np.log(tail))[-levels:]
        pos = np.maximum(inc, 0.0)
        shrinking = bool(np.all(pos[1:] <= decay * pos[:-1] + 1e-12))
        ok = finite and (pos[-1] <= 1e-12 or shrinking)
        summary["last_increment"] = float(inc[-1])
    return Report("kernel_growth", verdict(ok), ("r", "k_s", "k_t", "profile"),
                  list(zip(r, ks, kt, prof)), summary)
