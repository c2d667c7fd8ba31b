"""Radial weights, their line densities on [0, 1], and moment sequences.

A line density ``v`` is stored through its logarithm. Every family evaluates
``log v`` from the pair ``(t, 1 - t)`` so that points extremely close to 1
keep full relative precision; the quadrature engine passes both.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .quadrature import ConvergenceError, integrate_log


class DomainError(ValueError):
    """Argument outside the domain of a density or operation."""


def _as_array(t):
    return np.asarray(t, dtype=np.float64)


def _check_unit(t):
    t = _as_array(t)
    if np.any(~(t >= 0.0)) or np.any(t >= 1.0):
        raise DomainError("densities are evaluated on [0, 1)")
    return t


class WeightDensity:
    """Nonnegative integrable density on [0, 1].

    Subclasses implement ``_log(t, omt)``, the log of the density at ``t``
    given ``omt = 1 - t`` computed accurately by the caller.
    """

    kind = "abstract"

    def _log(self, t, omt):
        raise NotImplementedError

    def log_eval(self, t):
        t = _check_unit(t)
        return self._log(t, 1.0 - t)

    def log_eval_omt(self, omt):
        """log v at t = 1 - omt, for callers that hold 1 - t exactly."""
        omt = _as_array(omt)
        return self._log(1.0 - omt, omt)

    def eval(self, t):
        return np.exp(self.log_eval(t))

    __call__ = eval

    # Relative evaluation used by the index shift. With s = t + (1-t) sigma
    # and oms = 1 - sigma, ``_log_rel`` returns log v(s) - anchor(t). The
    # anchor is log v(t) where that is finite; families whose logarithm is
    # huge near 1 override ``_anchor_shift`` to form the difference without
    # cancellation.

    def _anchor(self, t, omt):
        a = self._log(t, omt)
        return np.where(np.isfinite(a), a, 0.0)

    def _anchor_shift(self, t, omt, sigma, oms):
        """anchor(s) - anchor(t)."""
        return self._anchor(t + omt * sigma, omt * oms) - self._anchor(t, omt)

    def _log_rel(self, t, omt, sigma, oms):
        return self._log(t + omt * sigma, omt * oms) - self._anchor(t, omt)

    def closed_log_moments(self, ns) -> Optional[np.ndarray]:
        """log a_n for real n >= 0 when a closed form exists, else None."""
        return None

    def breakpoints(self) -> Sequence[float]:
        """Points in (0, 1) where the density is not smooth."""
        return ()

    def config(self) -> dict:
        raise NotImplementedError

    def __repr__(self):
        return f"{self.kind}({self.config().get('params', {})})"


class Power(WeightDensity):
    """v(t) = (1 - t)**alpha, alpha > -1."""

    kind = "Power"

    def __init__(self, alpha=0.0):
        alpha = float(alpha)
        if not alpha > -1.0:
            raise DomainError(f"Power weight needs alpha > -1, got {alpha}")
        self.alpha = alpha

    def _log(self, t, omt):
        if self.alpha == 0.0:
            return np.zeros_like(omt)
        with np.errstate(divide="ignore"):
            return self.alpha * np.log(omt)

    def _anchor_shift(self, t, omt, sigma, oms):
        if self.alpha == 0.0:
            return np.zeros(np.broadcast(omt, oms).shape)
        with np.errstate(divide="ignore"):
            return self.alpha * np.log(oms) + np.zeros_like(omt)

    _log_rel = _anchor_shift

    def closed_log_moments(self, ns):
        ns = _as_array(ns)
        a = self.alpha
        return gammaln(ns + 1.0) + gammaln(a + 1.0) - gammaln(ns + a + 2.0)

    def config(self):
        return {"kind": self.kind, "params": {"alpha": self.alpha}}


class PowerLog(WeightDensity):
    """(1-t)**alpha * log(1/(1-t))**beta for t >= t1, constant below t1."""

    kind = "PowerLog"

    def __init__(self, alpha=0.0, beta=0.0, t1=0.5):
        alpha, beta, t1 = float(alpha), float(beta), float(t1)
        if not 0.0 < t1 < 1.0:
            raise DomainError("PowerLog cutoff t1 must lie in (0, 1)")
        if not (alpha > -1.0 or (alpha == -1.0 and beta < -1.0)):
            raise DomainError("PowerLog weight is not integrable for these parameters")
        self.alpha, self.beta, self.t1 = alpha, beta, t1
        self._floor = self._tail(np.array(1.0 - t1))

    def _tail(self, omt):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.alpha * np.log(omt) + self.beta * np.log(-np.log(omt))

    def _log(self, t, omt):
        t = _as_array(t)
        clipped = np.minimum(omt, 1.0 - self.t1)
        out = self._tail(clipped)
        return np.where(t >= self.t1, out, self._floor)

    def _anchor_shift(self, t, omt, sigma, oms):
        # logs of oms and omt separately, so broadcasting only pays for log1p
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = np.log(oms)
            big_l = -np.log(np.minimum(omt, 1.0 - self.t1))
            stable = self.alpha * lo
            if self.beta != 0.0:
                stable = stable + self.beta * np.log1p(-lo / big_l)
        upper = np.asarray(t) >= self.t1
        if np.all(upper):
            return stable + np.zeros(np.broadcast(t, omt, sigma, oms).shape)
        shape = np.broadcast(t, omt, sigma, oms).shape
        out = stable + np.zeros(shape)
        below = ~np.broadcast_to(upper, shape)
        tb, ob, sb, qb = (np.broadcast_to(a, shape)[below] for a in (t, omt, sigma, oms))
        out[below] = self._log(tb + ob * sb, ob * qb) - self._log(tb, ob)
        return out

    _log_rel = _anchor_shift

    def breakpoints(self):
        return (self.t1,)

    def config(self):
        return {"kind": self.kind,
                "params": {"alpha": self.alpha, "beta": self.beta, "t1": self.t1}}


class ExpCusp(WeightDensity):
    """v(t) = (1 - t)**beta * exp(-1/(1 - t))."""

    kind = "ExpCusp"

    def __init__(self, beta=0.0):
        self.beta = float(beta)

    def _log(self, t, omt):
        with np.errstate(divide="ignore"):
            return self.beta * np.log(omt) - 1.0 / omt

    def _anchor_shift(self, t, omt, sigma, oms):
        # -1/(omt oms) + 1/omt = -sigma / (omt oms)
        with np.errstate(divide="ignore"):
            return self.beta * np.log(oms) - sigma / (omt * oms)

    _log_rel = _anchor_shift

    def config(self):
        return {"kind": self.kind, "params": {"beta": self.beta}}


class Tabulated(WeightDensity):
    """Log-linear interpolation of positive samples on a grid from 0 to 1."""

    kind = "Tabulated"

    def __init__(self, grid, values):
        grid = _as_array(grid)
        values = _as_array(values)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise DomainError("Tabulated needs matching 1-D grid and values")
        if np.any(np.diff(grid) <= 0):
            raise DomainError("Tabulated grid must be strictly increasing")
        if grid[0] != 0.0 or grid[-1] != 1.0:
            raise DomainError("Tabulated grid must start at 0 and end at 1")
        if np.any(values <= 0) or not np.all(np.isfinite(values)):
            raise DomainError("Tabulated values must be positive and finite")
        self.grid = grid
        self.values = values
        self._logv = np.log(values)

    def _log(self, t, omt):
        t = _as_array(t)
        if np.any(t < self.grid[0]) or np.any(t > self.grid[-1]):
            raise DomainError("Tabulated density does not extrapolate")
        return np.interp(t, self.grid, self._logv)

    def breakpoints(self):
        return tuple(self.grid[1:-1])

    def config(self):
        return {"kind": self.kind,
                "params": {"grid": self.grid.tolist(), "values": self.values.tolist()}}


class Sum(WeightDensity):
    kind = "Sum"

    def __init__(self, parts):
        parts = list(parts)
        if not parts:
            raise DomainError("Sum needs at least one part")
        self.parts = parts

    def _log(self, t, omt):
        stack = np.stack([np.broadcast_to(p._log(t, omt), np.shape(omt))
                          for p in self.parts])
        return logsumexp(stack, axis=0)

    def closed_log_moments(self, ns):
        logs = [p.closed_log_moments(ns) for p in self.parts]
        if any(x is None for x in logs):
            return None
        return logsumexp(np.stack(logs), axis=0)

    def breakpoints(self):
        return tuple(sorted({b for p in self.parts for b in p.breakpoints()}))

    def config(self):
        return {"kind": self.kind, "params": {"parts": [p.config() for p in self.parts]}}


class Scaled(WeightDensity):
    kind = "Scaled"

    def __init__(self, c, inner):
        c = float(c)
        if not c > 0:
            raise DomainError("Scaled needs a positive factor")
        self.c = c
        self.inner = inner
        self._logc = np.log(c)

    def _log(self, t, omt):
        return self._logc + self.inner._log(t, omt)

    def _anchor(self, t, omt):
        return self._logc + self.inner._anchor(t, omt)

    def _anchor_shift(self, t, omt, sigma, oms):
        return self.inner._anchor_shift(t, omt, sigma, oms)

    def _log_rel(self, t, omt, sigma, oms):
        return self.inner._log_rel(t, omt, sigma, oms)

    def closed_log_moments(self, ns):
        inner = self.inner.closed_log_moments(ns)
        return None if inner is None else self._logc + inner

    def breakpoints(self):
        return self.inner.breakpoints()

    def config(self):
        return {"kind": self.kind, "params": {"c": self.c, "inner": self.inner.config()}}


class LineDensity(WeightDensity):
    """v(t) = d * t**(d-1) * P(t), where P(|z|^2) is the radial profile."""

    kind = "LineDensity"

    def __init__(self, profile, dim):
        self.profile = profile
        self.dim = int(dim)

    def _log(self, t, omt):
        base = self.profile._log(t, omt)
        if self.dim == 1:
            return base
        with np.errstate(divide="ignore"):
            return np.log(self.dim) + (self.dim - 1) * np.log(t) + base

    def closed_log_moments(self, ns):
        inner = self.profile.closed_log_moments(_as_array(ns) + self.dim - 1)
        return None if inner is None else np.log(self.dim) + inner

    def breakpoints(self):
        return self.profile.breakpoints()

    def config(self):
        return {"kind": self.kind,
                "params": {"profile": self.profile.config(), "dim": self.dim}}


@dataclass
class RadialWeight:
    """Radial weight on the unit ball of C^d, omega(z) = profile(|z|^2)."""

    dim: int
    profile: WeightDensity

    def __post_init__(self):
        if int(self.dim) < 1:
            raise DomainError("ball dimension must be at least 1")
        self.dim = int(self.dim)

    def u(self, r):
        r = _as_array(r)
        return self.profile.eval(r * r)

    def to_line_density(self) -> WeightDensity:
        if self.dim == 1:
            return self.profile
        return LineDensity(self.profile, self.dim)

    def config(self):
        cfg = dict(self.profile.config())
        cfg["dim"] = self.dim
        return cfg


def to_line_density(weight: RadialWeight) -> WeightDensity:
    return weight.to_line_density()


def eval_density(v: WeightDensity, t):
    return v.eval(t)


# ---------------------------------------------------------------- moments

U_MAX = 60.0  # t = exp(-60) ~ 1e-26: the remaining piece near t = 0 is below any tolerance
_U_EDGES = np.concatenate([[0.0], U_MAX * 2.0 ** -np.arange(24, -1, -1)])


def quadrature_log_moments(v: WeightDensity, ns, rtol=1e-10):
    """log a_n by adaptive quadrature in u = -log t, for real n >= 0.

    Returns (log_values, relative_error_estimates).
    """
    ns = np.atleast_1d(_as_array(ns))
    np1 = (ns + 1.0)[:, None]

    def logf(u):
        t = np.exp(-u)
        omt = -np.expm1(-u)
        return -np1 * u[None, :] + v._log(t, omt)[None, :]

    bps = [-np.log(b) for b in v.breakpoints() if 0.0 < b < 1.0]
    res = integrate_log(logf, 0.0, U_MAX, rtol=rtol, breakpoints=bps,
                        initial_edges=_U_EDGES, K=ns.size)
    return res.log_value, res.rel_error


def log_moments(v: WeightDensity, ns, method="auto", rtol=1e-10):
    """log a_n for an array of n. Returns (log_values, sources)."""
    ns = np.atleast_1d(_as_array(ns))
    if np.any(ns < 0):
        raise DomainError("moment index must be nonnegative")
    if method not in ("auto", "closed_form", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method != "quadrature":
        closed = v.closed_log_moments(ns)
        if closed is not None:
            return np.asarray(closed, dtype=float), ["closed_form"] * ns.size
        if method == "closed_form":
            raise DomainError(f"{v.kind} has no closed-form moments")
    try:
        logs, _ = quadrature_log_moments(v, ns, rtol=rtol)
    except ConvergenceError as exc:
        bad = [int(ns[i]) for i in (exc.failing if exc.failing is not None else [])]
        raise ConvergenceError(f"moment quadrature failed at n={bad[:5]}",
                               exc.achieved, exc.failing) from exc
    return logs, ["quadrature"] * ns.size


def moment(v: WeightDensity, n, method="auto") -> float:
    """a_n = integral of t**n v(t) over [0, 1]."""
    logs, _ = log_moments(v, [n], method=method)
    return float(np.exp(logs[0]))


@dataclass
class MomentSequence:
    values: np.ndarray
    log_values: np.ndarray
    source: List[str]
    weight: WeightDensity = field(repr=False)

    def check_invariants(self, slack=1e-10) -> List[str]:
        problems = []
        a = self.values
        la = self.log_values
        if np.any(~np.isfinite(la)) or np.any(a <= 0):
            problems.append("nonpositive moment")
        if np.any(np.diff(la) > slack):
            problems.append("moments increase")
        if la.size >= 3:
            # log-convexity: 2 log a_{n+1} <= log a_n + log a_{n+2}
            gap = 2 * la[1:-1] - la[:-2] - la[2:]
            if np.any(gap > np.log1p(slack)):
                problems.append("log-convexity violated")
        return problems

    def rows(self):
        for n, (a, la, src) in enumerate(zip(self.values, self.log_values, self.source)):
            yield {"n": n, "a_n": a, "log_a_n": la, "source": src}


def moment_sequence(v: WeightDensity, N: int, method="auto") -> MomentSequence:
    if N < 0:
        raise DomainError("N must be nonnegative")
    logs, src = log_moments(v, np.arange(N + 1), method=method)
    return MomentSequence(values=np.exp(logs), log_values=logs, source=src, weight=v)


@dataclass
class RatioReport:
    n: np.ndarray
    ratio: np.ndarray
    deviation: np.ndarray
    tolerance: float
    verdict: str

    @property
    def passed(self):
        return self.verdict == "PASS"

    def rows(self):
        for n, r, d in zip(self.n, self.ratio, self.deviation):
            yield {"n": int(n), "ratio": r, "deviation": d}


def trend_verdict(ns, log_ratio, tol, trend_slack=1e-12):
    """PASS when |ratio - 1| at the largest n is below tol and shrinks along n."""
    ratio = np.exp(log_ratio)
    dev = np.abs(np.expm1(log_ratio))
    decreasing = bool(np.all(np.diff(dev) <= trend_slack))
    ok = dev[-1] <= tol and decreasing
    return RatioReport(np.asarray(ns), ratio, dev, tol, "PASS" if ok else "FAIL")


def moment_ratio_limit_check(v: WeightDensity, w: WeightDensity, n_list, tol=1e-2):
    """Compare moments of two weights with v/w -> 1 at t -> 1."""
    ns = np.sort(np.asarray(n_list, dtype=float))
    lv, _ = log_moments(v, ns)
    lw, _ = log_moments(w, ns)
    return trend_verdict(ns, lv - lw, tol)


# ----------------------------------------------------------------- config

_FAMILIES = {
    "power": lambda p: Power(p.get("alpha", 0.0)),
    "powerlog": lambda p: PowerLog(p.get("alpha", 0.0), p.get("beta", 0.0), p.get("t1", 0.5)),
    "expcusp": lambda p: ExpCusp(p.get("beta", 0.0)),
    "tabulated": lambda p: Tabulated(p["grid"], p["values"]),
    "sum": lambda p: Sum([density_from_config(c) for c in p["parts"]]),
    "scaled": lambda p: Scaled(p["c"], density_from_config(p["inner"])),
}


def density_from_config(cfg: dict) -> WeightDensity:
    kind = str(cfg.get("kind", "")).replace("_", "").replace("-", "").lower()
    if kind not in _FAMILIES:
        raise DomainError(f"unknown weight kind {cfg.get('kind')!r}")
    return _FAMILIES[kind](cfg.get("params") or {})


def weight_from_config(cfg: dict) -> RadialWeight:
    """Build a radial weight from ``{kind, params, dim}``."""
    return RadialWeight(int(cfg.get("dim", 1)), density_from_config(cfg))
