"""Finite measures on [0, 1]: atoms plus an optional density part.

``StepDensity`` is a piecewise-constant density; it is what the pairing
measure construction produces, and its moments and shifts are exact sums.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import gammaln, logsumexp

from .weights import DomainError, WeightDensity, log_moments


class StepDensity(WeightDensity):
    """Density equal to heights[i] on [edges[i], edges[i+1]), zero elsewhere."""

    kind = "Step"

    def __init__(self, edges, heights):
        edges = np.asarray(edges, dtype=float)
        heights = np.asarray(heights, dtype=float)
        if edges.size != heights.size + 1 or np.any(np.diff(edges) <= 0):
            raise DomainError("StepDensity needs increasing edges, one more than heights")
        if edges[0] < 0 or edges[-1] > 1 or np.any(heights < 0):
            raise DomainError("StepDensity must be a nonnegative density on [0, 1]")
        self.edges = edges
        self.heights = heights
        keep = heights > 0
        self._lo = edges[:-1][keep]
        self._hi = edges[1:][keep]
        self._logh = np.log(heights[keep])

    def _log(self, t, omt):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.edges, t, side="right") - 1
        inside = (idx >= 0) & (idx < self.heights.size)
        h = self.heights[np.clip(idx, 0, self.heights.size - 1)]
        with np.errstate(divide="ignore"):
            return np.where(inside & (h > 0), np.log(np.where(h > 0, h, 1.0)), -np.inf)

    def closed_log_moments(self, ns):
        ns = np.atleast_1d(np.asarray(ns, dtype=float))
        if self._logh.size == 0:
            return np.full(ns.size, -np.inf)
        m = (ns + 1.0)[:, None]
        # h (hi^{m} - lo^{m}) / m, with hi^m factored out
        with np.errstate(divide="ignore"):
            lhi = np.log(self._hi)[None, :]
            llo = np.log(self._lo)[None, :]
            terms = (self._logh[None, :] + m * lhi
                     + np.log(-np.expm1(m * (llo - lhi))) - np.log(m))
        return logsumexp(terms, axis=1)

    def breakpoints(self):
        return tuple(e for e in self.edges if 0 < e < 1)

    def config(self):
        return {"kind": self.kind,
                "params": {"edges": self.edges.tolist(), "heights": self.heights.tolist()}}


@dataclass
class DiscreteMeasure:
    """Atoms (location, mass) on [0, 1] plus an optional density part."""

    atoms: List[Tuple[float, float]] = field(default_factory=list)
    density: Optional[WeightDensity] = None

    def __post_init__(self):
        atoms = [(float(x), float(m)) for x, m in self.atoms if float(m) != 0.0]
        for x, m in atoms:
            if not 0.0 <= x <= 1.0 or m < 0:
                raise DomainError("atoms need locations in [0, 1] and nonnegative masses")
        self.atoms = atoms
        if not atoms and self.density is None:
            raise DomainError("measure has zero total mass")

    @property
    def locations(self):
        return np.array([x for x, _ in self.atoms], dtype=float)

    @property
    def masses(self):
        return np.array([m for _, m in self.atoms], dtype=float)

    def log_moments(self, ns):
        ns = np.atleast_1d(np.asarray(ns, dtype=float))
        parts = []
        if self.atoms:
            loc = self.locations
            with np.errstate(divide="ignore"):
                lloc = np.log(loc)
                # 0**0 = 1 for an atom at the origin
                powers = np.where(ns[:, None] == 0, 0.0, ns[:, None] * lloc[None, :])
                parts.append(logsumexp(powers + np.log(self.masses)[None, :], axis=1))
        if self.density is not None:
            parts.append(log_moments(self.density, ns)[0])
        return logsumexp(np.stack(parts), axis=0)

    def moments(self, N):
        return np.exp(self.log_moments(np.arange(N + 1)))

    def tail_mass(self, t):
        """mu([t, 1]) for an array of t."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        loc = self.locations
        out = (self.masses[None, :] * (loc[None, :] >= t[:, None])).sum(axis=1)
        if self.density is not None:
            if not isinstance(self.density, StepDensity):
                raise NotImplementedError("tail mass only for step densities")
            d = self.density
            lo = np.maximum(d.edges[:-1][None, :], t[:, None])
            width = np.clip(d.edges[1:][None, :] - lo, 0.0, None)
            out = out + (width * d.heights[None, :]).sum(axis=1)
        return out

    def config(self):
        return {"atoms": [list(a) for a in self.atoms],
                "density": None if self.density is None else self.density.config()}


def measure_log_moments(mu, ns):
    """log m_n for a DiscreteMeasure or a WeightDensity."""
    if isinstance(mu, DiscreteMeasure):
        return mu.log_moments(ns)
    return log_moments(mu, ns)[0]
