"""Finite sections of multiplication operators on graded spaces.

Bases are the normalized monomials z^a / ||z^a||, ordered by total degree
and then lexicographically, so multiplication by a polynomial is lower
triangular.  Sections of polynomial symbols are exact matrices; their norms
are lower bounds for the multiplier norms.
"""

import functools
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .besov import BesovSpace, GradedSeries, GradedSpace, kernel_coeffs, multi_indices, radial_derivative
from .reports import Report, verdict
from .shift import ball_shift
from .weights import DomainError, RadialWeight

NORM_TOL = 1e-10
KACNELSON_SLACK = 1e-9
ROW_COL_BAND = 10.0  # empirical harness parameter, not a proven constant


class OpNormError(ArithmeticError):
    pass


class KacnelsonViolation(AssertionError):
    pass


def op_norm(matrix, seed=0, tol=NORM_TOL, max_squarings=64):
    """Largest singular value by power iteration on the Gram matrix.

    Each step squares the (rescaled) Gram power, so step k applies G**(2**k)
    to a fixed seeded random start.  This copes with the tightly clustered
    top singular values of weighted shifts.
    """
    A = np.asarray(matrix)
    if A.size == 0:
        return 0.0
    G = A.conj().T @ A if A.shape[1] <= A.shape[0] else A @ A.conj().T
    n = G.shape[0]
    scale = float(np.abs(G).max())
    if scale == 0.0:
        return 0.0
    G = G / scale
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    if np.iscomplexobj(G):
        v = v + 1j * rng.standard_normal(n)
    P = G.copy()
    prev = None
    stable = 0
    for _ in range(max_squarings):
        w = P @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            w, nw = v, np.linalg.norm(v)
        w = w / nw
        lam = float(np.real(np.vdot(w, G @ w)))
        if prev is not None and abs(lam - prev) <= tol * abs(lam):
            stable += 1
            if stable >= 2:
                return math.sqrt(max(lam, 0.0) * scale)
        else:
            stable = 0
        prev = lam
        P = P @ P
        m = np.abs(P).max()
        if m == 0.0:
            break
        P /= m
    raise OpNormError(f"power iteration did not reach relative tolerance {tol}")


# --------------------------------------------------------------- Kacnelson


def _kacnelson_report(name, conj_norm, norm, strict, extra):
    ok = conj_norm <= norm * (1.0 + KACNELSON_SLACK)
    if strict and not ok:
        raise KacnelsonViolation(f"{name}: {conj_norm!r} > {norm!r}")
    summary = {"conjugated_norm": conj_norm, "norm": norm, "slack": KACNELSON_SLACK}
    summary.update(extra)
    return Report(name, verdict(ok), ("conjugated_norm", "norm"), [(conj_norm, norm)], summary)


def _check_diagonal(D):
    D = np.asarray(D, dtype=float)
    if np.any(D <= 0) or np.any(np.diff(D) > 0):
        raise DomainError("D must be positive and nonincreasing")
    return D


def kacnelson_conjugation(T, D, seed=0, strict=True):
    """||D T D^-1|| <= ||T|| for lower triangular T and nonincreasing D."""
    T = np.asarray(T)
    D = _check_diagonal(D)
    if np.any(np.triu(T, 1) != 0):
        raise DomainError("T must be lower triangular")
    conj = D[:, None] * T / D[None, :]
    return _kacnelson_report("kacnelson", op_norm(conj, seed), op_norm(T, seed), strict,
                             {"dim": T.shape[0]})


def kacnelson_block(blocks, D, seed=0, strict=True):
    """Same inequality for an r x r block matrix of lower triangular blocks."""
    blocks = [[np.asarray(b) for b in row] for row in blocks]
    D = _check_diagonal(D)
    for row in blocks:
        for b in row:
            if np.any(np.triu(b, 1) != 0):
                raise DomainError("every block must be lower triangular")
    big = np.block(blocks)
    conj = np.block([[D[:, None] * b / D[None, :] for b in row] for row in blocks])
    return _kacnelson_report("kacnelson_block", op_norm(conj, seed), op_norm(big, seed), strict,
                             {"levels": len(blocks), "dim": D.size})


# -------------------------------------------------------- multiplication


@functools.lru_cache(maxsize=64)
def monomial_basis(d, N):
    """Multi-indices of degree <= N: by total degree, then lexicographic."""
    out = []
    for n in range(N + 1):
        out.extend(sorted(multi_indices(d, n)))
    return tuple(out)


@dataclass
class TriangularSection:
    entries: np.ndarray
    rows: Sequence[tuple]
    cols: Sequence[tuple]
    domain_meta: np.ndarray
    codomain_meta: np.ndarray

    def is_triangular(self):
        deg_r = np.array([sum(a) for a in self.rows])
        deg_c = np.array([sum(a) for a in self.cols])
        mask = deg_r[:, None] < deg_c[None, :]
        return bool(np.all(self.entries[mask] == 0))


def _log_norms(space: GradedSpace, basis):
    return np.array([0.5 * space.log_monomial_norm_sq(a) for a in basis])


def _as_series(phi, d=None):
    if isinstance(phi, GradedSeries):
        return phi
    if isinstance(phi, dict):
        d = len(next(iter(phi))) if d is None else d
        return GradedSeries({tuple(k): complex(v) for k, v in phi.items()}, d)
    return GradedSeries.from_1d(phi)


def mult_matrix(phi, H: GradedSpace, K: GradedSpace, N) -> TriangularSection:
    """Exact matrix of f -> phi f from degree <= N in H to degree <= N + deg phi in K."""
    phi = _as_series(phi, H.dim)
    if not (phi.dim == H.dim == K.dim):
        raise DomainError("symbol and spaces must share the dimension")
    deg = phi.degree
    if N > H.N_max or N + deg > K.N_max:
        raise DomainError(f"section degree {N} + {deg} exceeds a space's cap")
    cols = monomial_basis(H.dim, N)
    rows = monomial_basis(H.dim, N + deg)
    where = {a: i for i, a in enumerate(rows)}
    lh = _log_norms(H, cols)
    lk = _log_norms(K, rows)
    complex_entries = any(c.imag != 0 for c in phi.coeffs.values())
    M = np.zeros((len(rows), len(cols)), dtype=complex if complex_entries else float)
    for j, b in enumerate(cols):
        for g, c in phi.coeffs.items():
            if c == 0:
                continue
            i = where[tuple(x + y for x, y in zip(b, g))]
            val = c * math.exp(lk[i] - lh[j])
            M[i, j] += val if complex_entries else val.real
    return TriangularSection(M, rows, cols, lh, lk)


def mult_norm_section(phi, H, K, N, seed=0, check_monotone=True):
    """Norm of the degree-N section; checked against the degree N-1 section."""
    norm = op_norm(mult_matrix(phi, H, K, N).entries, seed)
    if check_monotone and N > 0:
        smaller = op_norm(mult_matrix(phi, H, K, N - 1).entries, seed)
        if smaller > norm * (1.0 + KACNELSON_SLACK):
            raise ArithmeticError(f"section norm decreased from {smaller!r} to {norm!r}")
    return norm


# -------------------------------------------------------------- inclusions


def _hypotheses(H, Hp, K, Kp, n_max, slack=1e-12):
    """Coefficient conditions for Mult(H, H') inside Mult(K, K') contractively:
    kK_n/kK_{n+1} <= kH_n/kH_{n+1} and kK_n/kH_n <= kK'_n/kH'_n."""
    a = kernel_coeffs(H).log_b[:n_max + 1]
    ap = kernel_coeffs(Hp).log_b[:n_max + 1]
    b = kernel_coeffs(K).log_b[:n_max + 1]
    bp = kernel_coeffs(Kp).log_b[:n_max + 1]
    first = (b[:-1] - b[1:]) - (a[:-1] - a[1:])
    second = (b - a) - (bp - ap)
    bad1 = np.flatnonzero(first > slack * (1 + np.abs(b[:-1] - b[1:])))
    bad2 = np.flatnonzero(second > slack * (1 + np.abs(b - a)))
    problems = []
    if bad1.size:
        problems.append(f"ratio condition fails at n={int(bad1[0])}")
    if bad2.size:
        problems.append(f"quotient condition fails at n={int(bad2[0])}")
    return problems


def _space(w, s, cap):
    """BesovSpace at smoothness s; a prebuilt space is reused for its moments."""
    if isinstance(w, BesovSpace):
        if w.N_max < cap:
            raise DomainError(f"space cap {w.N_max} below the needed degree {cap}")
        return w.with_s(s)
    return BesovSpace(w, s, cap)


def rectangular_inclusion_check(phi, omega, nu, s, t, s_p, t_p, N, seed=0):
    """Section norm from B^t_omega to B^t'_nu against B^s_omega to B^s'_nu.

    omega and nu may be radial weights or prebuilt BesovSpace objects.
    """
    if not t <= s or not t_p - s_p <= t - s:
        raise DomainError("need t <= s and t' - s' <= t - s")
    phi = _as_series(phi, omega.dim)
    cap = N + phi.degree
    big = _space(omega, s, cap)
    big_p = _space(nu, s_p, cap) if nu is not omega else big.with_s(s_p)
    small = big.with_s(t)
    small_p = big_p.with_s(t_p)
    summary = {"s": s, "t": t, "s_prime": s_p, "t_prime": t_p, "N": N}
    problems = _hypotheses(big, big_p, small, small_p, cap)
    if problems:
        summary["hypothesis"] = "; ".join(problems)
        return Report("rectangular_inclusion", "FAIL", (), [], summary)
    upper = op_norm(mult_matrix(phi, big, big_p, N).entries, seed)
    lower = op_norm(mult_matrix(phi, small, small_p, N).entries, seed)
    ok = lower <= upper * (1.0 + KACNELSON_SLACK)
    summary.update({"norm_t": lower, "norm_s": upper, "hypothesis": "holds"})
    return Report("rectangular_inclusion", verdict(ok), ("norm_t", "norm_s"), [(lower, upper)],
                  summary)


def inclusion_contractivity_check(phi, omega, s, t, N, seed=0):
    """Section multiplier norm on B^t is at most that on B^s for t <= s."""
    rep = rectangular_inclusion_check(phi, omega, omega, s, t, s, t, N, seed)
    rep.name = "inclusion_contractivity"
    return rep


# ------------------------------------------------------- column and row


def _family(Phi, d=None):
    if isinstance(Phi, GradedSeries):
        return [Phi]
    return [_as_series(p, d) for p in Phi]


def column_row_norms(Phi, H, K, N, seed=0, band=ROW_COL_BAND):
    """Norms of f -> (phi_i f)_i and (f_i)_i -> sum phi_i f_i on sections."""
    fam = _family(Phi, H.dim)
    deg = max(p.degree for p in fam)
    mats = []
    for p in fam:
        pad = GradedSeries(dict(p.coeffs), p.dim)
        # pad every symbol to the common degree so the sections share rows
        zero_idx = tuple([deg] + [0] * (p.dim - 1))
        pad.coeffs.setdefault(zero_idx, 0.0)
        mats.append(mult_matrix(pad, H, K, N).entries)
    col = op_norm(np.vstack(mats), seed)
    row = op_norm(np.hstack(mats), seed)
    ratio = row / col if col > 0 else math.nan
    return Report("column_row", "PASS", ("col", "row", "row_over_col"), [(col, row, ratio)],
                  {"col": col, "row": row, "row_over_col": ratio, "m": len(fam), "N": N,
                   "empirical_band": band, "within_band": bool(ratio <= band),
                   "band_note": "harness parameter, not a theorem"})


# ------------------------------------------------------------ growth norms


def default_radii():
    inner = np.linspace(0.0, 0.95, 96)
    outer = 1.0 - np.exp2(-np.linspace(math.log2(20.0), 12.0, 64))
    return np.unique(np.concatenate([inner, outer]))


def growth_norm(Phi, alpha, radii=None, n_angles=256, n_directions=256, seed=0):
    """sqrt of sup (1-|z|^2)^(2 alpha) sum |phi_i(z)|^2 over sampled ball points."""
    if alpha < 0:
        raise DomainError("growth exponent must be nonnegative")
    fam = _family(Phi)
    d = fam[0].dim
    r = default_radii() if radii is None else np.asarray(radii, dtype=float)
    if d == 1:
        theta = 2 * np.pi * np.arange(n_angles) / n_angles
        dirs = np.exp(1j * theta)[:, None]
    else:
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((n_directions, d)) + 1j * rng.standard_normal((n_directions, d))
        dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
    best = 0.0
    for radius in r:
        pts = radius * dirs
        total = sum(np.abs(p.evaluate(pts)) ** 2 for p in fam)
        val = (1.0 - radius * radius) ** (2 * alpha) * float(np.max(total))
        best = max(best, val)
    return math.sqrt(best)


def derivative_multiplier_report(Phi, omega: RadialWeight, s, t, n_levels, N, seed=0):
    """Section norms of R^n Phi from B^s_omega into B^t_{omega_n}, n = 0..n_levels."""
    fam = _family(Phi, omega.dim)
    deg = max(p.degree for p in fam)
    H = BesovSpace(omega, s, N)
    rows = []
    for n in range(n_levels + 1):
        target = BesovSpace(ball_shift(omega, n), t, N + deg)
        derived = [radial_derivative(p, n) for p in fam]
        derived = [p if p.coeffs else GradedSeries({tuple([0] * omega.dim): 0.0}, omega.dim)
                   for p in derived]
        rows.append((n, column_row_norms(derived, H, target, N, seed).summary["col"]))
    g = growth_norm(fam, s - t, seed=seed)
    norms = np.array([v for _, v in rows])
    ok = bool(np.all(np.isfinite(norms)))
    return Report("derivative_multiplier", verdict(ok), ("n", "section_norm"), rows,
                  {"s": s, "t": t, "N": N, "growth_norm": g,
                   "growth_over_section": g / norms[0] if norms[0] > 0 else math.nan})


# ------------------------------------------------------- randomized suites


def _random_lower(rng, n):
    return np.tril(rng.standard_normal((n, n)))


def _random_diagonal(rng, n):
    return np.sort(rng.uniform(0.01, 1.0, n))[::-1]


def kacnelson_suite(trials, levels=1, dim_max=12, seed=0):
    """Random lower triangular instances; counts violations of the inequality."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    violations = 0
    for i in range(trials):
        n = int(rng.integers(1, dim_max + 1))
        r = levels if levels != "mixed" else int(rng.integers(2, 4))
        D = _random_diagonal(rng, n)
        if r == 1:
            rep = kacnelson_conjugation(_random_lower(rng, n), D, seed=i, strict=False)
        else:
            blocks = [[_random_lower(rng, n) for _ in range(r)] for _ in range(r)]
            rep = kacnelson_block(blocks, D, seed=i, strict=False)
        worst = max(worst, rep.summary["conjugated_norm"] / rep.summary["norm"])
        violations += not rep.passed
    return Report("kacnelson_suite", verdict(violations == 0), ("trials", "violations", "worst_ratio"),
                  [(trials, violations, worst)],
                  {"trials": trials, "levels": levels, "dim_max": dim_max, "seed": seed,
                   "violations": violations, "worst_ratio": worst})


def random_symbol(rng, d, max_degree=6, max_terms=6):
    deg = int(rng.integers(0, max_degree + 1))
    pool = [a for n in range(deg + 1) for a in multi_indices(d, n)]
    k = int(rng.integers(1, min(max_terms, len(pool)) + 1))
    picks = rng.choice(len(pool), size=k, replace=False)
    coeffs = {pool[i]: complex(rng.standard_normal(), rng.standard_normal()) for i in picks}
    # make sure the symbol has its nominal degree
    top = multi_indices(d, deg)[0]
    coeffs.setdefault(top, complex(rng.standard_normal(), 0.0) or 1.0)
    return GradedSeries(coeffs, d)


def inclusion_suite(instances, weights, seed=0, n_max=(60, 12), rectangular=True):
    """Random symbols, weights and smoothness pairs; counts violations.

    ``weights`` maps a label to a RadialWeight.  Section caps are n_max[0]
    for d = 1 and n_max[1] for d = 2 (dense d = 2 sections grow
    quadratically in the cap).
    """
    rng = np.random.default_rng(seed)
    labels = sorted(weights)
    by_dim = {}
    for lab in labels:
        by_dim.setdefault(weights[lab].dim, []).append(lab)
    spaces = {}

    def base(lab):
        if lab not in spaces:
            w = weights[lab]
            cap = (n_max[0] if w.dim == 1 else n_max[1]) + 6
            spaces[lab] = BesovSpace(w, 0.0, cap)
        return spaces[lab]

    rows = []
    violations = 0
    for i in range(instances):
        d = sorted(by_dim)[int(rng.integers(0, len(by_dim)))]
        labs = by_dim[d]
        om = labs[int(rng.integers(0, len(labs)))]
        nu = labs[int(rng.integers(0, len(labs)))] if rectangular and i % 2 else om
        phi = random_symbol(rng, d)
        N = int(rng.integers(1, (n_max[0] if d == 1 else n_max[1]) + 1))
        s = float(rng.uniform(-1.0, 2.0))
        t = s - float(rng.uniform(0.0, 2.0))
        if nu == om:
            s_p, t_p = s, t
        else:
            s_p = float(rng.uniform(-1.0, 2.0))
            t_p = s_p + (t - s) - float(rng.uniform(0.0, 1.0))
        B, Bn = base(om), base(nu)
        rep = rectangular_inclusion_check(phi, B, Bn if nu != om else B, s, t, s_p, t_p, N, seed=i)
        bad = not rep.passed
        violations += bad
        rows.append((i, om, nu, d, phi.degree, N, s, t, s_p, t_p,
                     rep.summary.get("norm_t", math.nan), rep.summary.get("norm_s", math.nan),
                     rep.verdict))
    return Report("inclusion_suite", verdict(violations == 0),
                  ("instance", "omega", "nu", "d", "deg", "N", "s", "t", "s_prime", "t_prime",
                   "norm_t", "norm_s", "verdict"), rows,
                  {"instances": instances, "violations": violations, "seed": seed})
