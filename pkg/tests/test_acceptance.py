"""Acceptance suite: one test per criterion, each timed against its budget.

Every check prints a single ``PASS``/``FAIL`` line with its wall time. Under
pytest the lines are also collected into the terminal summary; run the file
directly (``python tests/test_acceptance.py``) to get just the lines.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.special import gammaln

sys.path.insert(0, str(Path(__file__).resolve().parent))

from besovlab import (BesovSpace, ExpCusp, GradedSpace, Power, PowerLog, PowerSeriesKernel,
                      RadialWeight, ball_growth_bound_check, bekolle_b2_profile, binomial_kernel,
                      column_row_norms, doubling_check, exp_example_check,
                      index_shift_equivalence_check, kaluza_coeffs, log_convexity_check,
                      log_moments, moment_shift_asymptotic, pick_equivalent_kernel, pick_test,
                      pointwise_bound_check, semigroup_check, weakly_normal_order)
from besovlab.measures import DiscreteMeasure
from besovlab.shift import shift_log_on_grid
from besovlab.triangular import inclusion_suite, kacnelson_suite, random_symbol
from besovlab.weights import Scaled

import conftest
from conftest import battery

GRID64 = np.linspace(0.0, 0.98, 64)
GRID128 = np.linspace(0.0, 0.99, 128)
POWERS = (-0.5, 0.0, 1.0, 2.5)
MINUTES = 60.0


def radial_battery():
    """The battery as ball weights: line densities on the disk plus the d=2 unit weight."""
    out = {k: RadialWeight(1, v) for k, v in battery().items() if k != "ball2_unit"}
    out["ball2_unit"] = RadialWeight(2, Power(0.0))
    return out


def _run(number, title, budget, check):
    start = time.perf_counter()
    ok, detail = check()
    elapsed = time.perf_counter() - start
    if elapsed >= budget:
        ok = False
        detail += f"; over budget {budget:.0f} s"
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {title} ({elapsed:.2f} s) {detail}"
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)
    return ok, line


# ------------------------------------------------------------------ checks


def check_moment_closed_forms():
    ns = np.arange(513, dtype=float)
    worst = 0.0
    for a in POWERS:
        got = log_moments(Power(a), ns, method="quadrature")[0]
        exact = gammaln(ns + 1) + gammaln(a + 1) - gammaln(ns + a + 2)
        worst = max(worst, float(np.max(np.abs(np.expm1(got - exact)))))
    return worst <= 1e-8, f"max rel err {worst:.2e}"


def _power_shift_exact(a, x, t):
    return gammaln(a + 1) - gammaln(a + x + 1) + (a + x) * np.log1p(-t)


def check_shift_and_semigroup():
    closed = 0.0
    for a in POWERS:
        for x in (0.3, 1.0, 2.5):
            exact = _power_shift_exact(a, x, GRID64)
            # the closed-form path and the generic quadrature path
            for v in (Power(a), Scaled(1.0, Power(a))):
                got = shift_log_on_grid(v, x, GRID64)
                closed = max(closed, float(np.max(np.abs(np.expm1(got - exact)))))
    rng = np.random.default_rng(20)
    pairs = rng.uniform(0.1, 3.0, size=(20, 2))
    failures, worst = [], 0.0
    for label, v in battery().items():
        for x, y in pairs:
            rep = semigroup_check(v, float(x), float(y), GRID64, tol=1e-6)
            worst = max(worst, rep.summary["max_rel_diff"])
            if not rep.passed:
                failures.append(f"{label}@({x:.2f},{y:.2f})")
    ok = closed <= 1e-8 and not failures
    return ok, f"closed-form rel err {closed:.2e}; semigroup worst {worst:.2e} over 160 pairs" + (
        f"; failing {failures}" if failures else "")


def check_shifted_moments():
    ns = [128, 256, 512, 1024]
    failures, worst = [], 0.0
    for label, v in battery().items():
        for x in (0.5, 1.0, 2.0):
            rep = moment_shift_asymptotic(v, x, ns, tol=0.05)
            dev = abs(rep.summary["final_deviation"])
            worst = max(worst, dev)
            if not rep.passed:
                failures.append(f"{label} x={x} deviation {dev:.4f}")
    return not failures, f"worst |deviation| at n=1024 {worst:.4f}" + (
        f"; failing {failures}" if failures else "")


def check_index_shift_band():
    ns = [64, 256, 1024, 4096]
    failures, worst = [], 1.0
    for label, w in radial_battery().items():
        space = BesovSpace(w, 0.0, 8)
        for x in (1.0, 2.0):
            rep = index_shift_equivalence_check(space, x, ns)
            worst = max(worst, rep.summary["band_constant"])
            if not rep.passed:
                failures.append(f"{label} x={x}")
    exp_rep = exp_example_check(beta=0.0)
    ok = not failures and exp_rep.passed
    return ok, (f"largest band constant {worst:.3g}; cusp iterate ratios v1 "
                f"[{exp_rep.summary['v1_ratio_range']}] v2 [{exp_rep.summary['v2_ratio_range']}]"
                + (f"; failing {failures}" if failures else ""))


def check_kaluza_certificates():
    problems = []
    sz = kaluza_coeffs(PowerSeriesKernel(np.ones(64)))
    if not (sz.c[1] == 1.0 and np.all(sz.c[2:] == 0.0)):
        problems.append("Szego")
    g2 = kaluza_coeffs(binomial_kernel(2.0, 64))
    if not abs(g2.c[2] + 1.0) <= 1e-12:
        problems.append("gamma=2")
    half = kaluza_coeffs(binomial_kernel(0.5, 512))
    if not (half.c[1] == 0.5 and half.c[2] == 0.125 and half.N == 512
            and np.all(half.c[1:] >= -half.eps[1:])):
        problems.append("gamma=1/2")
    g15 = kaluza_coeffs(binomial_kernel(1.5, 64))
    if not (g15.first_negative == 2 and abs(g15.c[2] + 0.375) <= 1e-12):
        problems.append("gamma=3/2")
    return not problems, f"gamma=2 c2={float(g2.c[2])!r}; gamma=3/2 c2={float(g15.c[2])!r}" + (
        f"; failing {problems}" if problems else "")


def check_discrete_measures():
    rng = np.random.default_rng(51)
    bad = 0
    for _ in range(50):
        k = int(rng.integers(1, 9))
        atoms = list(zip(rng.uniform(0.05, 1.0, k), rng.uniform(1e-3, 10.0, k)))
        F = PowerSeriesKernel.from_measure(DiscreteMeasure(atoms), 256)
        bad += not (log_convexity_check(F).passed and kaluza_coeffs(F).passed)
    return bad == 0, f"{bad} of 50 measures fail a certificate"


def check_equivalent_pick():
    cases = [("d=2 unit s=1", RadialWeight(2, Power(0.0)), 1.0),
             ("d=1 unit s=1/2", RadialWeight(1, Power(0.0)), 0.5),
             ("d=1 unit s=1", RadialWeight(1, Power(0.0)), 1.0),
             ("d=1 Power(1) s=1", RadialWeight(1, Power(1.0)), 1.0)]
    parts, ok = [], True
    for name, w, s in cases:
        space = BesovSpace(w, s, 256)
        _, rep = pick_equivalent_kernel(space, N=256)
        sm = rep.summary
        good = (rep.passed and sm["kaluza"] == "CERTIFIED_PICK_UP_TO_N"
                and math.isfinite(sm["band_max_over_min"]) and sm["band_stable"])
        ok &= good
        parts.append(f"{name}: band {sm.get('band_max_over_min', math.nan):.4g} "
                     f"{'ok' if good else 'FAILED'} (pick_test {pick_test(space, N=256).verdict})")
    return ok, "; ".join(parts)


def check_truth_table():
    wrong = []
    for a in POWERS:
        v = Power(a)
        dbl = doubling_check(v)
        const = dbl.summary["doubling_constant"]
        if dbl.verdict != "IN_DHAT" or abs(const / 2 ** (a + 1) - 1) > 0.05:
            wrong.append(f"Power({a}) doubling {const:.4g}")
        if weakly_normal_order(v, xs=(0.0, 1.0)).summary["order"] != a:
            wrong.append(f"Power({a}) order")
        if not bekolle_b2_profile(v, a).verdict == "IN_B2":
            wrong.append(f"Power({a}) B2")
    # PowerLog(a, b): order a when b >= 0, anything above a (first grid step) when b < 0
    for v, lo, hi in ((PowerLog(1.0, 1.0), 1.0, 1.0), (PowerLog(0.0, -1.0), 0.25, 0.25)):
        name = f"PowerLog({v.alpha:g},{v.beta:g})"
        if doubling_check(v, t0=0.5).verdict != "IN_DHAT":
            wrong.append(f"{name} doubling")
        order = weakly_normal_order(v, xs=(0.0, 1.0)).summary["order"]
        if order == "none" or not lo <= order <= hi:
            wrong.append(f"{name} order {order}")
        if not any(bekolle_b2_profile(v, eta).passed for eta in (0.0, 0.5, 1.0, 2.0)):
            wrong.append(f"{name} B2")
    ball = battery()["ball2_unit"]
    if doubling_check(ball, t0=0.5).verdict != "IN_DHAT":
        wrong.append("ball doubling")
    if weakly_normal_order(ball, xs=(0.0, 1.0)).summary["order"] != 0.0:
        wrong.append("ball order")
    if bekolle_b2_profile(ball, 0.0).verdict != "IN_B2":
        wrong.append("ball B2")
    cusp = ExpCusp(0.0)
    cd = doubling_check(cusp)
    if cd.verdict != "NOT_DHAT" or not cd.summary["final_ratio"] > 1e3:
        wrong.append("ExpCusp doubling")
    if weakly_normal_order(cusp, alphas=[0.0, 2.0, 5.0, 10.0]).summary["order"] != "none":
        wrong.append("ExpCusp order")
    if any(bekolle_b2_profile(cusp, eta).passed for eta in (-0.5, 0.0, 0.5, 1.0, 2.0, 4.0)):
        wrong.append("ExpCusp B2")
    return not wrong, f"cusp doubling ratio {cd.summary['final_ratio']:.3g}" + (
        f"; mismatches {wrong}" if wrong else "")


def check_kacnelson():
    scalar = kacnelson_suite(1000, 1, dim_max=12, seed=0).summary
    block = kacnelson_suite(200, "mixed", dim_max=12, seed=1).summary
    bad = scalar["violations"] + block["violations"]
    return bad == 0, (f"violations {scalar['violations']}+{block['violations']}; worst ratio "
                      f"{max(scalar['worst_ratio'], block['worst_ratio']):.6f}")


def check_inclusions():
    weights = {"disk": RadialWeight(1, Power(0.0)), "disk_p1": RadialWeight(1, Power(1.0)),
               "disk_pl": RadialWeight(1, PowerLog(1.0, 1.0)),
               "disk_cusp": RadialWeight(1, ExpCusp(0.0)), "ball": RadialWeight(2, Power(0.0)),
               "ball_p1": RadialWeight(2, Power(1.0))}
    rep = inclusion_suite(300, weights, seed=10)
    v = rep.summary["violations"]
    return v == 0, f"{v} violations in 300 instances"


def check_column_row():
    rng = np.random.default_rng(11)
    H = GradedSpace.hardy(410)
    worst = 0.0
    for _ in range(20):
        fam = [random_symbol(rng, 1, max_degree=4) for _ in range(int(rng.integers(2, 5)))]
        sm = column_row_norms(fam, H, H, 400).summary
        worst = max(worst, abs(sm["row"] - sm["col"]) / sm["col"])
    band = 0.0
    for w in radial_battery().values():
        cap = 40 if w.dim == 1 else 10
        space = BesovSpace(w, 0.5, cap + 4)
        fam = [random_symbol(rng, w.dim, max_degree=4) for _ in range(3)]
        band = max(band, column_row_norms(fam, space, space, cap).summary["row_over_col"])
    return worst <= 1e-2 and band <= 10, f"Hardy worst |row-col|/col {worst:.2e}; battery max row/col {band:.3f}"


def check_pointwise_bounds():
    worst, bad = 0.0, []
    for label, v in battery().items():
        for x, a in ((0.5, 0.5), (1.0, 1.0), (2.0, 0.5)):
            rep = pointwise_bound_check(v, x, a, GRID128, slack=1e-9)
            worst = max(worst, rep.summary["max_ratio"])
            if not rep.passed:
                bad.append(f"{label} pointwise ({x},{a})")
    radii = np.linspace(0.0, 0.99, 128)
    for label, w in radial_battery().items():
        rep = ball_growth_bound_check(w, 1.0, 0.5, radii, slack=1e-9)
        worst = max(worst, rep.summary["max_ratio"])
        if not rep.passed:
            bad.append(f"{label} ball")
    return not bad, f"largest bound ratio {worst:.6f}" + (f"; failing {bad}" if bad else "")


CRITERIA = [
    (1, "moment closed forms", 10.0, check_moment_closed_forms),
    (2, "shift closed form and semigroup", 30.0, check_shift_and_semigroup),
    (3, "shifted moment asymptotics", 60.0, check_shifted_moments),
    (4, "index-shift equivalence band", 2 * MINUTES, check_index_shift_band),
    (5, "Kaluza certificates", 5.0, check_kaluza_certificates),
    (6, "moment kernels of discrete measures", 10.0, check_discrete_measures),
    (7, "equivalent Pick kernels", 2 * MINUTES, check_equivalent_pick),
    (8, "classification truth table", 2 * MINUTES, check_truth_table),
    (9, "Kacnelson property suite", 60.0, check_kacnelson),
    (10, "inclusion contractivity", 2 * MINUTES, check_inclusions),
    (11, "column and row norms", 2 * MINUTES, check_column_row),
    (12, "pointwise and ball growth bounds", 10.0, check_pointwise_bounds),
]


@pytest.mark.parametrize("number,title,budget,check", CRITERIA, ids=[f"c{c[0]:02d}" for c in CRITERIA])
def test_acceptance(number, title, budget, check):
    ok, line = _run(number, title, budget, check)
    assert ok, line


if __name__ == "__main__":
    results = [_run(*c)[0] for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
