import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from besovlab import (BesovSpace, GradedSeries, GradedSpace, Power, RadialWeight, ball_shift,
                      column_row_norms, derivative_multiplier_report, growth_norm,
                      inclusion_contractivity_check, kacnelson_block, kacnelson_conjugation,
                      mult_matrix, mult_norm_section, op_norm, rectangular_inclusion_check)
from besovlab.triangular import (KacnelsonViolation, inclusion_suite, kacnelson_suite,
                                 monomial_basis, random_symbol)
from besovlab.weights import DomainError, ExpCusp, PowerLog

DISK = RadialWeight(1, Power(0))
BALL2 = RadialWeight(2, Power(0))
SHIFT2 = np.array([[0.0, 0.0], [1.0, 0.0]])


# ------------------------------------------------------------------ op_norm

def test_op_norm_examples():
    assert op_norm(np.eye(5)) == pytest.approx(1.0, rel=1e-12)
    assert op_norm(SHIFT2) == pytest.approx(1.0, rel=1e-12)
    assert op_norm(np.diag([3.0, 2.0, 1.0])) == pytest.approx(3.0, rel=1e-12)
    assert op_norm(np.zeros((3, 2))) == 0.0


@given(seed=st.integers(0, 10_000), m=st.integers(1, 30), n=st.integers(1, 30), cplx=st.booleans())
def test_op_norm_matches_lapack_svd(seed, m, n, cplx):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n)) + (1j * rng.standard_normal((m, n)) if cplx else 0)
    assert op_norm(A, seed=seed) == pytest.approx(np.linalg.norm(A, 2), rel=1e-9)


def test_op_norm_is_seed_deterministic():
    A = np.random.default_rng(1).standard_normal((40, 25))
    assert op_norm(A, seed=5) == op_norm(A, seed=5)


# ---------------------------------------------------------------- Kacnelson

def test_kacnelson_examples():
    rep = kacnelson_conjugation(SHIFT2, [1.0, 0.5])
    assert rep.summary["conjugated_norm"] == pytest.approx(0.5, rel=1e-12)
    T = np.tril(np.random.default_rng(0).standard_normal((6, 6)))
    rep = kacnelson_conjugation(T, np.ones(6))
    assert rep.summary["conjugated_norm"] == pytest.approx(rep.summary["norm"], rel=1e-12)


def test_kacnelson_block_examples():
    z = np.zeros((2, 2))
    rep = kacnelson_block([[z, SHIFT2], [SHIFT2, z]], [1.0, 0.5])
    D = np.array([1.0, 0.5])
    conj = np.block([[z, D[:, None] * SHIFT2 / D], [D[:, None] * SHIFT2 / D, z]])
    assert rep.passed
    assert rep.summary["conjugated_norm"] == pytest.approx(np.linalg.svd(conj, compute_uv=False)[0])
    T = np.tril(np.random.default_rng(2).standard_normal((4, 4)))
    single = kacnelson_block([[T]], np.linspace(1, 0.2, 4))
    assert single.summary == {**kacnelson_conjugation(T, np.linspace(1, 0.2, 4)).summary,
                              "levels": 1, "dim": 4}


def test_kacnelson_preconditions():
    with pytest.raises(DomainError):
        kacnelson_conjugation(np.ones((2, 2)), [1.0, 0.5])
    with pytest.raises(DomainError):
        kacnelson_conjugation(SHIFT2, [0.5, 1.0])
    with pytest.raises(DomainError):
        kacnelson_conjugation(SHIFT2, [1.0, 0.0])


def test_kacnelson_violation_is_raised_for_upper_part():
    # the inequality fails without triangularity; strict mode must say so
    with pytest.raises(KacnelsonViolation):
        from besovlab.triangular import _kacnelson_report
        _kacnelson_report("probe", 2.0, 1.0, True, {})


@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 12))
def test_kacnelson_property(seed, n):
    rng = np.random.default_rng(seed)
    T = np.tril(rng.standard_normal((n, n)))
    D = np.sort(rng.uniform(0.01, 1, n))[::-1]
    assert kacnelson_conjugation(T, D, seed=seed).passed


@given(seed=st.integers(0, 2 ** 32 - 1), r=st.sampled_from([2, 3]), n=st.integers(1, 6))
def test_kacnelson_block_property(seed, r, n):
    rng = np.random.default_rng(seed)
    blocks = [[np.tril(rng.standard_normal((n, n))) for _ in range(r)] for _ in range(r)]
    D = np.sort(rng.uniform(0.01, 1, n))[::-1]
    assert kacnelson_block(blocks, D, seed=seed).passed


def test_kacnelson_suite_small():
    assert kacnelson_suite(50, 1, seed=3).summary["violations"] == 0
    assert kacnelson_suite(20, "mixed", seed=3).summary["violations"] == 0


# ------------------------------------------------------------- mult_matrix

def test_hardy_shift_matrix():
    H = GradedSpace.hardy(12)
    M = mult_matrix([0, 1], H, H, 10).entries
    assert np.array_equal(M, np.eye(12, 11, -1))


def test_bergman_shift_matrix():
    B = BesovSpace(DISK, 0.0, 12)
    M = mult_matrix([0, 1], B, B, 10).entries
    n = np.arange(11)
    assert np.allclose(np.diag(M, -1), np.sqrt((n + 1) / (n + 2)), rtol=1e-13)


def test_multiplication_by_one_is_identity():
    B = BesovSpace(BALL2, 0.5, 6)
    assert np.allclose(mult_matrix({(0, 0): 1.0}, B, B, 6).entries, np.eye(len(monomial_basis(2, 6))))


def test_monomial_basis_order():
    assert monomial_basis(2, 2) == ((0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0))


@given(seed=st.integers(0, 10_000), d=st.sampled_from([1, 2]), N=st.integers(0, 8))
def test_sections_are_triangular(seed, d, N):
    phi = random_symbol(np.random.default_rng(seed), d)
    space = BesovSpace(RadialWeight(d, Power(1.0)), 0.5, N + phi.degree)
    sec = mult_matrix(phi, space, space, N)
    assert sec.is_triangular()
    deg_r = np.array([sum(a) for a in sec.rows])
    deg_c = np.array([sum(a) for a in sec.cols])
    assert np.all(sec.entries[deg_r[:, None] < deg_c[None, :]] == 0)


def test_cap_is_enforced():
    B = BesovSpace(DISK, 0.0, 5)
    with pytest.raises(DomainError):
        mult_matrix([0, 0, 1], B, B, 4)


# ----------------------------------------------------------- section norms

@pytest.mark.parametrize("N", [1, 10, 100])
def test_section_norm_closed_forms(N):
    H = GradedSpace.hardy(N + 1)
    assert mult_norm_section([0, 1], H, H, N) == pytest.approx(1.0, rel=1e-10)
    B = BesovSpace(DISK, 0.0, N + 1)
    assert mult_norm_section([0, 1], B, B, N) == pytest.approx(math.sqrt((N + 1) / (N + 2)), rel=1e-10)
    Dt = GradedSpace.from_kernel(1.0 / (np.arange(N + 2) + 1.0))
    assert mult_norm_section([0, 1], Dt, Dt, N) == pytest.approx(math.sqrt(2), rel=1e-10)


def test_bergman_section_at_400():
    B = BesovSpace(DISK, 0.0, 401)
    assert mult_norm_section([0, 1], B, B, 400) == pytest.approx(math.sqrt(401 / 402), rel=1e-10)


@settings(max_examples=25)
@given(seed=st.integers(0, 10_000), d=st.sampled_from([1, 2]), s=st.floats(-1, 2))
def test_section_norms_nondecreasing(seed, d, s):
    rng = np.random.default_rng(seed)
    phi = random_symbol(rng, d, max_degree=3)
    Nmax = 12 if d == 1 else 5
    space = BesovSpace(RadialWeight(d, PowerLog(1.0, 0.5)), s, Nmax + phi.degree)
    norms = [mult_norm_section(phi, space, space, N, check_monotone=False) for N in range(Nmax + 1)]
    assert np.all(np.diff(norms) >= -1e-9 * max(norms))


# --------------------------------------------------------------- inclusions

def test_inclusion_equal_smoothness_is_equality():
    rep = inclusion_contractivity_check([0, 1, 0.5], DISK, 1.0, 1.0, 20)
    assert rep.passed and rep.summary["norm_t"] == pytest.approx(rep.summary["norm_s"], rel=1e-12)


def test_inclusion_dirichlet_into_bergman():
    rep = inclusion_contractivity_check([0, 1], DISK, 1.0, 0.0, 50)
    assert rep.passed
    assert rep.summary["norm_t"] == pytest.approx(math.sqrt(51 / 52), rel=1e-10)
    # B^1 weights w_n = n^2/(n+1), w_0 = 1: the largest shift weight is w_2/w_1 = 8/3
    assert rep.summary["norm_s"] == pytest.approx(math.sqrt(8 / 3), rel=1e-10)


def test_rectangular_examples():
    rep = rectangular_inclusion_check([0, 1], DISK, RadialWeight(1, Power(1)), 1.0, 0.5, 0.5, 0.0, 30)
    assert rep.passed
    same = rectangular_inclusion_check([1, 2], DISK, DISK, 1.0, 0.5, 1.0, 0.5, 20)
    direct = inclusion_contractivity_check([1, 2], DISK, 1.0, 0.5, 20)
    assert same.summary["norm_t"] == pytest.approx(direct.summary["norm_t"], rel=1e-12)


def test_inclusion_hypotheses_enforced():
    with pytest.raises(DomainError):
        rectangular_inclusion_check([0, 1], DISK, DISK, 0.0, 1.0, 0.0, 1.0, 5)


def test_inclusion_suite_small():
    weights = {"p0": DISK, "p1": RadialWeight(1, Power(1)), "b2": BALL2,
               "e": RadialWeight(1, ExpCusp(0))}
    rep = inclusion_suite(30, weights, seed=11, n_max=(20, 6))
    assert rep.summary["violations"] == 0


# ---------------------------------------------------------------- col / row

def test_single_symbol_column_equals_row():
    H = GradedSpace.hardy(40)
    rep = column_row_norms([[1, 2, 0.5]], H, H, 38)
    assert rep.summary["col"] == pytest.approx(rep.summary["row"], rel=1e-12)


def test_hardy_pair_column_and_row_converge():
    H = GradedSpace.hardy(401)
    rep = column_row_norms([[1], [0, 1]], H, H, 400)
    col, row = rep.summary["col"], rep.summary["row"]
    assert col == pytest.approx(math.sqrt(2), rel=1e-12)
    assert abs(row - col) / col <= 1e-2


def test_drury_arveson_shift_is_row_contraction():
    # the row (z1, z2) has norm 1 on H^2_2; the column is sqrt(2), attained at f = 1
    DA = GradedSpace.drury_arveson(13, 2)
    rep = column_row_norms([{(1, 0): 1.0}, {(0, 1): 1.0}], DA, DA, 12)
    assert rep.summary["row"] == pytest.approx(1.0, rel=1e-9)
    assert rep.summary["col"] == pytest.approx(math.sqrt(2), rel=1e-9)
    assert rep.summary["within_band"]


# --------------------------------------------------------------- growth norm

def test_growth_norm_examples():
    assert growth_norm([[1]], 0.0) == pytest.approx(1.0)
    assert growth_norm([[3], [4]], 0.0) == pytest.approx(5.0)
    # sup r^2 (1 - r^2) = 1/4 at r^2 = 1/2
    assert growth_norm([[0, 1]], 0.5, radii=np.sqrt(np.linspace(0, 0.999, 1999))) == \
        pytest.approx(0.5, rel=1e-6)
    assert growth_norm([[0, 1]], 0.5) == pytest.approx(0.5, rel=1e-3)


def test_growth_norm_ball():
    # |z1|^2 + |z2|^2 = r^2 for the pair of coordinates
    val = growth_norm([{(1, 0): 1.0}, {(0, 1): 1.0}], 0.5, radii=np.sqrt(np.linspace(0, 0.999, 1999)))
    assert val == pytest.approx(0.5, rel=1e-6)


# ----------------------------------------------------------- derivative report

def test_derivative_report_for_constant_symbol():
    rep = derivative_multiplier_report([[1]], DISK, 0.5, 0.5, 2, 10)
    norms = rep.column("section_norm")
    assert norms[0] == pytest.approx(1.0, rel=1e-12)
    assert np.all(norms[1:] == 0.0)  # R^n 1 = 0 for n >= 1
    assert rep.summary["growth_norm"] == pytest.approx(1.0)


def test_derivative_report_scales_by_degree_powers():
    rep = derivative_multiplier_report([[0, 0, 1]], DISK, 1.0, 0.5, 2, 10)
    H = BesovSpace(DISK, 1.0, 10)
    for n, val in zip(rep.column("n"), rep.column("section_norm")):
        K = BesovSpace(ball_shift(DISK, int(n)), 0.5, 12)
        assert val == pytest.approx(2 ** n * mult_norm_section([0, 0, 1], H, K, 10), rel=1e-10)


def test_derivative_report_first_level():
    rep = derivative_multiplier_report([[0, 1]], DISK, 0.5, 0.5, 1, 10)
    H = BesovSpace(DISK, 0.5, 10)
    K = BesovSpace(ball_shift(DISK, 1), 0.5, 11)
    assert rep.column("section_norm")[1] == pytest.approx(mult_norm_section([0, 1], H, K, 10), rel=1e-12)
