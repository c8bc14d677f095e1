import math

import mpmath
import numpy as np
import pytest
from scipy.special import loggamma

from l4wb.arith_sums import moebius_array
from l4wb.hecke import BudgetError
from l4wb.lfun import (
    AFEWeights,
    bump_check,
    central_value_g,
    central_value_sym2xg,
    edge_sym2,
    edge_sym2_inverse,
    lambda_ratio,
    main_term_sum,
    sym2_dirichlet,
    v_weight,
    zeta,
)
from l4wb.special_fn import PoleError

# <Delta, Delta> from published tables, and L(1, sym^2 Delta) = <Delta, Delta> 2^23 pi^13 / 11!
PETERSSON_DELTA = mpmath.mpf("1.03536205680432092234781681222516459322e-6")
with mpmath.workdps(40):
    L1_DELTA = float(PETERSSON_DELTA * 2**23 * mpmath.pi**13 / mpmath.factorial(11))


def v_gauss(shifts, xi, sigma=1.0, T=12.0, h=0.01):
    """Weight with the extra factor exp(s^2): a second admissible smoothing.

    Any even entire weight that is 1 at s = 0 gives the same central value,
    so this checks the approximate functional equation independently of V."""
    t = np.arange(0, T + h / 2, h)
    s = sigma + 1j * t
    lg = sum(loggamma(s + a) - loggamma(a) for a in shifts) - len(shifts) * s * math.log(2 * math.pi) + s * s
    w = np.full(len(t), h)
    w[0] = h / 2
    g = np.exp(lg) / s
    xi = np.asarray(xi, dtype=float)
    return (np.exp(-np.outer(np.log(xi), s)) @ (g * w)).real / math.pi


def _gauss_chunks(shifts, xi, chunk=4000):
    return np.concatenate([v_gauss(shifts, xi[i : i + chunk]) for i in range(0, len(xi), chunk)])


@pytest.fixture(scope="module")
def s24(store):
    return store.forms(24)


def test_zeta_examples():
    assert zeta(2) == pytest.approx(math.pi**2 / 6, rel=1e-14)
    assert zeta(4) == pytest.approx(math.pi**4 / 90, rel=1e-14)
    assert zeta(1.1) == pytest.approx(float(mpmath.zeta(1.1)), rel=1e-12)
    with pytest.raises(PoleError):
        zeta(1)


def test_lambda_ratio_examples():
    assert lambda_ratio(12, 1, 0) == pytest.approx(1)
    assert lambda_ratio(12, 2, 0) == pytest.approx(1)
    assert lambda_ratio(12, 1, 2).real == pytest.approx(13 * 12 / (2 * math.pi) ** 2, rel=1e-13)
    s = mpmath.mpc(0.7, 3.1)
    ref = (2 * mpmath.pi) ** (-3 * s) * mpmath.gamma(s + 23) * mpmath.gamma(s + 12) * mpmath.gamma(s + 1) / (
        mpmath.gamma(23) * mpmath.gamma(12)
    )
    assert abs(lambda_ratio(12, 2, complex(s)) - complex(ref)) <= 1e-12 * abs(complex(ref))


def test_lambda_ratio_growth():
    # on Re s = A the ratio is at most its value at t = 0, about k^(jA); measured constant 0.40
    worst = max(
        abs(lambda_ratio(k, j, complex(A, t))) / k ** (j * A)
        for k in (12, 24, 40)
        for j in (1, 2)
        for A in (0.5, 1, 2, 3)
        for t in (0, 5, 30)
    )
    assert worst <= 1.0


def test_v_weight_limits():
    assert abs(v_weight(12, 1, 1e-6) - 1) <= 1e-4
    assert abs(v_weight(12, 1, 1e4)) <= 1e-6
    assert abs(v_weight(12, 2, 1e-6) - 1) <= 1e-4


def test_v_weight_against_closed_forms():
    for xi in (0.3, 1.0, 2.5, 7.0):
        gi = mpmath.gammainc(12, 2 * mpmath.pi * xi, regularized=True)
        assert v_weight(12, 1, xi) == pytest.approx(float(gi), abs=1e-14)
        G = mpmath.meijerg([[], []], [[23, 12, 0], []], (2 * mpmath.pi) ** 3 * xi) / (
            mpmath.gamma(23) * mpmath.gamma(12)
        )
        assert v_weight(12, 2, xi) == pytest.approx(float(G), abs=1e-13)


def test_v_weight_independent_of_contour():
    xi = np.array([0.5, 1.0, 3.0, 20.0])
    for j in (1, 2):
        base = v_weight(12, j, xi, sigma=1.5)
        for sigma in (0.5, 1.0, 2.0, 3.0):
            assert np.max(np.abs(v_weight(12, j, xi, sigma=sigma) - base)) <= 1e-8


def test_v_weight_shift_bound():
    # V(xi) (1 + xi/k^j)^3 stays bounded; measured max 1.35
    worst = 0.0
    for k in (12, 24, 40):
        for j in (1, 2):
            xi = np.geomspace(1e-3, 50 * k**j, 200)
            worst = max(worst, float(np.max(np.abs(v_weight(k, j, xi)) * (1 + xi / k**j) ** 3)))
    assert worst <= 2.0


def test_weights_refuse_short_contour():
    with pytest.raises(ValueError):
        AFEWeights(12, 3)
    with pytest.raises(BudgetError):
        AFEWeights(12, 1, T=2.0)(np.array([1.0]))


def test_central_value_g_exact_oracle(s24):
    # for j = 1 the weight is a regularized incomplete gamma function
    for g in s24:
        lv = central_value_g(g)
        M = 60
        a = g.a_array(M)
        ref = 2 * mpmath.fsum(
            a[m] * mpmath.gammainc(12, 2 * mpmath.pi * m, regularized=True) / mpmath.sqrt(m) for m in range(1, M + 1)
        )
        assert abs(lv.value - float(ref)) <= lv.tail_bound
        assert lv.tail_bound <= 1e-8


def test_central_value_g_second_smoothing(s24):
    M = 40000
    m = np.arange(1, M + 1, dtype=float)
    V = _gauss_chunks([12], m)
    for g in s24:
        ref = 2 * math.fsum(g.a_array(M)[1:] * V / np.sqrt(m))
        assert central_value_g(g).value == pytest.approx(ref, abs=1e-6)


def test_central_value_g_truncation(s24):
    for g in s24:
        lv = central_value_g(g)
        assert isinstance(lv.value, float)
        assert abs(central_value_g(g, M=2 * lv.truncation).value - lv.value) <= lv.tail_bound


def _sym2xg_oracle(f, g):
    # A(n, r) built directly from the Moebius convolution, weights from the second smoothing
    k = f.weight
    N2 = 80 * k * k
    A1 = f.A1_array(N2)
    mu = moebius_array(N2)
    ag = g.a_array(N2)
    xis, coeffs = [], []
    for r in range(1, math.isqrt(N2) + 1):
        nmax = N2 // (r * r)
        A = np.zeros(nmax)
        for d in range(1, r + 1):
            if r % d == 0 and mu[d]:
                idx = np.arange(d, nmax + 1, d)
                A[idx - 1] += mu[d] * A1[r // d] * A1[idx // d]
        n = np.arange(1, nmax + 1)
        xis.append(n * r * r)
        coeffs.append(A * ag[1 : nmax + 1] / np.sqrt(n * r * r))
    xi = np.concatenate(xis).astype(float)
    return 2 * math.fsum(np.concatenate(coeffs) * _gauss_chunks([2 * k - 1, k, 1], xi))


def test_central_value_sym2xg(delta_full, s24):
    pinned = [0.926839390408, 0.551352745378]
    for g, value in zip(s24, pinned):
        lv = central_value_sym2xg(delta_full, g)
        assert lv.value == pytest.approx(value, abs=1e-9)
        assert lv.value == pytest.approx(_sym2xg_oracle(delta_full, g), abs=1e-5)
        assert lv.tail_bound <= 1e-7


def test_sym2xg_rejects_wrong_weight(delta_full, store):
    with pytest.raises(ValueError):
        central_value_sym2xg(delta_full, store.forms(16)[0])


def test_edge_value_of_delta(delta_full):
    lv = edge_sym2(delta_full, X=1000)
    assert lv.value == pytest.approx(L1_DELTA, abs=1e-9)
    assert lv.tail_bound <= 1e-9


def test_edge_values_positive(store):
    for k in (16, 24, 30):
        for f in store.forms(k):
            assert edge_sym2(f, X=1000).value > 0


def test_edge_value_needs_budget(delta):
    with pytest.raises(BudgetError):
        edge_sym2(delta, X=1000)


def test_sym2_dirichlet_against_sharp_sum(delta_full):
    # sharp partial sums converge like N^(1-s); at s = 2 the tail past 3.7e5 is below 1e-9
    for s, sharp in ((2, 0.805875209485386), (2.5, 0.8613901839191026)):
        assert sym2_dirichlet(delta_full, s) == pytest.approx(sharp, abs=1e-8)
    with pytest.raises(ValueError):
        sym2_dirichlet(delta_full, 1.0)


def test_inverse_edge_value(delta_full):
    inv = edge_sym2_inverse(delta_full, 1000)
    assert inv.value > 0
    errs = [abs(L1_DELTA * edge_sym2_inverse(delta_full, X).value - 1) for X in (1000, 2500, 10000)]
    assert errs[2] <= 1e-3
    # X^-1 convergence: each step shrinks the error by at least the step ratio over 1.5
    assert errs[0] / errs[1] >= 2.5 / 1.5 and errs[1] / errs[2] >= 4 / 1.5


def test_inverse_series_against_dirichlet_inverse(delta_full):
    # coefficients of 1/L(s, sym^2 f) by inverting the A(n, 1) series term by term
    X = 1000
    D = int(-math.log(1e-16) * X) + 1
    A = delta_full.A1_array(D)
    b = np.zeros(D + 1)
    b[1] = 1.0
    for n in range(1, D + 1):
        if n > 1:
            b[n] = -b[n]
        if b[n]:
            m = np.arange(2, D // n + 1)
            b[n * m] += A[m] * b[n]
    n = np.arange(1, D + 1)
    ref = math.fsum(b[1:] / n * np.exp(-n / X))
    assert edge_sym2_inverse(delta_full, X).value == pytest.approx(ref, rel=1e-12)


def test_bump_check(delta_full):
    r = bump_check(delta_full, 8, 8, 100)
    assert r["gap"] <= 1e-12
    assert bump_check(delta_full, 2, 2, 10000)["gap"] <= 1e-6
    with pytest.raises(ValueError):
        bump_check(delta_full, 1, 2, 100)


def test_main_term_sum_is_truncation_stable(delta_full):
    r = main_term_sum(delta_full, L1=L1_DELTA)
    assert r["target"] == pytest.approx(6 / math.pi**2 * L1_DELTA**2)
    assert abs(main_term_sum(delta_full, L1=L1_DELTA, scale=2)["sum"] - r["sum"]) <= 1e-9
