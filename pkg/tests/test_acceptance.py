"""Acceptance gate: one recorded PASS/FAIL line per criterion, printed at the end of the run.

Forms come from the shared cache; a cold cache spends a few minutes building
the weight <= 40 eigenforms with 370000 prime coefficients."""

import json
import math

import mpmath
import numpy as np
import pytest

from l4wb.arith_sums import divisors, expsum_scan, is_square, kloosterman, poisson_compare, s2_sum, s3_sum, tau
from l4wb.cli import dispatch
from l4wb.geometry import VOLUME, DomainGrid, l2_normalize, lp_norm, watson_check
from l4wb.hecke import cusp_dimension, hecke_matrix, mat_mul, victor_miller_basis
from l4wb.lfun import bump_check, edge_sym2, edge_sym2_inverse, main_term_sum
from l4wb.special_fn import (
    WINDOW_C1,
    WINDOW_C2,
    BesselAvgConfig,
    bessel_avg_pair,
    bessel_j,
    bump,
    noik_residual,
    support_window,
)
from l4wb.trace import TraceCheckConfig, maindone_check, petersson_check

WEIGHTS = [k for k in range(12, 42, 2) if cusp_dimension(k)]
WATSON_WEIGHTS = (12, 16, 18, 20, 22)
EDGE_BUDGET = 370_000  # 37 X at X = 10^4


def _all_forms(store, N=40_000):
    return [(k, f) for k in WEIGHTS for f in store.forms(k, N=N)]


# ---------------------------------------------------------------- 1, 2: Hecke algebra


def test_c01_exact_hecke_algebra(criterion):
    bad = []
    for k in range(12, 42, 2):
        d = cusp_dimension(k)
        space = victor_miller_basis(k, 6 * d + 6)
        T = {n: hecke_matrix(space, n) for n in (2, 3, 4, 6)}
        eye = tuple(tuple(int(i == j) for j in range(d)) for i in range(d))
        t4 = tuple(tuple(T[4][i][j] + 2 ** (k - 1) * eye[i][j] for j in range(d)) for i in range(d))
        if mat_mul(T[2], T[3]) != T[6] or mat_mul(T[2], T[2]) != t4:
            bad.append(k)
    criterion(1, not bad, f"T2T3 = T6 and T2^2 = T4 + 2^(k-1) I for k = 12..40; failures {bad}")
    assert not bad


def test_c02_hecke_relations_and_deligne(store, criterion):
    worst_rel, deligne_bad = 0.0, []
    for k, f in _all_forms(store):
        a = [None] + [f.a(n) for n in range(1, 2501)]
        for n in range(1, 51):
            for m in range(1, 51):
                rhs = mpmath.fsum(a[n * m // (d * d)] for d in divisors(math.gcd(n, m)))
                worst_rel = max(worst_rel, float(abs(a[n] * a[m] - rhs)))
        if any(abs(a[n]) > tau(n) for n in range(1, 2001)):
            deligne_bad.append((k, f.label))
    ok = worst_rel <= 1e-15 and not deligne_bad
    criterion(2, ok, f"max Hecke-relation defect {worst_rel:.1e}; Deligne failures {deligne_bad}")
    assert ok


# ---------------------------------------------------------------- 3: Petersson


def test_c03_petersson(store, criterion):
    worst, worst_tail = 0.0, 0.0
    for k in range(12, 32, 2):
        forms = store.forms(k) if cusp_dimension(k) else []
        L1 = [edge_sym2(f, X=1000).value for f in forms]
        for n in range(1, 11):
            for m in range(n, 11):
                r = petersson_check(TraceCheckConfig(k, n, m), forms, L1)
                worst = max(worst, r["gap"])
                worst_tail = max(worst_tail, r["c_tail"])
    ok = worst <= 1e-6 and worst_tail <= 1e-7
    criterion(3, ok, f"max |lhs - rhs| {worst:.1e}, certified c-tail <= {worst_tail:.1e}")
    assert ok


# ---------------------------------------------------------------- 4, 5: Watson and spectral decomposition


@pytest.fixture(scope="module")
def watson_runs(store):
    runs = {}
    for k in WATSON_WEIGHTS:
        (f,) = store.forms(k)
        runs[k] = {
            "l4": lp_norm(l2_normalize(f), 4)["power"],
            "watson": [watson_check(f, g) for g in store.forms(2 * k)],
        }
    return runs


def test_c04_watson(watson_runs, criterion):
    worst = max(w["rel_gap"] for run in watson_runs.values() for w in run["watson"])
    ok = worst <= 1e-3
    criterion(4, ok, f"max Watson rel_gap {worst:.1e} over k in {WATSON_WEIGHTS}")
    assert ok


def test_c05_spectral_decomposition(watson_runs, criterion):
    worst = max(
        abs(run["l4"] - math.fsum(w["lhs"] for w in run["watson"])) / run["l4"] for run in watson_runs.values()
    )
    ok = worst <= 1e-4
    criterion(5, ok, f"max relative gap {worst:.1e} between quadrature L4 and sum |<F^2, G>|^2")
    assert ok


# ---------------------------------------------------------------- 6: main-term identity

# measured: max gap * sqrt(k) over k = 12..40 is 4.3
MAIN_TERM_C = 4.5


def test_c06_main_term_identity(store, criterion):
    gaps = {}
    for k, f in _all_forms(store):
        gaps[(k, f.label)] = main_term_sum(f)["gap"]
    scaled = max(g * math.sqrt(k) for (k, _), g in gaps.items())
    g12 = gaps[(12, 0)]
    # the trend is stated for the lowest-labelled form
    ok = scaled <= MAIN_TERM_C and gaps[(36, 0)] < g12
    criterion(
        6, ok,
        f"max gap*sqrt(k) {scaled:.2f} (C = {MAIN_TERM_C}); k=12 gap {g12:.4f}; "
        f"k=36 gaps {[round(g, 4) for (k, _), g in gaps.items() if k == 36]}",
    )
    assert ok


# ---------------------------------------------------------------- 7: volume


def test_c07_volume(criterion):
    err = abs(DomainGrid().volume() - VOLUME)
    criterion(7, err <= 1e-8, f"|quadrature volume - pi/3| = {err:.1e}")
    assert err <= 1e-8


# ---------------------------------------------------------------- 8: Bessel suite


def _regime_agreement():
    worst = 0.0
    for ell in (50, 100, 200):
        tol = 10 * ell ** (-4 / 3)
        for x in np.linspace(0.1, math.sqrt(ell), 12):
            worst = max(worst, abs(bessel_j(ell, x, "series") - bessel_j(ell, x, "quadrature")) / tol)
        for x in np.linspace(ell * (1 + ell ** (-1 / 3)), 3 * ell, 40):
            worst = max(worst, abs(bessel_j(ell, x, "langer") - bessel_j(ell, x, "quadrature")) / tol)
    return worst


# measured residuals 0.0355 (K = 100) and 0.0193 (K = 200)
NOIK_C = 2.5


def _noik():
    res = {}
    for K in (100, 200):
        y = np.linspace(K, 2 * K, 50)
        res[K] = float(np.max(np.abs(noik_residual(BesselAvgConfig(K), y))))
    return res


def _y_on_level(x, level, upper):
    # (1 - y/4x) y^2 = level, on the branch below or above its maximum at y = 8x/3
    ymax = 8 * x / 3
    lo, hi = (ymax, 4 * x) if upper else (1e-9, ymax)
    return float(mpmath.findroot(lambda t: (1 - t / (4 * x)) * t * t - level, (lo, hi), solver="bisect"))


def _pair_checks(K=60):
    cfg = BesselAvgConfig(K, parity=2)
    out = {}
    # support flag against the window test, and slow phase drift inside the window.
    # The sum is real, so a zero of the amplitude flips the sign; the argument is read modulo pi,
    # and points at the cancellation floor (|value| < 1e-12) carry no phase.
    drift, flag_ok = 0.0, True
    for e in np.linspace(1.1, 1.3, 5):
        x = K**e
        for y in np.geomspace(5, 4 * x * 0.999, 300):
            ratio = y / (4 * x)
            r0 = bessel_avg_pair(cfg, x, y)
            flag_ok &= r0.support_flag == support_window(K, x, y)
            if not r0.support_flag:
                continue
            r1 = bessel_avg_pair(cfg, x + 1, 4 * (x + 1) * ratio)
            if min(abs(r0.value), abs(r1.value)) < 1e-12:
                continue
            drift = max(drift, abs(np.angle((r1.phase_removed / r0.phase_removed) ** 2)) / 2)
    out["flags"] = flag_ok
    out["phase_drift"] = drift
    # decay outside the window, one K^0.1 step in the violation factor at a time
    def ladder(x, level_of, upper):
        vals = [abs(bessel_avg_pair(cfg, x, _y_on_level(x, level_of(K ** (0.1 * j)), upper)).value)
                for j in range(1, 5)]
        return min(a / b for a, b in zip(vals, vals[1:]))

    x = K**1.2
    out["low_small_y"] = ladder(x, lambda v: WINDOW_C1 * K * K / v, upper=False)
    out["low_near_4x"] = ladder(x, lambda v: WINDOW_C1 * K * K / v, upper=True)
    x = K**1.5
    out["high"] = ladder(x, lambda v: WINDOW_C2 * K * K * v, upper=False)
    out["y_2x"] = abs(bessel_avg_pair(cfg, x, 2 * x).value)
    return out


def test_c08_bessel_suite(criterion):
    agree = _regime_agreement()
    noik = _noik()
    pair = _pair_checks()
    a_ok = agree <= 1
    b_ok = noik[100] <= NOIK_C * 100**-0.9 and noik[100] / noik[200] >= 1.7
    decay = [pair[key] for key in ("low_small_y", "low_near_4x", "high")]
    c_ok = pair["flags"] and pair["phase_drift"] <= 0.5 and min(decay) >= 10 and pair["y_2x"] <= 1e-6
    detail = (
        f"(a) worst error / 10 l^(-4/3) = {agree:.2f}; "
        f"(b) residual {noik[100]:.4f} at K=100, ratio {noik[100] / noik[200]:.2f}; "
        f"(c) phase drift {pair['phase_drift']:.3f} rad, decay per K^0.1 step "
        f"small-y {pair['low_small_y']:.1e}, near y=4x {pair['low_near_4x']:.2f}, "
        f"upper {pair['high']:.2f}; |value| at y=2x {pair['y_2x']:.1e}"
    )
    criterion(8, a_ok and b_ok and c_ok, detail)
    assert a_ok and b_ok and c_ok


# ---------------------------------------------------------------- 9: Poisson


def test_c09_poisson(criterion):
    errs = [
        poisson_compare(lambda n: np.ones(len(n)), bump, 1000, 1)["error"],
        poisson_compare(lambda n: np.exp(2j * np.pi * (n % 7) / 7), bump, 1000, 7)["error"],
        poisson_compare(lambda n: np.array([kloosterman(int(v) ** 2, 1, 7) for v in n]), bump, 2000, 7)["error"],
    ]
    ok = max(errs) <= 1e-9
    criterion(9, ok, f"errors {[f'{e:.1e}' for e in errs]}")
    assert ok


# ---------------------------------------------------------------- 10: exponential sums

S3_C, S3_EPS = 4.0, 0.1


def test_c10_expsum_scan(criterion):
    rows = expsum_scan(300, 5)
    s1_bad = [
        r[:3] for r in rows
        if abs(complex(r[3], r[4])) > 1 + 1e-8 or (not is_square(r[0]) and abs(complex(r[3], r[4])) > 1e-8 * r[0] ** -0.5)
    ]
    s2_bad, s2_max = [], 0.0
    for c in range(1, 301):
        for t in range(1, 21):
            for m in range(1, 21):
                v = s2_sum(c, t, m)
                s2_max = max(s2_max, abs(v))
                if t % c and abs(v) > 1e-10:
                    s2_bad.append((c, t, m))
    s3_worst = 0.0
    primes = [p for p in range(2, 51) if all(p % q for q in range(2, p))]
    for p in primes:
        for r1 in (1, 2, 3):
            for m in (1, 2, p):
                for t in (1, 2, p):
                    bound = S3_C * p**-0.5 * math.gcd(m, p) ** 0.5 * (p * p) ** S3_EPS
                    s3_worst = max(s3_worst, abs(s3_sum(p, p, r1, m, t, 1, 1)) / bound)
    ok = not s1_bad and not s2_bad and s2_max <= 1 + 1e-12 and s3_worst <= 1
    criterion(
        10, ok,
        f"S1 rows {len(rows)}, failures {len(s1_bad)}; S2 failures {len(s2_bad)}, max |S2| {s2_max:.3f}; "
        f"S3 worst |S3|/bound {s3_worst:.2f}",
    )
    assert ok


# ---------------------------------------------------------------- 11: bump identity


def test_c11_bump_identity(delta_full, criterion):
    g1 = bump_check(delta_full, 2, 2, 10_000)["gap"]
    g2 = bump_check(delta_full, 2, 2, 20_000)["gap"]
    ok = g1 <= 1e-6 and g1 / g2 >= 1.5
    criterion(11, ok, f"gap {g1:.1e} at N=10^4, {g2:.1e} at N=2*10^4")
    assert ok


# ---------------------------------------------------------------- 12: edge values


def test_c12_edge_consistency(store, criterion):
    products, slow = [], []
    for k, f in _all_forms(store, N=EDGE_BUDGET):
        L = edge_sym2(f, X=10_000).value
        products.append(L * edge_sym2_inverse(f, 10_000).value)
        e_lo = abs(edge_sym2(f, X=2500).value * edge_sym2_inverse(f, 2500).value - 1)
        if e_lo / abs(products[-1] - 1) < 2:
            slow.append((k, f.label))
    ok = all(0.99 <= p <= 1.01 for p in products) and not slow
    criterion(
        12, ok,
        f"{len(products)} forms, product in [{min(products):.5f}, {max(products):.5f}]; "
        f"error not halved from X=2500 to 10^4 for {len(slow)} forms {slow}",
    )
    assert ok


# ---------------------------------------------------------------- 13: end-to-end


def test_c13_maindone(delta_full, criterion):
    direct = lp_norm(l2_normalize(delta_full), 4)["power"]
    r = maindone_check(delta_full, direct)
    ok = r["gap"] <= 1e-2
    criterion(
        13, ok,
        f"literal gap {r['gap']:.3f} (main-term residual {r['main_residual']:.3f}); "
        f"exact rearrangement gap {r['exact_gap']:.1e}",
    )
    assert ok


# ---------------------------------------------------------------- 14: theorem average report


def test_c14_theorem_average(tmp_path, criterion):
    outs = []
    path = tmp_path / "avg.json"
    for _ in range(2):
        assert dispatch(["theorem-avg", "--K", "10", "--output", str(path)]) == 0
        rep = json.loads(path.read_text())
        rep["diagnostics"].pop("runtime_ms")
        outs.append(rep)
    res = outs[0]["results"]
    values = [p["three_over_pi_l4"] for p in res["per_form"]]
    ok = outs[0] == outs[1] and values and min(values) >= 1
    criterion(
        14, ok,
        f"report only: average {res['average']:.5f} vs target 6/pi = {res['target']:.10f}; "
        f"(3/pi)||F||^4 per form {[round(v, 4) for v in values]}",
    )
    assert ok
