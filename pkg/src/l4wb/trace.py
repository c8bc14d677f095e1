"""Petersson trace formula checks and the averaged L^4-norm experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arith_sums import kloosterman, kloosterman_row, tau
from .hecke import BudgetError, Eigenform
from .lfun import AFEWeights, _cutoff, _tau_array, edge_sym2, main_term_sum, central_value_g, central_value_sym2xg
from .special_fn import bessel_j_array, bump, bump_integral

SIX_OVER_PI = 6 / math.pi


def bessel_c_tail(ell: int, x_num: float, c_max: int, g: int = 1) -> float:
    """Bound for sum_{c > c_max} |S(n,m;c)|/c |J_ell(x_num / c)| by Weil and |J_ell(x)| <= (x/2)^ell / ell!.

    Uses tau(c) <= 2 sqrt(c), so each term is at most 2 sqrt(g) (x_num/2)^ell / ell! * c^(-ell)."""
    if ell < 2:
        raise ValueError("order too small for the power bound to sum")
    log_head = math.log(2 * math.sqrt(g)) + ell * math.log(x_num / 2) - math.lgamma(ell + 1)
    # sum_{c > C} c^-ell <= C^(1-ell) / (ell - 1)
    return math.exp(log_head + (1 - ell) * math.log(c_max) - math.log(ell - 1))


def c_cutoff(ell: int, x_num: float, tol: float, g: int = 1) -> int:
    c = max(1, int(x_num / ell))
    while bessel_c_tail(ell, x_num, c, g) > tol:
        c = int(c * 1.2) + 1
    return c


@dataclass(frozen=True)
class TraceCheckConfig:
    k: int
    n: int
    m: int
    tol: float = 1e-6
    c_max: int | None = None

    def __post_init__(self):
        if self.k % 2 or self.k < 12:
            raise ValueError("weight must be even and >= 12")
        if self.n < 1 or self.m < 1:
            raise ValueError("Hecke indices must be >= 1")
        x = 4 * math.pi * math.sqrt(self.n * self.m)
        auto = c_cutoff(self.k - 1, x, self.tol / 10, math.gcd(self.n, self.m))
        if self.c_max is None:
            object.__setattr__(self, "c_max", auto)
        elif bessel_c_tail(self.k - 1, x, self.c_max, math.gcd(self.n, self.m)) > self.tol / 10:
            raise BudgetError(f"c_max={self.c_max} leaves a Kloosterman tail above tol/10")

    @property
    def tail(self) -> float:
        x = 4 * math.pi * math.sqrt(self.n * self.m)
        return bessel_c_tail(self.k - 1, x, self.c_max, math.gcd(self.n, self.m))


def petersson_check(cfg: TraceCheckConfig, forms: list[Eigenform], L1: list[float] | None = None) -> dict:
    """Spectral side (2 pi^2/(k-1)) sum_f a_f(n) a_f(m) / L(1, sym^2 f) against the Kloosterman side."""
    k, n, m = cfg.k, cfg.n, cfg.m
    if L1 is None:
        L1 = [edge_sym2(f, X=min(1000.0, f.prime_limit / 37)).value for f in forms]
    lhs = 2 * math.pi**2 / (k - 1) * math.fsum(float(f.a(n)) * float(f.a(m)) / L for f, L in zip(forms, L1))
    c = np.arange(1, cfg.c_max + 1)
    S = np.array([kloosterman(n, m, int(ci)) for ci in c])
    J = bessel_j_array(k - 1, 4 * math.pi * math.sqrt(n * m) / c)
    sign = 1 if (k // 2) % 2 == 0 else -1  # i^-k for even k
    rhs = float(n == m) + 2 * math.pi * sign * math.fsum(S * J / c)
    return {"k": k, "n": n, "m": m, "lhs": lhs, "rhs": rhs, "gap": abs(lhs - rhs),
            "c_max": cfg.c_max, "c_tail": cfg.tail}


# ---------------------------------------------------------------- main term and off-diagonal


def offdiagonal_sum(f: Eigenform, tol: float = 1e-10, scale: float = 1.0) -> dict:
    """sum_{m,n,r,c} A_f(n,r) V_{k,1}(m) V_{k,2}(n r^2) (m n r^2)^(-1/2) S(n,m;c)/c J_{2k-1}(4 pi sqrt(nm)/c)."""
    k = f.weight
    ell = 2 * k - 1
    env = lambda xi: _tau_array(int(xi[-1]))[1:] ** 2
    M1 = int(scale * _cutoff(k, 1, tol, env))
    N2 = int(scale * _cutoff(k, 2, tol, env))
    V1 = AFEWeights(k, 1)(np.arange(1, M1 + 1, dtype=float))
    V2full = np.zeros(N2 + 1)
    V2full[1:] = AFEWeights(k, 2)(np.arange(1, N2 + 1, dtype=float))
    # B(n) = sum_r A_f(n,r) V_{k,2}(n r^2) / r, so the sum is over (m, n) with weight B(n)/sqrt(n)
    A1 = f.A1_array(N2)
    from .arith_sums import moebius_array
    mu = moebius_array(N2)
    B = np.zeros(N2 + 1)
    r = 1
    while r * r <= N2:
        nmax = N2 // (r * r)
        Anr = np.zeros(nmax)
        for d in range(1, r + 1):
            if r % d or not mu[d] or d > nmax:
                continue
            Anr[d - 1 :: d] += mu[d] * A1[r // d] * A1[1 : nmax // d + 1]
        n = np.arange(1, nmax + 1)
        B[1 : nmax + 1] += Anr * V2full[n * r * r] / r
        r += 1
    n_idx = np.nonzero(np.abs(B[1:]) > 0)[0] + 1
    x_num_max = 4 * math.pi * math.sqrt(float(M1) * float(n_idx[-1]))
    c_max = c_cutoff(ell, x_num_max, tol * 1e-2, 1)
    m = np.arange(1, M1 + 1)
    wm = V1 / np.sqrt(m)
    wn = B[n_idx] / np.sqrt(n_idx)
    total = []
    for c in range(1, c_max + 1):
        x = 4 * math.pi * np.sqrt(np.outer(n_idx, m).astype(float)) / c
        if x.max() < ell / 50:
            continue
        J = bessel_j_array(ell, x)
        # S(n, m; c) for n in n_idx, m in 1..M1
        S = np.stack([kloosterman_row(int(mm), c)[n_idx % c] for mm in m], axis=1)
        total.append(math.fsum((wn[:, None] * S * J * wm[None, :]).ravel()) / c)
    # tail over c > c_max with every (n, m) pair at its worst x
    tail = bessel_c_tail(ell, x_num_max, c_max) * float(np.abs(wn).sum() * np.abs(wm).sum())
    return {"value": math.fsum(total), "M1": M1, "N2": N2, "c_max": c_max, "c_tail": tail}


def maindone_check(f: Eigenform, l4_direct: float, L1: float | None = None, tol: float = 1e-10,
                   scale: float = 1.0) -> dict:
    """Quadrature ||F||_4^4 against 6/pi + (2 pi^2 / L^2) * off-diagonal.

    Also reports the exact rearrangement (pi/L^2)(main + 2 pi off-diagonal) whose
    difference from the literal form is the O(k^-1/2) main-term residual."""
    if L1 is None:
        L1 = edge_sym2(f, X=min(1000.0, f.prime_limit / 37)).value
    od = offdiagonal_sum(f, tol, scale)
    mt = main_term_sum(f, tol, L1=L1, scale=scale)
    literal = SIX_OVER_PI + 2 * math.pi**2 / L1**2 * od["value"]
    exact = math.pi / L1**2 * (mt["sum"] + 2 * math.pi * od["value"])
    return {
        "k": f.weight, "label": f.label, "l4_direct": l4_direct,
        "main_plus_offdiag": literal, "gap": abs(l4_direct - literal),
        "exact_decomposition": exact, "exact_gap": abs(l4_direct - exact),
        "diagonal_only_gap": abs(l4_direct - SIX_OVER_PI),
        "offdiag": od["value"], "main_sum": mt["sum"], "main_target": mt["target"],
        "main_residual": mt["sum"] - mt["target"], "L1_sym2_f": L1,
        "budgets": {"M1": od["M1"], "N2": od["N2"], "c_max": od["c_max"], "c_tail": od["c_tail"]},
    }


# ---------------------------------------------------------------- averages


def watson_l4(f: Eigenform, gs: list[Eigenform], L1f: float | None = None) -> dict:
    """||F||_4^4 = sum_g pi^3/(2(2k-1)) L(1/2,g) L(1/2,sym^2 f x g) / (L(1,sym^2 f)^2 L(1,sym^2 g))."""
    from .geometry import watson_rhs

    k = f.weight
    if L1f is None:
        L1f = edge_sym2(f, X=min(1000.0, f.prime_limit / 37)).value
    terms = []
    for g in gs:
        Lg = central_value_g(g).value
        Lfg = central_value_sym2xg(f, g).value
        L1g = edge_sym2(g, X=min(1000.0, g.prime_limit / 37)).value
        terms.append({"g": g.name, "L_half_g": Lg, "L_half_sym2f_g": Lfg, "L1_sym2_g": L1g,
                      "watson": watson_rhs(k, Lg, Lfg, L1f, L1g)})
    return {"l4": math.fsum(t["watson"] for t in terms), "L1_sym2_f": L1f, "terms": terms}


@dataclass
class AverageExperiment:
    K: float
    weight_function: str = "bump"
    quadrature_up_to: int = 22
    W: float = field(init=False)
    per_form: list = field(default_factory=list)
    average: float | None = None

    def __post_init__(self):
        if self.weight_function != "bump":
            raise ValueError("only the bump weight is provided")
        self.W = bump_integral()

    def weights(self) -> list[int]:
        return [k for k in range(int(self.K) + 1, int(2 * self.K)) if k % 2 == 0 and self.K < k < 2 * self.K]


def theorem_average(exp: AverageExperiment, forms_of) -> dict:
    """(2/(K W)) sum_k w(k/K) (12/k) sum_f ||F||_4^4 with Watson-route L^4 norms.

    ``forms_of(k)`` returns the eigenforms of weight k."""
    from .geometry import l2_normalize, lp_norm

    K, W = exp.K, exp.W
    total = []
    exp.per_form = []
    for k in exp.weights():
        fs = forms_of(k)
        if not fs:
            continue
        gs = forms_of(2 * k)
        wk = float(bump(k / K))
        for f in fs:
            w4 = watson_l4(f, gs)
            rec = {"k": k, "label": f.label, "l4_watson": w4["l4"],
                   "three_over_pi_l4": 3 / math.pi * w4["l4"]}
            if k <= exp.quadrature_up_to:
                rec["l4_quadrature"] = lp_norm(l2_normalize(f), 4)["power"]
            exp.per_form.append(rec)
            total.append(wk * 12 / k * w4["l4"])
    exp.average = 2 / (K * W) * math.fsum(total)
    return {"K": K, "W": W, "weights": exp.weights(), "average": exp.average,
            "target": SIX_OVER_PI, "per_form": exp.per_form}
