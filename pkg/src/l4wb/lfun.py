"""Gamma-factor ratios, AFE cutoff functions and L-values of eigenforms.

Central values use the approximate functional equation with the cutoff
V_{k,j}, computed by trapezoid quadrature on a vertical line.  Edge values
L(1, sym^2 f) use the exponentially smoothed Dirichlet series; its leading
errors are residues at s = 0, -2, -4, ... which the functional equation
turns into known multiples of L(1), L(3), L(5), ..., so they are added back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import mpmath
import numpy as np

from .arith_sums import moebius_array
from .hecke import BudgetError, Eigenform
from .special_fn import PoleError, log_gamma

LOG_2PI = math.log(2 * math.pi)
LEFT_SIGMA = -0.5  # between s = 0 and the first Gamma pole at s = -1


# ---------------------------------------------------------------- zeta


def zeta(s: float) -> float:
    """Riemann zeta for real s > 1 by Euler-Maclaurin summation."""
    if s == 1:
        raise PoleError("zeta has a pole at s = 1")
    if s < 1:
        raise ValueError("zeta is only provided for s > 1")
    N = 16
    n = np.arange(1, N, dtype=float)
    total = math.fsum(n**-s) + N ** (1 - s) / (s - 1) + 0.5 * N**-s
    # B_{2j}/(2j)! * s(s+1)...(s+2j-2) * N^(-s-2j+1)
    rising = s
    for j in range(1, 12):
        b = float(mpmath.bernoulli(2 * j)) / math.factorial(2 * j)
        term = b * rising * N ** (-s - 2 * j + 1)
        total += term
        if abs(term) < 1e-18 * total:
            break
        rising *= (s + 2 * j - 1) * (s + 2 * j)
    return total


# ---------------------------------------------------------------- Lambda ratios and V


def _shifts(k: int, j: int) -> tuple[float, tuple[int, ...]]:
    # Lambda_{k,j}(1/2+s)/Lambda_{k,j}(1/2) = (2 pi)^(-j s) prod Gamma(s+a)/Gamma(a)
    if j == 1:
        return 1.0, (k,)
    if j == 2:
        return 3.0, (2 * k - 1, k, 1)
    raise ValueError("j must be 1 or 2")


def log_lambda_ratio(k: int, j: int, s):
    power, shifts = _shifts(k, j)
    s = np.asarray(s, dtype=complex)
    out = -power * LOG_2PI * s
    for a in shifts:
        out = out + log_gamma(s + a) - math.lgamma(a)
    return out


def lambda_ratio(k: int, j: int, s):
    """Lambda_{k,j}(1/2+s) / Lambda_{k,j}(1/2), through log-gamma differences."""
    out = np.exp(log_lambda_ratio(k, j, s))
    return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class AFEWeights:
    """Trapezoid rule for V_{k,j}(xi) on the line Re s = sigma, |Im s| <= T."""

    k: int
    j: int
    sigma: float = 1.5
    T: float | None = None
    step: float = 0.05
    tol: float = 1e-10
    _nodes: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.j not in (1, 2):
            raise ValueError("j must be 1 or 2")
        if self.T is None:
            object.__setattr__(self, "T", 30.0 + 10.0 * math.log(self.k))
        t = np.arange(0.0, self.T + 0.5 * self.step, self.step)
        w = np.full(t.shape, self.step / math.pi)
        w[0] *= 0.5
        nodes = []
        for sig in (self.sigma, LEFT_SIGMA):
            s = sig + 1j * t
            nodes.append(np.exp(log_lambda_ratio(self.k, self.j, s)) / s * w)
        object.__setattr__(self, "_nodes", (t, nodes[0], nodes[1]))

    def tail_estimate(self, xi: float) -> float:
        """Bound for the integrand mass beyond |Im s| = T at this xi."""
        t = np.arange(self.T, 4 * self.T + 40, 0.25)
        worst = 0.0
        for sig in (self.sigma, LEFT_SIGMA):
            s = sig + 1j * t
            mag = np.exp(log_lambda_ratio(self.k, self.j, s).real) / np.abs(s)
            worst = max(worst, float(np.sum(mag) * 0.25 * xi**-sig / math.pi))
        return worst

    def __call__(self, xi) -> np.ndarray:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        if np.any(xi <= 0):
            raise ValueError("xi must be positive")
        worst = self.tail_estimate(float(max(xi.min(), 1.0)))
        if worst > self.tol:
            raise BudgetError(f"contour height T={self.T} leaves tail {worst:.2e}; raise T")
        t, right, left = self._nodes
        out = np.empty(xi.shape)
        # below xi = 1 the line Re s = sigma would cancel xi^(-sigma) against a value near 1;
        # move left of s = 0 instead and add its residue
        small = xi < 1
        out[~small] = self._line(xi[~small], t, right, self.sigma)
        out[small] = 1.0 + self._line(xi[small], t, left, LEFT_SIGMA)
        return out

    @staticmethod
    def _line(xi, t, gw, sigma):
        out = np.empty(xi.shape)
        chunk = max(1, 2_000_000 // len(t))
        for lo in range(0, len(xi), chunk):
            lx = np.log(xi[lo : lo + chunk])
            # Re[g(t) xi^(-sigma - i t)]
            ph = np.outer(lx, t)
            vals = np.cos(ph) @ gw.real + np.sin(ph) @ gw.imag
            out[lo : lo + chunk] = vals * np.exp(-sigma * lx)
        return out


def _default_T(k: int, j: int, sigma: float, xi_min: float, tol: float) -> float:
    T = 30.0 + 10.0 * math.log(k)
    while True:
        w = AFEWeights(k, j, sigma, T, tol=tol)
        if w.tail_estimate(xi_min) <= tol:
            return T
        T *= 1.5
        if T > 2000:
            raise BudgetError("no contour height reaches the requested tail")


def v_weight(k: int, j: int, xi, sigma: float = 1.5, T: float | None = None):
    """V_{k,j}(xi); scalar in, scalar out."""
    arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.any(arr <= 0):
        raise ValueError("xi must be positive")
    if T is None:
        T = _default_T(k, j, sigma, float(max(arr.min(), 1.0)), 1e-10)
    out = AFEWeights(k, j, sigma, T)(arr)
    return float(out[0]) if np.ndim(xi) == 0 else out


def _v_table(k: int, j: int, M: int) -> np.ndarray:
    """[0, V(1), ..., V(M)]."""
    out = np.zeros(M + 1)
    out[1:] = AFEWeights(k, j)(np.arange(1, M + 1, dtype=float))
    return out


def _cutoff(k: int, j: int, tol: float, weight_of) -> int:
    """Smallest M with sum_{xi > M} weight_of(xi) |V(xi)| xi^(-1/2) <= tol."""
    W = AFEWeights(k, j)
    M = 64
    while True:
        xi = np.arange(1, 4 * M + 1, dtype=float)
        v = np.abs(W(xi)) * weight_of(xi) / np.sqrt(xi)
        if v[-1] < tol * 1e-6:
            tail = np.cumsum(v[::-1])[::-1]
            # tail[i] = sum_{xi >= i+1}; want first M with sum_{xi > M} <= tol
            over = np.nonzero(tail > tol)[0]
            return int(over[-1] + 1) if len(over) else 1
        M *= 2


# ---------------------------------------------------------------- L-values


class LKind(str, Enum):
    central_g = "central_g"
    central_sym2xg = "central_sym2xg"
    edge_sym2 = "edge_sym2"
    edge_sym2_inverse = "edge_sym2_inverse"


@dataclass(frozen=True)
class LValue:
    kind: LKind
    value: float
    truncation: int
    tail_bound: float


def _tau_array(N: int) -> np.ndarray:
    t = np.zeros(N + 1)
    for d in range(1, N + 1):
        t[d::d] += 1
    return t


def central_value_g(g: Eigenform, tol: float = 1e-8, M: int | None = None) -> LValue:
    """L(1/2, g) = 2 sum a_g(m) m^(-1/2) V_{k,1}(m) for g of weight 2k."""
    if g.weight % 2:
        raise ValueError("g must have even weight 2k")
    k = g.weight // 2
    xi_tau = lambda xi: _tau_array(int(xi[-1]))[1:]
    cut = _cutoff(k, 1, tol, xi_tau)
    M = M or cut
    W = AFEWeights(k, 1)
    far = max(4 * M, 4 * cut)
    m = np.arange(1, far + 1, dtype=float)
    envelope = _tau_array(far)[1:] * np.abs(W(m)) / np.sqrt(m)
    tail = 2 * float(envelope[M:].sum())
    a = g.a_array(M)
    V = _v_table(k, 1, M)
    n = np.arange(1, M + 1, dtype=float)
    value = 2 * math.fsum(a[1:] * V[1:] / np.sqrt(n))
    return LValue(LKind.central_g, value, M, tail)


def central_value_sym2xg(f: Eigenform, g: Eigenform, tol: float = 1e-8, N2: int | None = None) -> LValue:
    """L(1/2, sym^2 f x g) = 2 sum A_f(n,r) a_g(n) (n r^2)^(-1/2) V_{k,2}(n r^2)."""
    k = f.weight
    if g.weight != 2 * k:
        raise ValueError("g must have weight twice that of f")
    # |sum_{n r^2 = xi} A_f(n,r) a_g(n)| <= tau(xi)^4 crudely
    env = lambda xi: _tau_array(int(xi[-1]))[1:] ** 4
    cut = _cutoff(k, 2, tol, env)
    N2 = N2 or cut
    W = AFEWeights(k, 2)
    far = max(4 * N2, 4 * cut)
    x = np.arange(1, far + 1, dtype=float)
    tail = 2 * float((env(x) * np.abs(W(x)) / np.sqrt(x))[N2:].sum())
    value = _sym2xg_sum(f, g.a_array(N2), _v_table(k, 2, N2), N2)
    return LValue(LKind.central_sym2xg, 2 * value, N2, tail)


def _sym2xg_sum(f: Eigenform, ag: np.ndarray, V: np.ndarray, N2: int, swap: bool = False) -> float:
    A1 = f.A1_array(N2)
    mu = moebius_array(N2)
    total = []
    r = 1
    while r * r <= N2:
        nmax = N2 // (r * r)
        n = np.arange(1, nmax + 1)
        # A(n, r) = sum_{d | r, d | n} mu(d) A1(n/d) A1(r/d)
        Anr = np.zeros(nmax)
        for d in range(1, r + 1):
            if r % d or not mu[d] or d > nmax:
                continue
            Anr[d - 1 :: d] += mu[d] * A1[r // d] * A1[1 : nmax // d + 1]
        xi = n * r * r
        total.append(math.fsum(Anr * ag[1 : nmax + 1] * V[xi] / np.sqrt(xi)))
        r += 1
    return math.fsum(total)


# ---------------------------------------------------------------- edge values


def _gamma_sym2(w: int, s):
    """Gamma factor of L(s, sym^2 f) for f of weight w and level 1."""
    return (mpmath.pi ** (-(s + 1) / 2) * mpmath.gamma((s + 1) / 2)
            * 2 * (2 * mpmath.pi) ** (-(s + w - 1)) * mpmath.gamma(s + w - 1))


def fe_factor(w: int, j: int) -> float:
    """c_j with L(1-j, sym^2 f) = c_j L(j, sym^2 f); zero at the trivial zeros (j even)."""
    if j % 2 == 0:
        return 0.0
    if j >= w:
        raise ValueError("functional-equation factor only tabulated for j < weight")
    with mpmath.workdps(30):
        return float(_gamma_sym2(w, mpmath.mpf(j)) / _gamma_sym2(w, mpmath.mpf(1 - j)))


def _smoothed_sums(A1: np.ndarray, X: float, smax: int) -> list[float]:
    n = np.arange(1, len(A1), dtype=float)
    e = A1[1:] * np.exp(-n / X)
    return [math.fsum(e * n**-s) for s in range(1, smax + 1)]


def sym2_values(f: Eigenform, X: float, smax: int = 4, corrected: bool = True) -> list[float]:
    """[L(1), ..., L(smax)] of sym^2 f from the smoothed series at scale X.

    The smoothed sum S_s(X) = sum A(n,1) n^-s e^(-n/X) equals
    sum_j (-1)^j L(s-j) X^-j / j! up to X^(-J); values at s - j <= 0 come from
    the functional equation, so the system is solved by fixed-point iteration.
    """
    N = int(math.ceil(37 * X))
    A1 = f.A1_array(N)
    J = 9
    top = max(smax, J + 1)
    S = _smoothed_sums(A1, X, top)
    if not corrected:
        return S[:smax]
    w = f.weight
    c = {m: fe_factor(w, m) for m in range(1, J + 2) if m < w}
    L = list(S)

    def at(t: int) -> float:
        # L(t) for any integer t, reading positive values from the current iterate
        if t >= 1:
            return L[t - 1] if t <= top else 1.0
        return c.get(1 - t, 0.0) * at(1 - t)

    for _ in range(6):
        new = []
        for s in range(1, top + 1):
            corr = sum((-1) ** j * at(s - j) * X**-j / math.factorial(j)
                       for j in range(1, J + 1) if not (s == 1 and j == 1))
            if s == 1:
                new.append((S[0] - corr) / (1 - c[1] / X))
            else:
                new.append(S[s - 1] - corr)
        L = new
    return L[:smax]


def edge_sym2(f: Eigenform, X: float = 1000.0, corrected: bool = True) -> LValue:
    """L(1, sym^2 f) from the smoothed series, cross-checked at a second scale."""
    if X < 100:
        raise ValueError("X must be >= 100")
    need = int(math.ceil(37 * X))
    if need > f.prime_limit:
        raise BudgetError(f"edge value at X={X} needs coefficients to {need}, have {f.prime_limit}")
    value = sym2_values(f, X, 1, corrected)[0]
    other = 4 * X if 37 * 4 * X <= f.prime_limit else X / 4
    if other >= 100:
        check = sym2_values(f, other, 1, corrected)[0]
        tail = abs(value - check)
    else:
        tail = float("nan")
    return LValue(LKind.edge_sym2, value, need, tail)


def edge_sym2_inverse(f: Eigenform, X: float, cutoff: float = 1e-16) -> LValue:
    """Smoothed series for 1/L(1, sym^2 f):
    sum mu(d1 d2 d3) mu(d2) a_f(d1^2 d2^2) / (d1 d2^2 d3^3) exp(-d1 d2^2 d3^3 / X)."""
    if X < 100:
        raise ValueError("X must be >= 100")
    D = int(math.ceil(-math.log(cutoff) * X))
    asq = f.a_square_array(D)
    mu = moebius_array(D).astype(float)
    parts = []
    d3 = 1
    while d3**3 <= D:
        if mu[d3]:
            d2 = 1
            while d2 * d2 * d3**3 <= D:
                if mu[d2]:
                    m = d2 * d2 * d3**3
                    top = D // m
                    d1 = np.arange(1, top + 1)
                    # mu(d1 d2 d3) = mu(d1) mu(d2) mu(d3) when pairwise coprime, else 0
                    ok = np.gcd(d1, d2 * d3) == 1 if d2 * d3 > 1 else np.ones(top, bool)
                    if math.gcd(d2, d3) == 1:
                        sign = mu[d2] * mu[d3] * mu[d2]
                        terms = mu[1 : top + 1] * asq[d1 * d2] / (d1 * m) * np.exp(-(d1 * m) / X)
                        parts.append(sign * math.fsum(terms[ok]))
                d2 += 1
        d3 += 1
    return LValue(LKind.edge_sym2_inverse, math.fsum(parts), D, cutoff)


# ---------------------------------------------------------------- identities


def sym2_dirichlet(f: Eigenform, s: float, X: float = 2000.0) -> float:
    """L(s, sym^2 f) for s > 1.

    Integer s goes through the residue-corrected smoothed sums.  Other s use the
    weight exp(-(n/Y)^2), whose Mellin transform Gamma(u/2)/2 has its first pole
    after u = 0 at u = -2, so the error is O(|L(s-2, sym^2 f)| Y^-2); Y is as
    large as the coefficient budget allows."""
    if s <= 1:
        raise ValueError("need s > 1")
    if float(s).is_integer():
        return sym2_values(f, X, int(s))[int(s) - 1]
    N = f.prime_limit
    Y = N / 6.1  # exp(-(N/Y)^2) < 1e-16
    A1 = f.A1_array(N)
    n = np.arange(1, N + 1, dtype=float)
    return math.fsum(A1[1:] * n**-s * np.exp(-((n / Y) ** 2)))


def bump_check(f: Eigenform, s: float, w: float, N: int, X: float = 2000.0) -> dict:
    """sum_{n,r<=N} A_f(n,r) n^-s r^-w against L(s,sym^2 f) L(w,sym^2 f) / zeta(s+w)."""
    if s <= 1 or w <= 1:
        raise ValueError("need s, w > 1")
    A1 = f.A1_array(N)
    mu = moebius_array(N)
    parts = []
    for d in range(1, N + 1):
        if not mu[d]:
            continue
        q = np.arange(1, N // d + 1, dtype=float)
        a = A1[1 : N // d + 1]
        parts.append(mu[d] * d ** (-s - w) * math.fsum(a * q**-s) * math.fsum(a * q**-w))
    lhs = math.fsum(parts)
    if s > 40 and w > 40:
        rhs = 1.0
    else:
        X = min(X, f.prime_limit / 37)
        rhs = sym2_dirichlet(f, s, X) * sym2_dirichlet(f, w, X) / zeta(s + w)
    return {"lhs": lhs, "rhs": rhs, "gap": abs(lhs - rhs)}


def main_term_sum(f: Eigenform, tol: float = 1e-10, L1: float | None = None, scale: float = 1.0) -> dict:
    """sum_{n,r} A_f(n,r) V_{k,1}(n) V_{k,2}(n r^2) / (n r) against (6/pi^2) L(1,sym^2 f)^2.

    ``scale`` multiplies the truncation (2 doubles every cutoff)."""
    k = f.weight
    N1 = int(scale * _cutoff(k, 1, tol, lambda xi: _tau_array(int(xi[-1]))[1:] ** 2 * np.sqrt(xi) / xi))
    N2 = int(scale * _cutoff(k, 2, tol, lambda xi: _tau_array(int(xi[-1]))[1:] ** 2 * np.sqrt(xi) / xi))
    V1 = _v_table(k, 1, N1)
    V2 = _v_table(k, 2, N2)
    A1 = f.A1_array(max(N1, int(math.isqrt(N2)) + 1))
    mu = moebius_array(len(A1) - 1)
    total = []
    r = 1
    while r * r <= N2:
        nmax = min(N1, N2 // (r * r))
        Anr = np.zeros(nmax)
        for d in range(1, r + 1):
            if r % d or not mu[d] or d > nmax:
                continue
            Anr[d - 1 :: d] += mu[d] * A1[r // d] * A1[1 : nmax // d + 1]
        n = np.arange(1, nmax + 1)
        total.append(math.fsum(Anr * V1[1 : nmax + 1] * V2[n * r * r] / (n * r)))
        r += 1
    value = math.fsum(total)
    if L1 is None:
        L1 = edge_sym2(f, X=min(1000.0, f.prime_limit / 37)).value
    target = 6 / math.pi**2 * L1**2
    return {"sum": value, "target": target, "gap": abs(value - target), "N1": N1, "N2": N2}
