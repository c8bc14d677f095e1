"""Cusp forms on SL2(Z): Victor Miller bases, Hecke matrices, eigenforms.

Everything up to the T_2 characteristic polynomial is exact integer
arithmetic.  Eigenvalues enter through a 60-digit root solve; the eigenform
coefficients are then exact-integer combinations evaluated in mpmath.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import mpmath
import numpy as np

from .arith_sums import factorize, moebius, prime_sieve, smallest_prime_factor
from .qseries import QSeries, TruncationError, delta, eisenstein

WORK_DPS = 60   # eigen-solves and coefficient extraction
STORE_DPS = 40  # precision kept on the Eigenform


class BudgetError(ValueError):
    """A computation needs coefficients beyond what was built."""


def cusp_dimension(k: int) -> int:
    if k < 0 or k % 2:
        return 0
    if k < 12:
        return 0
    return k // 12 - 1 if k % 12 == 2 else k // 12


def default_budget(k: int) -> int:
    return max(4 * k * k, 5000)


@dataclass(frozen=True)
class CuspSpace:
    weight: int
    basis: tuple[QSeries, ...]

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def truncation(self) -> int:
        return min((g.truncation for g in self.basis), default=0)


class _ProductCache:
    """E4^a, E6 and Delta^i at one truncation, shared between weights."""

    def __init__(self, N: int):
        self.N = N
        self._e4pow = {0: QSeries(0, (1,) + (0,) * N)}
        self._delta_pow: dict[int, QSeries] = {}
        self._e6: QSeries | None = None

    def e4(self, a: int) -> QSeries:
        if a not in self._e4pow:
            self._e4pow[a] = eisenstein(4, self.N) if a == 1 else self.e4(a - 1) * self.e4(1)
        return self._e4pow[a]

    def e6(self) -> QSeries:
        if self._e6 is None:
            self._e6 = eisenstein(6, self.N)
        return self._e6

    def delta(self, i: int) -> QSeries:
        if i not in self._delta_pow:
            if i == 1:
                self._delta_pow[1] = delta(self.N)
            else:
                self._delta_pow[i] = self.delta(i - 1) * self.delta(1)
        return self._delta_pow[i]


_product_caches: dict[int, _ProductCache] = {}


def _products(N: int) -> _ProductCache:
    if N not in _product_caches:
        if len(_product_caches) > 2:
            _product_caches.pop(next(iter(_product_caches)))
        _product_caches[N] = _ProductCache(N)
    return _product_caches[N]


def victor_miller_basis(k: int, N: int) -> CuspSpace:
    """Integral echelon basis g_i = q^i + O(q^(d+1)) of S_k, truncated at q^N."""
    if k % 2 or k < 4:
        raise ValueError(f"weight must be even and >= 4, got {k}")
    d = cusp_dimension(k)
    if d == 0:
        return CuspSpace(k, ())
    if N <= d:
        raise TruncationError(f"truncation {N} too small to echelonize a space of dimension {d}")
    pc = _products(N)
    gens = []
    for i in range(1, d + 1):
        rest = k - 12 * i
        b = 1 if rest % 4 == 2 else 0
        a = (rest - 6 * b) // 4
        g = pc.delta(i)
        if a:
            g = g * pc.e4(a)
        if b:
            g = g * pc.e6()
        gens.append(list(g.num))
    # unit upper-triangular in positions 1..d; clear the off-diagonal entries from the bottom up
    for i in range(d - 1, -1, -1):
        gi = gens[i]
        for j in range(i + 1, d):
            c = gi[j + 1]
            if c:
                gj = gens[j]
                gens[i] = gi = [x - c * y for x, y in zip(gi, gj)]
    return CuspSpace(k, tuple(QSeries(k, tuple(g)) for g in gens))


# ---------------------------------------------------------------- Hecke matrices


def _coeff(g: QSeries, n: int):
    if n > g.truncation:
        raise TruncationError(f"T_n needs q^{n}, truncation is {g.truncation}")
    return g.num[n] if g.den == 1 else Fraction(g.num[n], g.den)


def hecke_matrix(space: CuspSpace, n: int) -> tuple[tuple[int, ...], ...]:
    """Matrix of T_n in the echelon basis; column j holds T_n g_j."""
    if n < 1:
        raise ValueError("Hecke index must be >= 1")
    d, k = space.dimension, space.weight
    if d and space.truncation < n * d:
        raise TruncationError(f"T_{n} on S_{k} needs truncation >= {n * d}, have {space.truncation}")
    cols = []
    for g in space.basis:
        col = []
        for i in range(1, d + 1):
            s = 0
            for e in range(1, math.gcd(n, i) + 1):
                if n % e == 0 and i % e == 0:
                    s += e ** (k - 1) * _coeff(g, n * i // (e * e))
            col.append(s)
        cols.append(col)
    return tuple(tuple(cols[j][i] for j in range(d)) for i in range(d))


def mat_mul(A, B):
    n, m, p = len(A), len(B), len(B[0]) if B else 0
    return tuple(tuple(sum(A[i][t] * B[t][j] for t in range(m)) for j in range(p)) for i in range(n))


def charpoly(M) -> tuple[int, ...]:
    """Monic characteristic polynomial, highest degree first (Faddeev-LeVerrier)."""
    d = len(M)
    coeffs = [Fraction(1)]
    Mk = [[Fraction(0)] * d for _ in range(d)]
    ident = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    c = Fraction(1)
    for kk in range(1, d + 1):
        # M_k = M (M_{k-1} + c_{k-1} I)
        inner = [[Mk[i][j] + c * ident[i][j] for j in range(d)] for i in range(d)]
        Mk = [[sum(Fraction(M[i][t]) * inner[t][j] for t in range(d)) for j in range(d)] for i in range(d)]
        c = -sum(Mk[i][i] for i in range(d)) / kk
        coeffs.append(c)
    out = []
    for x in coeffs:
        if x.denominator != 1:
            raise ArithmeticError("characteristic polynomial of an integral matrix is not integral")
        out.append(int(x))
    return tuple(out)


# ---------------------------------------------------------------- eigenforms


@dataclass(eq=False)
class Eigenform:
    """A Hecke-normalized eigenform with eigenvalues for n <= direct and primes <= prime_bound."""

    weight: int
    label: int
    charpoly2: tuple[int, ...]
    lam_direct: list = field(repr=False)       # lambda_f(n), n = 0..direct (index 0 unused)
    primes: np.ndarray = field(repr=False)
    ap: list = field(repr=False)               # a_f(p) as mpf for the primes above
    prime_limit: int = 0                       # every prime <= prime_limit is present

    @property
    def direct(self) -> int:
        return len(self.lam_direct) - 1

    @property
    def prime_bound(self) -> int:
        return int(self.primes[-1]) if len(self.primes) else 1

    @property
    def name(self) -> str:
        return f"{self.weight}.{self.label}"

    @cached_property
    def _ap_index(self) -> dict[int, int]:
        return {int(p): i for i, p in enumerate(self.primes)}

    def _a_prime(self, p: int):
        i = self._ap_index.get(p)
        if i is None:
            raise BudgetError(f"a_f({p}) needs prime bound >= {p}, have {self.prime_limit}")
        return self.ap[i]

    def a_prime_power(self, p: int, e: int):
        with mpmath.workdps(STORE_DPS + 10):
            ap = self._a_prime(p)
            prev, cur = mpmath.mpf(1), ap
            if e == 0:
                return prev
            for _ in range(e - 1):
                prev, cur = cur, ap * cur - prev
            return +cur

    def a(self, n: int):
        """Deligne-normalized a_f(n) = lambda_f(n) / n^((k-1)/2), as an mpf."""
        if n < 1:
            raise ValueError("index must be >= 1")
        if n <= self.direct:
            with mpmath.workdps(STORE_DPS + 10):
                return self.lam_direct[n] / mpmath.mpf(n) ** (mpmath.mpf(self.weight - 1) / 2)
        r = mpmath.mpf(1)
        for p, e in factorize(n).items():
            r *= self.a_prime_power(p, e)
        return r

    def lam(self, n: int):
        """Unnormalized Hecke eigenvalue lambda_f(n)."""
        if n <= self.direct:
            return self.lam_direct[n]
        with mpmath.workdps(STORE_DPS + 10):
            return self.a(n) * mpmath.mpf(n) ** (mpmath.mpf(self.weight - 1) / 2)

    @cached_property
    def ap_float(self) -> np.ndarray:
        return np.array([float(x) for x in self.ap])

    def _multiplicative_array(self, N: int, prime_power_value) -> np.ndarray:
        if N > self.prime_limit:
            raise BudgetError(f"need a_f(p) for p <= {N}, have prime bound {self.prime_limit}")
        out = np.ones(N + 1)
        out[0] = 0.0
        for i, p in enumerate(self.primes):
            p = int(p)
            if p > N:
                break
            ap = self.ap_float[i]
            vals = prime_power_value(ap, p, N)
            pe, e = p, 1
            while pe <= N:
                idx = np.arange(pe, N + 1, pe)
                if pe * p <= N:
                    idx = idx[(idx // pe) % p != 0]
                out[idx] *= vals[e]
                pe *= p
                e += 1
        return out

    def a_array(self, N: int) -> np.ndarray:
        """Float array [0, a_f(1), ..., a_f(N)]."""
        def powers(ap, p, N):
            vals = [1.0, ap]
            pe = p
            while pe <= N:
                vals.append(ap * vals[-1] - vals[-2])
                pe *= p
            return vals
        return self._multiplicative_array(N, powers)

    def a_square_array(self, M: int) -> np.ndarray:
        """Float array [0, a_f(1^2), a_f(2^2), ..., a_f(M^2)]."""
        def powers(ap, p, N):
            seq = [1.0, ap]
            pe = p
            e = 1
            while pe <= N:
                seq.append(ap * seq[-1] - seq[-2])
                seq.append(ap * seq[-1] - seq[-2])
                pe *= p
                e += 1
            return [seq[2 * j] for j in range(e)]
        return self._multiplicative_array(M, powers)

    def A1_array(self, N: int) -> np.ndarray:
        """GL(3) coefficients [0, A_f(1,1), ..., A_f(N,1)]; A(n,1) = sum_{d^2 m = n} a_f(m^2)."""
        asq = self.a_square_array(N)
        out = np.zeros(N + 1)
        d = 1
        while d * d <= N:
            q = N // (d * d)
            out[d * d :: d * d][:q] += asq[1 : q + 1]
            d += 1
        return out


def _eigen_decompose(T2, dps: int = WORK_DPS):
    d = len(T2)
    cp = charpoly(T2)
    with mpmath.workdps(dps):
        if d == 1:
            roots = [mpmath.mpf(T2[0][0])]
        else:
            raw = mpmath.polyroots([mpmath.mpf(c) for c in cp], maxsteps=400, extraprec=4 * dps)
            if any(abs(mpmath.im(r)) > mpmath.mpf(10) ** (-dps // 2) * (1 + abs(r)) for r in raw):
                raise ArithmeticError("T_2 has non-real eigenvalues")
            roots = sorted(mpmath.re(r) for r in raw)
        for a, b in zip(roots, roots[1:]):
            if abs(b - a) <= mpmath.mpf(10) ** (-dps // 2) * (1 + abs(b)):
                raise ArithmeticError("T_2 has a repeated eigenvalue; eigenforms are not separated")
        vecs = []
        for lam in roots:
            A = mpmath.matrix([[mpmath.mpf(T2[i][j]) - (lam if i == j else 0) for j in range(d)] for i in range(d)])
            v = [mpmath.mpf(1)]
            if d > 1:
                sub = mpmath.matrix([[A[i, j] for j in range(1, d)] for i in range(1, d)])
                rhs = mpmath.matrix([-A[i, 0] for i in range(1, d)])
                v += list(mpmath.lu_solve(sub, rhs))
            vecs.append(v)
    return cp, roots, vecs


def eigenforms(space: CuspSpace, direct: int | None = None) -> list[Eigenform]:
    """Hecke eigenforms of the space, sorted by lambda(2) ascending."""
    d, k, N = space.dimension, space.weight, space.truncation
    if d == 0:
        return []
    T2 = hecke_matrix(space, 2)
    cp, roots, vecs = _eigen_decompose(T2)
    direct = min(N, direct if direct is not None else 10000)
    primes = prime_sieve(N)
    forms = []
    with mpmath.workdps(WORK_DPS):
        basis_num = [g.num for g in space.basis]
        for label, v in enumerate(vecs):
            def lam_at(n):
                return mpmath.fsum(v[j] * basis_num[j][n] for j in range(d))
            lam_direct = [mpmath.mpf(0)] + [lam_at(n) for n in range(1, direct + 1)]
            ap = []
            half = mpmath.mpf(k - 1) / 2
            for p in primes:
                p = int(p)
                lam = lam_direct[p] if p <= direct else lam_at(p)
                ap.append(lam / mpmath.mpf(p) ** half)
            with mpmath.workdps(STORE_DPS):
                lam_direct = [+x for x in lam_direct]
                ap = [+x for x in ap]
            forms.append(Eigenform(k, label, cp, lam_direct, primes, ap, N))
    return forms


def gl3_coeff(f: Eigenform, n: int, r: int):
    """A_f(n, r) = sum_{d | (n,r)} mu(d) A_f(n/d, 1) A_f(r/d, 1)."""
    if n < 1 or r < 1:
        raise ValueError("indices must be >= 1")

    def A1(m: int):
        s = mpmath.mpf(0)
        d = 1
        while d * d <= m:
            if m % (d * d) == 0:
                s += f.a((m // (d * d)) ** 2)
            d += 1
        return s

    total = mpmath.mpf(0)
    for d in range(1, math.gcd(n, r) + 1):
        if n % d == 0 and r % d == 0:
            mu = moebius(d)
            if mu:
                total += mu * A1(n // d) * A1(r // d)
    return total


def gl3_table(f: Eigenform, N: int) -> np.ndarray:
    """Dense float table A[n, r] for n, r <= N (index 0 unused)."""
    A1 = f.A1_array(N)
    from .arith_sums import moebius_array
    mu = moebius_array(N)
    T = np.zeros((N + 1, N + 1))
    for d in range(1, N + 1):
        if mu[d] == 0:
            continue
        q = N // d
        T[d : d * q + 1 : d, d : d * q + 1 : d] += mu[d] * np.outer(A1[1 : q + 1], A1[1 : q + 1])
    return T
