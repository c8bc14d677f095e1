"""Elementary arithmetic functions and complete exponential sums.

Kloosterman sums are evaluated by plain enumeration of the units mod c;
``kloosterman_row`` gets a whole residue row at once through one FFT, which is
what the trace-formula and off-diagonal sums consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import gcd, isqrt
from typing import Callable

import mpmath
import numpy as np


TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------- elementary


def factorize(n: int) -> dict[int, int]:
    """Prime factorization by trial division (n is desk-sized here)."""
    if n < 1:
        raise ValueError(f"factorize needs n >= 1, got {n}")
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def tau(n: int) -> int:
    """Number of divisors."""
    r = 1
    for e in factorize(n).values():
        r *= e + 1
    return r


def moebius(n: int) -> int:
    f = factorize(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def sigma(k: int, n: int) -> int:
    """Divisor power sum sigma_k(n)."""
    r = 1
    for p, e in factorize(n).items():
        r *= sum(p ** (k * i) for i in range(e + 1))
    return r


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factorize(n).items():
        divs = [d * p**i for d in divs for i in range(e + 1)]
    return sorted(divs)


def sigma_table(k: int, N: int) -> list[int]:
    """[sigma_k(0)=0, sigma_k(1), ..., sigma_k(N)] as exact integers."""
    out = [0] * (N + 1)
    for d in range(1, N + 1):
        dk = d**k
        for m in range(d, N + 1, d):
            out[m] += dk
    return out


def prime_sieve(N: int) -> np.ndarray:
    """All primes <= N as an int64 array."""
    if N < 2:
        return np.zeros(0, dtype=np.int64)
    is_p = np.ones(N + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, isqrt(N) + 1):
        if is_p[p]:
            is_p[p * p :: p] = False
    return np.nonzero(is_p)[0].astype(np.int64)


def smallest_prime_factor(N: int) -> np.ndarray:
    spf = np.zeros(N + 1, dtype=np.int64)
    for p in range(2, N + 1):
        if spf[p] == 0:
            spf[p : N + 1 : p] = np.where(spf[p : N + 1 : p] == 0, p, spf[p : N + 1 : p])
    return spf


@lru_cache(maxsize=8)
def moebius_array(N: int) -> np.ndarray:
    """mu(0..N) as int8 (mu(0) set to 0)."""
    mu = np.ones(N + 1, dtype=np.int8)
    mu[0] = 0
    for p in prime_sieve(N):
        p = int(p)
        mu[p::p] *= -1
        mu[p * p :: p * p] = 0
    return mu


def is_square(n: int) -> bool:
    return n >= 0 and isqrt(n) ** 2 == n


# ---------------------------------------------------------------- Kloosterman


@dataclass(frozen=True)
class KloostermanParams:
    n: int
    m: int
    c: int

    def __post_init__(self):
        if self.c < 1:
            raise ValueError(f"modulus must be >= 1, got {self.c}")


@lru_cache(maxsize=4096)
def _units_and_inverses(c: int) -> tuple[np.ndarray, np.ndarray]:
    if c == 1:
        return np.array([0], dtype=np.int64), np.array([0], dtype=np.int64)
    b = np.arange(c, dtype=np.int64)
    units = b[np.gcd(b, c) == 1]
    inv = np.array([pow(int(u), -1, c) for u in units], dtype=np.int64)
    return units, inv


@lru_cache(maxsize=1024)
def _roots(c: int) -> np.ndarray:
    return np.exp(1j * TWO_PI * (np.arange(c) / c))


def _e(residues: np.ndarray, c: int) -> np.ndarray:
    # e(r/c) looked up after reducing r, so every residue maps to one fixed value
    return _roots(c)[np.mod(residues, c)]


def kloosterman_complex(n: int, m: int, c: int) -> complex:
    if c < 1:
        raise ValueError(f"modulus must be >= 1, got {c}")
    units, inv = _units_and_inverses(c)
    r = (n % c) * units + (m % c) * inv
    return complex(_e(r, c).sum())


def kloosterman(n: int, m: int, c: int) -> float:
    """S(n, m; c) by unit enumeration; the sum is real and we check that."""
    s = kloosterman_complex(n, m, c)
    if abs(s.imag) > 1e-10 * max(1.0, math.sqrt(c)):
        raise ArithmeticError(f"Kloosterman sum S({n},{m};{c}) has imaginary part {s.imag}")
    return s.real


@lru_cache(maxsize=1 << 14)
def kloosterman_row(m: int, c: int) -> np.ndarray:
    """Real array [S(0,m;c), S(1,m;c), ..., S(c-1,m;c)] from one FFT."""
    units, inv = _units_and_inverses(c)
    v = np.zeros(c, dtype=complex)
    v[units] = _e((m % c) * inv, c)
    row = (np.fft.ifft(v) * c).real
    row.setflags(write=False)
    return row


def kloosterman_split(n: int, m: int, c1: int, c2: int) -> tuple[float, float]:
    """The two factors of S(n,m;c1c2) = S(n, m c2bar^2; c1) S(n, m c1bar^2; c2)."""
    if gcd(c1, c2) != 1:
        raise ValueError(f"moduli {c1} and {c2} are not coprime")
    c2bar = pow(c2, -1, c1) if c1 > 1 else 0
    c1bar = pow(c1, -1, c2) if c2 > 1 else 0
    return kloosterman(n, m * c2bar * c2bar, c1), kloosterman(n, m * c1bar * c1bar, c2)


def weil_check(n: int, m: int, c: int) -> bool:
    """|S(n,m;c)| <= tau(c) c^(1/2) (n,m,c)^(1/2)."""
    bound = tau(c) * math.sqrt(c) * math.sqrt(gcd(gcd(n, m), c))
    return abs(kloosterman(n, m, c)) <= bound * (1 + 1e-12) + 1e-9


# ---------------------------------------------------------------- S1, S2, S3


def s1_sum(c2p: int, r1: int, b2: int) -> complex:
    """c^(-3/2) sum_{a mod c} S(a^2, r1^2 b2bar^2; c) e(2 a r1 b2bar / c), c = c2'."""
    c = c2p
    if c < 1:
        raise ValueError("modulus must be >= 1")
    if gcd(b2, c) != 1:
        raise ValueError(f"b2={b2} is not coprime to c2'={c}")
    if c == 1:
        return 1.0 + 0j
    bbar = pow(b2, -1, c)
    u = r1 * bbar % c
    units, inv = _units_and_inverses(c)
    a = np.arange(c, dtype=np.int64)[:, None]
    phase = (a * a % c) * units[None, :] + (u * u % c) * inv[None, :] + 2 * a * u
    return complex(_e(phase, c).sum() / c**1.5)


def s1_table(c: int) -> np.ndarray:
    """S1 for modulus c as a function of u = r1*b2bar mod c (array indexed by u).

    Same sum as ``s1_sum`` but organised through Gauss sums:
    sum_a e((a^2 x + 2 a u)/c) is one FFT per unit x.
    """
    if c == 1:
        return np.array([1.0 + 0j])
    units, inv = _units_and_inverses(c)
    a = np.arange(c, dtype=np.int64)
    # G[x, j] = sum_a e((a^2 x + a j)/c)
    w = _e((a[None, :] * a[None, :] % c) * units[:, None], c)
    G = np.fft.ifft(w, axis=1) * c
    u = np.arange(c, dtype=np.int64)
    E = _e((u[None, :] * u[None, :] % c) * inv[:, None], c)
    return (E * G[:, (2 * u) % c]).sum(axis=0) / c**1.5


def s2_sum(c1p: int, t: int, m: int) -> float:
    """c^(-2) sum_{a mod c} S(a t, m; c); vanishes unless c | t."""
    c = c1p
    if c < 1:
        raise ValueError("modulus must be >= 1")
    if c == 1:
        return 1.0
    units, inv = _units_and_inverses(c)
    a = np.arange(c, dtype=np.int64)[:, None]
    phase = (a * (t % c) % c) * units[None, :] + (m % c) * inv[None, :]
    return float(_e(phase, c).sum().real / c**2)


def _radical(n: int) -> int:
    r = 1
    for p in factorize(n):
        r *= p
    return r


@dataclass(frozen=True)
class ExpSumFactorization:
    """c1 = b1 c1', c2 = b2 c2' with b1, b2 carrying exactly the shared primes."""

    c1: int
    c2: int
    b1: int
    b2: int
    c1p: int
    c2p: int

    @classmethod
    def of(cls, c1: int, c2: int) -> "ExpSumFactorization":
        f1, f2 = factorize(c1), factorize(c2)
        b1 = math.prod(p**e for p, e in f1.items() if p in f2)
        b2 = math.prod(p**e for p, e in f2.items() if p in f1)
        return cls(c1, c2, b1, b2, c1 // b1, c2 // b2)

    def check(self) -> None:
        ok = (
            self.c1 == self.b1 * self.c1p
            and self.c2 == self.b2 * self.c2p
            and gcd(self.b1, self.c1p) == 1
            and gcd(self.b2, self.c2p) == 1
            and gcd(self.c1p, self.c2p) == 1
            and _radical(self.b1) == _radical(self.b2)
        )
        if not ok:
            raise ValueError(f"invalid factorization {self}")


def s3_sum(b1: int, b2: int, r1: int, m: int, t: int, c1p: int, c2p: int) -> complex:
    """b2^(-3/2) b1^(-2) sum_{a mod b1 b2} S(a^2, r1^2 c2'bar^2; b2) e(2 a r1 c2'bar/b2) S(a t, m c1'bar^2; b1)."""
    ExpSumFactorization(b1 * c1p, b2 * c2p, b1, b2, c1p, c2p).check()
    if b1 == 1 and b2 == 1:
        return 1.0 + 0j
    c2bar = pow(c2p, -1, b2) if b2 > 1 else 0
    c1bar = pow(c1p, -1, b1) if b1 > 1 else 0
    row2 = kloosterman_row(r1 * r1 * c2bar * c2bar % b2, b2)
    row1 = kloosterman_row(m * c1bar * c1bar % b1, b1)
    a = np.arange(b1 * b2, dtype=np.int64)
    total = (row2[(a * a) % b2] * _e(2 * a * r1 * c2bar, b2) * row1[(a * t) % b1]).sum()
    return complex(total / (b2**1.5 * b1**2))


def expsum_scan(c_max: int = 300, r_max: int = 5):
    """Rows (c2', r1, b2, re, im, is_square, passes_bound) for every admissible b2 mod c2'."""
    rows = []
    for c in range(1, c_max + 1):
        table = s1_table(c)
        sq = is_square(c)
        units = [1] if c == 1 else [b for b in range(1, c) if gcd(b, c) == 1]
        for r1 in range(1, r_max + 1):
            for b2 in units:
                u = r1 * (pow(b2, -1, c) if c > 1 else 0) % c
                v = complex(table[u])
                ok = abs(v) <= 1 + 1e-8 and (sq or abs(v) <= 1e-8 * c**-0.5)
                rows.append((c, r1, b2, v.real, v.imag, sq, ok))
    return rows


# ---------------------------------------------------------------- Poisson


def poisson_compare(S: Callable[[np.ndarray], np.ndarray], Psi: Callable[[np.ndarray], np.ndarray],
                    N: int, c: int) -> dict:
    """Direct smoothed sum of a c-periodic S against its zero-frequency Poisson term."""
    if N < 1 or c < 1:
        raise ValueError("N and c must be >= 1")
    n = np.arange(N + 1, 2 * N, dtype=np.int64)
    direct = complex(np.sum(np.asarray(S(n), dtype=complex) * Psi(n / N)))
    # tanh-sinh: Psi is flat to all orders at both ends
    psi_hat0 = float(mpmath.quad(lambda x: float(Psi(np.array([float(x)]))[0]), [1, 1.5, 2]))
    a = np.arange(c, dtype=np.int64)
    main = complex(psi_hat0 * N / c * np.sum(np.asarray(S(a), dtype=complex)))
    return {"direct": direct, "main": main, "error": abs(direct - main), "psi_hat0": psi_hat0}
