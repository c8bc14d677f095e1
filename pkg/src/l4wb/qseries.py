"""Exact truncated q-expansions.

Coefficients are held as Python integers over a common positive denominator,
so every QSeries is an exact rational series.  Products go through Kronecker
substitution: both series are packed into one big integer and multiplied by
GMP, which keeps 10^5-term products of 400-bit coefficients around a second.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import gmpy2
import mpmath
from gmpy2 import mpz

from .arith_sums import sigma_table


class TruncationError(ValueError):
    """Raised when a coefficient beyond the known truncation is requested."""


def _pack(coeffs: list[int], bits: int) -> mpz:
    # evaluate sum c_i 2^(bits*i) by splitting in halves; Horner would be quadratic
    def rec(lo: int, hi: int) -> mpz:
        if hi - lo <= 16:
            acc = mpz(0)
            for i in range(hi - 1, lo - 1, -1):
                acc = (acc << bits) + coeffs[i]
            return acc
        mid = (lo + hi) // 2
        return rec(lo, mid) + (rec(mid, hi) << (bits * (mid - lo)))

    return rec(0, len(coeffs))


def _unpack(value: mpz, bits: int, n: int) -> list[int]:
    out: list[int] = []

    def rec(v: mpz, lo: int, hi: int) -> None:
        if hi - lo == 1:
            out.append(int(v))
            return
        mid = (lo + hi) // 2
        shift = bits * (mid - lo)
        low = v & ((mpz(1) << shift) - 1)
        high = v >> shift
        # signed digits: a low part with its top bit set encodes a negative value
        if low >> (shift - 1):
            low -= mpz(1) << shift
            high += 1
        rec(low, lo, mid)
        rec(high, mid, hi)

    rec(value, 0, n)
    return out


def _max_bits(coeffs: list[int]) -> int:
    return max((abs(c).bit_length() for c in coeffs), default=0)


def _poly_mul(a: list[int], b: list[int], n: int) -> list[int]:
    """First ``n`` coefficients of the product of two integer series."""
    a = a[:n]
    b = b[:n]
    if not a or not b:
        return [0] * n
    if min(len(a), len(b)) <= 32:
        out = [0] * n
        for i, ai in enumerate(a):
            if ai:
                for j in range(min(len(b), n - i)):
                    out[i + j] += ai * b[j]
        return out
    bits = _max_bits(a) + _max_bits(b) + max(len(a), len(b)).bit_length() + 2
    prod = _pack(a, bits) * _pack(b, bits)
    out = _unpack(prod, bits, len(a) + len(b) - 1)
    out = out[:n]
    return out + [0] * (n - len(out))


@dataclass(frozen=True)
class QSeries:
    """A truncated q-expansion ``sum_{n<=N} (num[n]/den) q^n`` of a given weight."""

    weight: int
    num: tuple[int, ...]
    den: int = 1

    def __post_init__(self):
        if self.den <= 0:
            raise ValueError("denominator must be positive")
        if not self.num:
            raise ValueError("a QSeries needs at least the constant coefficient")

    @classmethod
    def from_ints(cls, weight: int, coeffs, den: int = 1) -> "QSeries":
        coeffs = [int(c) for c in coeffs]
        g = den
        for c in coeffs:
            if g == 1:
                break
            g = gcd(g, c)
        if g > 1:
            coeffs = [c // g for c in coeffs]
            den //= g
        return cls(weight, tuple(coeffs), den)

    @classmethod
    def from_fractions(cls, weight: int, coeffs) -> "QSeries":
        fr = [Fraction(c) for c in coeffs]
        den = 1
        for c in fr:
            den = den * c.denominator // gcd(den, c.denominator)
        return cls.from_ints(weight, [c.numerator * (den // c.denominator) for c in fr], den)

    @property
    def truncation(self) -> int:
        return len(self.num) - 1

    @property
    def coeffs(self) -> list[Fraction]:
        return [Fraction(c, self.den) for c in self.num]

    def __getitem__(self, n: int) -> Fraction:
        if n < 0:
            raise IndexError(n)
        if n > self.truncation:
            raise TruncationError(f"coefficient q^{n} beyond truncation {self.truncation}")
        return Fraction(self.num[n], self.den)

    def is_integral(self) -> bool:
        return self.den == 1

    def truncate(self, n: int) -> "QSeries":
        return QSeries(self.weight, self.num[: n + 1], self.den)

    def _aligned(self, other: "QSeries"):
        n = min(self.truncation, other.truncation)
        return n, self.num[: n + 1], other.num[: n + 1]

    def __add__(self, other: "QSeries") -> "QSeries":
        if self.weight != other.weight:
            raise ValueError("cannot add forms of different weight")
        n, a, b = self._aligned(other)
        L = self.den * other.den // gcd(self.den, other.den)
        fa, fb = L // self.den, L // other.den
        return QSeries.from_ints(self.weight, [x * fa + y * fb for x, y in zip(a, b)], L)

    def __neg__(self) -> "QSeries":
        return QSeries(self.weight, tuple(-c for c in self.num), self.den)

    def __sub__(self, other: "QSeries") -> "QSeries":
        return self + (-other)

    def scale(self, c) -> "QSeries":
        c = Fraction(c)
        return QSeries.from_ints(self.weight, [x * c.numerator for x in self.num], self.den * c.denominator)

    def __mul__(self, other):
        if not isinstance(other, QSeries):
            return self.scale(other)
        n = min(self.truncation, other.truncation) + 1
        prod = _poly_mul(list(self.num), list(other.num), n)
        return QSeries.from_ints(self.weight + other.weight, prod, self.den * other.den)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "QSeries":
        if e < 0:
            raise ValueError("negative powers are not supported")
        result = QSeries(0, (1,) + (0,) * self.truncation)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, QSeries):
            return NotImplemented
        n, a, b = self._aligned(other)
        return self.weight == other.weight and all(x * other.den == y * self.den for x, y in zip(a, b))

    def __hash__(self):
        return hash((self.weight, self.num, self.den))

    def __repr__(self):
        head = ", ".join(str(c) for c in self.coeffs[:6])
        return f"QSeries(weight={self.weight}, N={self.truncation}, [{head}, ...])"


def bernoulli(k: int) -> Fraction:
    p, q = mpmath.bernfrac(k)
    return Fraction(int(p), int(q))


def eisenstein(k: int, N: int) -> QSeries:
    """Normalized Eisenstein series E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n."""
    if k % 2 or k < 4:
        raise ValueError(f"Eisenstein series needs even weight >= 4, got {k}")
    if N < 1:
        raise ValueError("truncation must be >= 1")
    factor = -Fraction(2 * k) / bernoulli(k)
    sig = sigma_table(k - 1, N)
    num = [factor.denominator] + [factor.numerator * s for s in sig[1:]]
    return QSeries.from_ints(k, num, factor.denominator)


def delta(N: int) -> QSeries:
    """Ramanujan's Delta = q prod (1-q^n)^24 through the eta product.

    prod (1-q^n)^3 is Jacobi's sparse series sum (-1)^m (2m+1) q^{m(m+1)/2};
    three squarings then give the 24th power.
    """
    if N < 1:
        raise ValueError("truncation must be >= 1")
    n = N  # coefficients q^0..q^{N-1} of the product, shifted by q
    eta3 = [0] * n
    m = 0
    while m * (m + 1) // 2 < n:
        eta3[m * (m + 1) // 2] = (-1) ** m * (2 * m + 1)
        m += 1
    p = eta3
    for _ in range(3):
        p = _poly_mul(p, p, n)
    return QSeries(12, tuple([0] + p))
