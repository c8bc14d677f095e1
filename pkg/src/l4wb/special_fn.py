"""Log-gamma, integer-order Bessel J, and the Bessel-average experiments.

``bessel_j`` is the scalar evaluator with three regimes (power series,
trapezoid quadrature of the integral representation, Langer/Debye asymptotic).
Bulk sums over many orders and arguments go through ``bessel_j_array``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import special

TWO_PI = 2.0 * math.pi


class PoleError(ValueError):
    pass


class RegimeError(ValueError):
    pass


# ---------------------------------------------------------------- gamma


def log_gamma(s):
    """Principal branch of log Gamma(s) for complex s (scalar or array)."""
    arr = np.asarray(s, dtype=complex)
    bad = (arr.imag == 0) & (arr.real <= 0) & (arr.real == np.round(arr.real))
    if np.any(bad):
        raise PoleError(f"Gamma has a pole at {arr[bad].ravel()[0].real:g}")
    out = special.loggamma(arr)
    # scipy loses digits for subnormal |s|; shift by one there
    tiny = np.abs(arr) < 1e-8
    if np.any(tiny):
        out = np.where(tiny, special.loggamma(arr + 1) - np.log(np.where(tiny, arr, 1)), out)
    return complex(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------- weight functions


def bump(u):
    """exp(4 - 1/(u-1) - 1/(2-u)) on (1,2), zero outside; peak value 1 at u = 3/2."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = (u > 1.0) & (u < 2.0)
    v = u[inside]
    out[inside] = np.exp(4.0 - 1.0 / (v - 1.0) - 1.0 / (2.0 - v))
    return out if out.ndim else float(out)


def bump_integral() -> float:
    # tanh-sinh copes with the flat ends that trip scipy's error estimate
    with mpmath.workdps(30):
        val = mpmath.quad(lambda u: mpmath.exp(4 - 1 / (u - 1) - 1 / (2 - u)), [1, 1.5, 2])
    return float(val)


# ---------------------------------------------------------------- Bessel J


def _j_series(ell: int, x: float) -> float:
    # sum (-1)^m (x/2)^(2m+ell) / (m! (m+ell)!)
    half = 0.5 * x
    term = math.exp(ell * math.log(half) - math.lgamma(ell + 1)) if x > 0 else 0.0
    total = term
    m = 0
    while term != 0.0 and abs(term) > 1e-18 * abs(total):
        m += 1
        term *= -(half * half) / (m * (m + ell))
        total += term
        if m > 500:
            break
    return total


def _j_quadrature(ell: int, x: float, points_per_osc: int = 20) -> float:
    # J_l(x) = int_{-1/2}^{1/2} e(l t) e^{-i x sin(2 pi t)} dt; periodic integrand, so the
    # trapezoid rule converges geometrically once it resolves every oscillation
    n = max(64, int(points_per_osc * (ell + x + 10)))
    theta = TWO_PI * (np.arange(n) + 0.5) / n - math.pi
    return float(np.mean(np.cos(ell * theta - x * np.sin(theta))))


def _j_langer(ell: int, x: float) -> float:
    w = math.sqrt(x * x / (ell * ell) - 1.0)
    atw = math.atan(w)
    z = ell * (w - atw)
    amp = math.sqrt(2.0 / (math.pi * ell * w))
    phase = z - math.pi / 4
    # first Debye correction term
    corr = (3.0 / w + 5.0 / w**3) / (24.0 * ell)
    return amp * (math.cos(phase) + corr * math.sin(phase))


def bessel_j(ell: int, x: float, method: str = "auto") -> float:
    """J_ell(x) for integer ell >= 1 and real x >= 0."""
    if ell < 1:
        raise ValueError("order must be a positive integer")
    if x < 0:
        raise ValueError("argument must be non-negative")
    if x == 0.0:
        return 0.0
    if method == "auto":
        if x <= math.sqrt(ell):
            method = "series"
        elif x >= ell * (1.0 + ell ** (-1.0 / 3.0)):
            method = "langer"
        else:
            method = "quadrature"
    if method == "series":
        return _j_series(ell, x)
    if method == "quadrature":
        return _j_quadrature(ell, x)
    if method == "langer":
        if x <= ell:
            raise RegimeError("Langer's formula needs x > ell")
        return _j_langer(ell, x)
    raise ValueError(f"unknown method {method!r}")


def langer_error_scale(ell: int, x: float) -> float:
    """z^(-3/2) + ell^(-4/3): the error scale of the Langer regime."""
    w = math.sqrt(x * x / (ell * ell) - 1.0)
    z = ell * (w - math.atan(w))
    return z**-1.5 + ell ** (-4.0 / 3.0)


def bessel_j_array(ell, x) -> np.ndarray:
    """Vectorized J_ell(x) for bulk sums (scipy's AMOS-based jv)."""
    return special.jv(ell, x)


# ---------------------------------------------------------------- averages over k


@dataclass(frozen=True)
class BesselAvgConfig:
    K: float
    parity: int = 4          # 4 for k = 0 mod 4 sums, 2 for k = 0 mod 2 sums
    h: str = "bump"

    def __post_init__(self):
        if self.K < 20:
            raise ValueError("K must be >= 20")
        if self.parity not in (2, 4):
            raise ValueError("parity must be 2 or 4")
        if self.h != "bump":
            raise ValueError(f"unknown weight preset {self.h!r}")

    def orders(self) -> np.ndarray:
        # h(k/K) vanishes outside k/K in (1,2)
        lo = int(math.floor(self.K)) + 1
        ks = np.arange(lo, int(math.ceil(2 * self.K)), dtype=np.int64)
        ks = ks[ks % self.parity == 0]
        return ks[(ks / self.K > 1) & (ks / self.K < 2)]

    def weights(self) -> np.ndarray:
        return bump(self.orders() / self.K)


def bessel_avg_single(cfg: BesselAvgConfig, y) -> np.ndarray:
    """4 sum_{k = 0 mod 4} h(k/K) J_{k-1}(y), for one y or an array of y."""
    if cfg.parity != 4:
        raise ValueError("the single average runs over k = 0 mod 4")
    ks, hw = cfg.orders(), cfg.weights()
    y = np.atleast_1d(np.asarray(y, dtype=float))
    J = bessel_j_array(ks[None, :] - 1, y[:, None])
    return 4.0 * (J * hw[None, :]).sum(axis=1)


def noik_residual(cfg: BesselAvgConfig, y) -> np.ndarray:
    """Average minus its main term h(y/K)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return bessel_avg_single(cfg, y) - bump(y / cfg.K)


# lower edge: below (1 - y/4x) y^2 = K^2 / (8 pi^2) every order is past its turning
# point and the sum is exponentially small (sweep at K = 60, x in [K^1.1, K^1.5]);
# upper edge: 4 pi y reaches 4K, the top of the order range; past it the sum has no
# single phase, only a 1e-6..1e-4 remainder that does not decay at K = 60
WINDOW_C1 = 1.0 / (8.0 * math.pi**2)
WINDOW_C2 = 1.0 / math.pi**2


def support_window(K: float, x: float, y: float, c1: float = WINDOW_C1, c2: float = WINDOW_C2) -> bool:
    if y >= 4 * x:
        return False
    gap = 1.0 - y / (4 * x)
    return c1 * K * K / (y * y) <= gap <= c2 * K * K / (y * y)


@dataclass(frozen=True)
class PairAvgResult:
    value: complex
    phase_removed: complex
    support_flag: bool
    sign: int


def pair_phase(x: float, y: float) -> float:
    return y * y / (4 * x) + 2 * x


def bessel_avg_pair(cfg: BesselAvgConfig, x: float, y: float, sign: int | None = None) -> PairAvgResult:
    """sum_{k even} i^k h(k/K) J_{k-1}(4 pi x) J_{2k-1}(4 pi y).

    ``phase_removed`` multiplies by sqrt(x) e(-sign (y^2/4x + 2x)).  With
    ``sign=None`` the sign whose removal leaves the slower-varying remainder is
    used; in practice that is the minus branch.
    """
    if x <= 0 or y <= 0:
        raise ValueError("x and y must be positive")
    if cfg.parity != 2:
        raise ValueError("the pair average runs over k = 0 mod 2")
    ks, hw = cfg.orders(), cfg.weights()
    signs = np.where((ks // 2) % 2 == 0, 1.0, -1.0)  # i^k for even k, as an exact sign
    J1 = bessel_j_array(ks - 1, 4 * math.pi * x)
    J2 = bessel_j_array(2 * ks - 1, 4 * math.pi * y)
    value = complex(np.sum(signs * hw * J1 * J2))
    if sign is None:
        sign = -1
    ph = pair_phase(x, y)
    removed = value * math.sqrt(x) * complex(math.cos(-sign * TWO_PI * ph), math.sin(-sign * TWO_PI * ph))
    return PairAvgResult(value, removed, support_window(cfg.K, x, y), sign)


def pair_bound_checks(cfg: BesselAvgConfig, x: float, y: float, C: float = 1.0, decay_tol: float = 1e-6,
                      eps: float = 0.1) -> dict:
    """Evaluate the pair average and test it against the bound of its regime.

    Regimes, tried in this order: 'bigx' (x > K^(2-eps), y < K^(2+eps)): |value| <= C K^(-5/6);
    'transition' (K^(4/3-eps) < x < K^(2-eps), x K^-eps < y < x K^eps): |value| <= C K / sqrt(x y);
    'decay' (same x range, |1 - y/4x| > K^(2+eps)/x^2): |value| <= decay_tol.
    The Bessel arguments are 4 pi x and 4 pi y throughout.
    """
    K = cfg.K
    value = bessel_avg_pair(cfg, x, y).value
    mid_x = K ** (4.0 / 3 - eps) < x < K ** (2 - eps)
    if x > K ** (2 - eps) and y < K ** (2 + eps):
        name, bound = "bigx", C * K ** (-5.0 / 6.0)
    elif mid_x and x * K**-eps < y < x * K**eps:
        name, bound = "transition", C * K / math.sqrt(x * y)
    elif mid_x and abs(1 - y / (4 * x)) > K ** (2 + eps) / x**2:
        name, bound = "decay", decay_tol
    else:
        raise RegimeError(f"(x, y) = ({x}, {y}) fits none of the bound regimes at K = {K}")
    return {"K": K, "x": x, "y": y, "value": value, "bound_name": name, "bound_value": bound,
            "pass": abs(value) <= bound}
