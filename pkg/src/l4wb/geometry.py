"""Quadrature on the SL2(Z) fundamental domain and the inner products built on it.

The truncated domain {|x| <= 1/2, |z| >= 1, y <= y_max} is split into a curved
strip under y = 1, whose lower edge sqrt(1 - x^2) is absorbed by an
x-dependent affine map in y, and a rectangle above it.  Both carry
tensor-product Gauss-Legendre panels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .hecke import BudgetError, Eigenform

SQRT3_2 = math.sqrt(3) / 2
VOLUME = math.pi / 3


class QuadratureError(RuntimeError):
    pass


def cusp_height(weight: int, power: int = 2, decay: float = 1e-20) -> float:
    """Height above which y^(power*weight/2) e^(-2 pi power y) has fallen below ``decay`` of its peak."""
    a = power * weight / 2
    b = 2 * math.pi * power
    peak = a / b
    y = max(8.0, 2 * peak)
    g = lambda t: a * math.log(t / peak) - b * (t - peak)
    while g(y) > math.log(decay):
        y *= 1.25
    return math.ceil(y)


@dataclass(frozen=True)
class DomainGrid:
    y_max: float = 8.0
    order: int = 24
    x_panels: int = 4
    y_panel_height: float = 1.0

    def __post_init__(self):
        if self.y_max <= 1:
            raise ValueError("y_max must exceed 1")

    def refined(self) -> "DomainGrid":
        return DomainGrid(self.y_max, self.order, 2 * self.x_panels, self.y_panel_height / 2)

    @cached_property
    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Points z and weights w with sum w * phi(z) ~ int phi dx dy / y^2."""
        t, wt = np.polynomial.legendre.leggauss(self.order)
        t, wt = 0.5 * (t + 1), 0.5 * wt  # on [0, 1]
        xe = np.linspace(-0.5, 0.5, self.x_panels + 1)
        xs = (xe[:-1, None] + np.diff(xe)[:, None] * t[None, :]).ravel()
        wx = (np.diff(xe)[:, None] * wt[None, :]).ravel()
        zs, ws = [], []
        # curved strip: y = lo(x) + (1 - lo(x)) u
        lo = np.sqrt(1 - xs**2)
        n_sub = max(1, int(round(1 / self.y_panel_height)))
        for i in range(n_sub):
            u = (i + t) / n_sub
            wu = wt / n_sub
            y = lo[:, None] + (1 - lo)[:, None] * u[None, :]
            w = wx[:, None] * (1 - lo)[:, None] * wu[None, :] / y**2
            zs.append(xs[:, None] + 1j * y)
            ws.append(w)
        ny = max(1, int(math.ceil((self.y_max - 1) / self.y_panel_height)))
        ye = np.linspace(1.0, self.y_max, ny + 1)
        yy = (ye[:-1, None] + np.diff(ye)[:, None] * t[None, :]).ravel()
        wy = (np.diff(ye)[:, None] * wt[None, :]).ravel()
        zs.append(xs[:, None] + 1j * yy[None, :])
        ws.append(wx[:, None] * wy[None, :] / yy[None, :] ** 2)
        z = np.concatenate([a.ravel() for a in zs])
        w = np.concatenate([a.ravel() for a in ws])
        return z, w

    def integrate(self, values: np.ndarray):
        return np.sum(self.nodes[1] * values)

    def volume(self) -> float:
        """Grid integral of 1 plus the analytic cusp tail 1/y_max."""
        return float(self.integrate(np.ones(len(self.nodes[1])))) + 1.0 / self.y_max


def grid_for(*weights: int, power: int = 2) -> DomainGrid:
    return DomainGrid(y_max=max(cusp_height(w, power) for w in weights))


# ---------------------------------------------------------------- forms on the domain


@dataclass(frozen=True)
class NormalizedForm:
    base: Eigenform
    scale: float

    @property
    def k(self) -> int:
        return self.base.weight

    @cached_property
    def _lam(self) -> np.ndarray:
        # lambda_f(n) = a_f(n) n^((k-1)/2) as floats
        N = self.base.direct
        return np.array([float(x) for x in self.base.lam_direct[: N + 1]])

    def terms_needed(self, y_min: float, tol: float = 1e-14) -> int:
        """q-expansion length with tail below ``tol`` for Im z >= y_min (|lambda(n)| <= 2 sqrt(n) n^((k-1)/2))."""
        k = self.k
        pref = abs(self.scale) * y_min ** (k / 2)
        n = np.arange(1, self.base.direct + 1, dtype=float)
        env = pref * 2 * np.exp((k / 2) * np.log(n) - 2 * math.pi * n * y_min)
        tail = np.cumsum(env[::-1])[::-1]
        ok = np.nonzero(tail <= tol)[0]
        if not len(ok):
            raise BudgetError(f"q-expansion tail at y={y_min} needs more than {self.base.direct} terms")
        return int(ok[0])


def eval_F(nf: NormalizedForm, z, tol: float = 1e-12) -> np.ndarray:
    """scale * y^(k/2) * f(z), vectorized over z."""
    z = np.asarray(z, dtype=complex)
    y = z.imag
    if np.any(y <= 0):
        raise ValueError("points must lie in the upper half-plane")
    N = nf.terms_needed(float(y.min()), tol)
    lam = nf._lam[: N + 1]
    q = np.exp(2j * math.pi * z.ravel())
    acc = np.zeros(q.shape, dtype=complex)
    for n in range(N, 0, -1):  # Horner in q
        acc = (acc + lam[n]) * q
    out = nf.scale * np.exp((nf.k / 2) * np.log(y.ravel())) * acc
    return out.reshape(z.shape) if z.ndim else complex(out[0])


def _on_grid(nf: NormalizedForm, grid: DomainGrid) -> np.ndarray:
    return eval_F(nf, grid.nodes[0])


def _converged(fn, grid: DomainGrid, rtol: float = 1e-6, size: float = 0.0):
    """fn on ``grid`` and its refinement; ``size`` sets the scale for values that should vanish."""
    a = fn(grid)
    b = fn(grid.refined())
    if abs(b - a) > rtol * max(abs(b), size, 1e-300):
        raise QuadratureError(f"quadrature changed by {abs(b - a) / abs(b):.2e} on refinement")
    return b


def l2_normalize(f: Eigenform, grid: DomainGrid | None = None) -> NormalizedForm:
    grid = grid or grid_for(f.weight)
    unit = NormalizedForm(f, 1.0)
    norm2 = _converged(lambda g: float(g.integrate(np.abs(_on_grid(unit, g)) ** 2)), grid)
    return NormalizedForm(f, 1.0 / math.sqrt(norm2))


def lp_norm(nf: NormalizedForm, p: int, grid: DomainGrid | None = None) -> dict:
    if p not in (2, 4):
        raise ValueError("p must be 2 or 4")
    grid = grid or grid_for(nf.k, power=p)
    val = _converged(lambda g: float(g.integrate(np.abs(_on_grid(nf, g)) ** p)), grid)
    return {"p": p, "norm": val ** (1 / p), "power": val}


def inner(nf: NormalizedForm, ng: NormalizedForm, grid: DomainGrid | None = None) -> complex:
    if nf.k != ng.k:
        raise ValueError("inner product needs equal weights")
    grid = grid or grid_for(nf.k)
    F, G = _on_grid(nf, grid), _on_grid(ng, grid)
    # Cauchy-Schwarz scale, so orthogonal pairs are judged absolutely
    size = math.sqrt(float(grid.integrate(np.abs(F) ** 2) * grid.integrate(np.abs(G) ** 2)))
    return _converged(lambda g: complex(g.integrate(_on_grid(nf, g) * np.conj(_on_grid(ng, g)))), grid, size=size)


def triple_inner(nf: NormalizedForm, ng: NormalizedForm, grid: DomainGrid | None = None,
                 coeff: complex = 1.0) -> complex:
    """<F^2, coeff * G> = integral of F^2 conj(coeff G) dmu."""
    if ng.k != 2 * nf.k:
        raise ValueError("G must have twice the weight of F")
    grid = grid or grid_for(ng.k)
    val = _converged(lambda g: complex(g.integrate(_on_grid(nf, g) ** 2 * np.conj(_on_grid(ng, g)))), grid)
    return val * np.conj(coeff)


def petersson_norm_sq(f: Eigenform, L1: float) -> float:
    """<f, f> = Gamma(k) L(1, sym^2 f) / (2^(2k-1) pi^(k+1)) for the unnormalized f."""
    k = f.weight
    return math.exp(math.lgamma(k) - (2 * k - 1) * math.log(2) - (k + 1) * math.log(math.pi)) * L1


def watson_rhs(k: int, Lg: float, Lfg: float, L1f: float, L1g: float) -> float:
    return math.pi**3 / (2 * (2 * k - 1)) * Lg * Lfg / (L1f**2 * L1g)


def watson_check(f: Eigenform, g: Eigenform, grid: DomainGrid | None = None, values: dict | None = None) -> dict:
    """|<F^2, G>|^2 by quadrature against the L-value expression for it."""
    from .lfun import central_value_g, central_value_sym2xg, edge_sym2

    k = f.weight
    if g.weight != 2 * k:
        raise ValueError("g must have weight 2k")
    v = dict(values or {})
    if "L_half_g" not in v:
        v["L_half_g"] = central_value_g(g).value
    if "L_half_sym2f_g" not in v:
        v["L_half_sym2f_g"] = central_value_sym2xg(f, g).value
    for key, form in (("L1_sym2_f", f), ("L1_sym2_g", g)):
        if key not in v:
            v[key] = edge_sym2(form, X=min(1000.0, form.prime_limit / 37)).value
    rhs = watson_rhs(k, v["L_half_g"], v["L_half_sym2f_g"], v["L1_sym2_f"], v["L1_sym2_g"])
    nf, ng = l2_normalize(f), l2_normalize(g)
    lhs = abs(triple_inner(nf, ng, grid)) ** 2
    if rhs < -1e-10:
        raise ArithmeticError(f"negative Watson right-hand side {rhs}: L-value normalization is off")
    gap = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-30)
    return {"lhs": lhs, "rhs": rhs, "rel_gap": gap, **v}
