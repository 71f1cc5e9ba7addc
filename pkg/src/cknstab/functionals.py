"""Best constant, energy, deficit and Euler-Lagrange residual on the cylinder.

Functions carrying an exact bubble part (see ModeFunction) are handled through
the weak identity <Psi_s, w>_{H^1} = int Psi_s^p w: the linear image of each
exact bubble is taken from the equation instead of from differenced samples.
This keeps the residual of an exact bubble at zero and the first variation of
the deficit at zero, so that small perturbations are not swamped by the O(h^2)
consistency error of the scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ModeError
from .grid import CylinderGrid, ModeFunction, h1_inner, lp_norm, sphere_area
from .params import CknParams
from .profiles import (bubble_power_defect, eval_psi, power_increment, psi_peak,
                       signed_power)


def sech_power_integral(m: float) -> float:
    """int_R sech(x)^(2m) dx = sqrt(pi) Gamma(m) / Gamma(m + 1/2)."""
    return math.sqrt(math.pi) * math.exp(math.lgamma(m) - math.lgamma(m + 0.5))


def psi_power_integral(params: CknParams) -> float:
    """I = int Psi^(p+1) dt in closed form."""
    params.require_superlinear()
    p = params.p
    m = (p + 1.0) / (p - 1.0)
    return psi_peak(params) ** (p + 1.0) / params.alpha * sech_power_integral(m)


def bubble_energy(params: CknParams) -> float:
    """||Psi||^2_{H^1} = omega I, which also equals (C^{-1})^((p+1)/(p-1))."""
    return sphere_area(params.N) * psi_power_integral(params)


def best_constant_inv(params: CknParams) -> float:
    p = params.p
    return bubble_energy(params) ** ((p - 1.0) / (p + 1.0))


def best_constant_inv_quadrature(params: CknParams, T: float = 200.0, n: int = 400001) -> float:
    """Quotient ||Psi||^2 / ||Psi||^2_{p+1} by direct quadrature (cross-check path)."""
    from .profiles import eval_psi_prime

    t = np.linspace(-T, T, n)
    psi = eval_psi(params, 0.0, t)
    dpsi = eval_psi_prime(params, 0.0, t)
    om = sphere_area(params.N)
    h1 = om * np.trapezoid(dpsi ** 2 + params.c ** 2 * psi ** 2, t)
    lp = (om * np.trapezoid(psi ** (params.p + 1.0), t)) ** (2.0 / (params.p + 1.0))
    return float(h1 / lp)


def sobolev_constant(N: int) -> float:
    """Sharp Sobolev constant pi N (N-2) (Gamma(N/2)/Gamma(N))^(2/N)."""
    return math.pi * N * (N - 2) * math.exp(2.0 / N * (math.lgamma(N / 2.0) - math.lgamma(N)))


def exact_part(v: ModeFunction) -> np.ndarray:
    params = v.grid.params
    out = np.zeros(v.grid.n)
    for s, a in zip(v.centers, v.coefs):
        out += a * eval_psi(params, s, v.grid.t)
    return out


def _exact_image(v: ModeFunction) -> np.ndarray:
    """Nodal values of (-d^2 + c^2) applied to the exact part: sum a_j Psi_j^p."""
    params = v.grid.params
    out = np.zeros(v.grid.n)
    for s, a in zip(v.centers, v.coefs):
        out += a * eval_psi(params, s, v.grid.t) ** params.p
    return out


def linear_load(v: ModeFunction) -> np.ndarray:
    """Weak-form load of (-d^2 + c^2 + lambda_l) v against the hat basis."""
    g = v.grid
    load = g.gram_apply(v.rest(), v.mode)
    if v.has_bubbles:
        load = load + g.omega * g.weights * _exact_image(v)
    return load


def energy_inner(u: ModeFunction, v: ModeFunction) -> float:
    """H^1 inner product using exact bubble images where available."""
    if not (u.has_bubbles or v.has_bubbles):
        return h1_inner(u, v)
    if u.mode != 0 or v.mode != 0:
        raise ModeError("exact bubble parts are radial")
    g = u.grid
    total = float(u.rest() @ g.gram_apply(v.rest(), 0))
    w = g.omega * g.weights
    if u.has_bubbles:
        total += float(np.sum(w * _exact_image(u) * v.rest()))
    if v.has_bubbles:
        total += float(np.sum(w * _exact_image(v) * u.rest()))
    if u.has_bubbles and v.has_bubbles:
        total += float(np.sum(w * _exact_image(u) * exact_part(v)))
    return total


def energy_norm_sq(v: ModeFunction) -> float:
    return energy_inner(v, v)


def residual_load(v: ModeFunction) -> ModeFunction:
    """Load of f = -v'' + c^2 v - |v|^(p-1) v; feed to h_minus1_norm for ||f||_{H^-1}."""
    if v.mode != 0:
        raise ModeError("the nonlinear residual is radial-only")
    g = v.grid
    p = g.params.p
    w = g.omega * g.weights
    if not v.has_bubbles:
        load = g.gram_apply(v.samples, 0) - w * signed_power(v.samples, p)
        return ModeFunction(g, 0, load)
    base = exact_part(v)
    # sum a_j Psi_j^p - |v|^(p-1) v, split so that no O(1) terms cancel.
    nonlinear = power_increment(base, v.remainder, p) + bubble_power_defect(g.params, g.t, v.centers, v.coefs)
    load = g.gram_apply(v.remainder, 0) - w * nonlinear
    return ModeFunction(g, 0, load)


@dataclass
class DeficitRecord:
    h1_norm_sq: float
    lp_norm: float
    best_const_inv: float
    deficit: float
    energy: float

    @property
    def normalized(self) -> float:
        return self.deficit / self.h1_norm_sq if self.h1_norm_sq > 0 else 0.0


def deficit(v: ModeFunction) -> DeficitRecord:
    if v.mode != 0:
        raise ModeError("the deficit is radial-only")
    params = v.grid.params
    h1 = energy_norm_sq(v)
    lp = lp_norm(v, params.p + 1.0)
    cinv = best_constant_inv(params)
    return DeficitRecord(h1, lp, cinv, h1 - cinv * lp ** 2, h1 / 2.0 - lp ** (params.p + 1.0) / (params.p + 1.0))


def second_variation_ratio(params: CknParams, grid: CylinderGrid, phi: np.ndarray, s: float = 0.0) -> float:
    """(||phi||^2 - p int Psi^(p-1) phi^2) / ||phi||^2: the limit of e/d^2 along phi."""
    psi = eval_psi(params, s, grid.t)
    norm_sq = float(phi @ grid.gram_apply(phi, 0))
    weighted = params.p * grid.omega * float(np.sum(grid.weights * psi ** (params.p - 1.0) * phi ** 2))
    return (norm_sq - weighted) / norm_sq
