"""Closed-form extremal W on R^N, cylinder ground state Psi and the Emden-Fowler map.

Every derivative here is analytic. Psi is evaluated through logarithms so that
arguments of size 1e3 neither overflow cosh nor underflow to a wrong zero.
"""

from __future__ import annotations

import numpy as np

from .grid import CylinderGrid, ModeFunction
from .params import CknParams

LOG2 = np.log(2.0)


def logcosh(x):
    x = np.abs(np.asarray(x, dtype=float))
    return x + np.log1p(np.exp(-2.0 * x)) - LOG2


def psi_peak(params: CknParams) -> float:
    """Psi(0) = ((p+1)c^2/2)^(1/(p-1))."""
    params.require_superlinear()
    p, c = params.p, params.c
    return ((p + 1.0) * c * c / 2.0) ** (1.0 / (p - 1.0))


def eval_psi(params: CknParams, s, t):
    params.require_superlinear()
    p, c = params.p, params.c
    x = np.asarray(t, dtype=float) - s
    log_psi = np.log((p + 1.0) * c * c / 2.0) / (p - 1.0) - 2.0 / (p - 1.0) * logcosh(params.alpha * x)
    return np.exp(log_psi)


def eval_psi_prime(params: CknParams, s, t):
    """dPsi/dt at t - s; equals -c tanh(alpha (t-s)) Psi(t-s)."""
    x = np.asarray(t, dtype=float) - s
    return -params.c * np.tanh(params.alpha * x) * eval_psi(params, s, t)


def eval_psi_derivatives(params: CknParams, s, t):
    """Return (Psi, Psi', Psi'', Psi''') at t - s."""
    c, al = params.c, params.alpha
    x = np.asarray(t, dtype=float) - s
    psi = eval_psi(params, s, t)
    th = np.tanh(al * x)
    sech2 = 1.0 - th * th
    d1 = -c * th * psi
    d2 = -c * al * sech2 * psi + c * c * th * th * psi
    d3 = (-c * al * (-2.0 * al * sech2 * th * psi + sech2 * d1)
          + c * c * (2.0 * al * th * sech2 * psi + th * th * d1))
    return psi, d1, d2, d3


def eval_W(params: CknParams, r):
    """Extremal profile W(r) = (2(p+1)c^2)^(1/(p-1)) (1 + r^(c(p-1)))^(-2/(p-1))."""
    params.require_superlinear()
    p, c = params.p, params.c
    log_r = np.log(np.asarray(r, dtype=float))
    log_w = np.log(2.0 * (p + 1.0) * c * c) / (p - 1.0) - 2.0 / (p - 1.0) * np.logaddexp(0.0, c * (p - 1.0) * log_r)
    return np.exp(log_w)


def _sigma(params: CknParams, r):
    """r^k / (1 + r^k) with k = c(p-1), evaluated stably."""
    k = params.c * (params.p - 1.0)
    return 0.5 * (1.0 + np.tanh(0.5 * k * np.log(np.asarray(r, dtype=float))))


def eval_W_prime(params: CknParams, r):
    r = np.asarray(r, dtype=float)
    return -2.0 * params.c * _sigma(params, r) * eval_W(params, r) / r


def eval_V(params: CknParams, r):
    """Dilation generator V = -(r W' + c W).

    Sign convention: V is minus the derivative of tau^c W(tau r) at tau = 1,
    chosen so that the Emden-Fowler image of V is exactly Psi'.
    """
    return params.c * eval_W(params, r) * (2.0 * _sigma(params, r) - 1.0)


def eval_V_prime(params: CknParams, r):
    r = np.asarray(r, dtype=float)
    k = params.c * (params.p - 1.0)
    sig = _sigma(params, r)
    dsig = k * sig * (1.0 - sig) / r
    return params.c * (eval_W_prime(params, r) * (2.0 * sig - 1.0) + 2.0 * eval_W(params, r) * dsig)


def radii(grid: CylinderGrid):
    """Log-radius sampling r_k = exp(-t_k) shared by both pictures."""
    return np.exp(-grid.t)


def emden_fowler_forward(grid: CylinderGrid, u_values) -> ModeFunction:
    """Radial u sampled at r_k = exp(-t_k) -> v(t) = r^c u(r)."""
    u = np.asarray(u_values, dtype=float)
    return ModeFunction(grid, 0, np.exp(-grid.params.c * grid.t) * u)


def emden_fowler_inverse(v: ModeFunction):
    """Inverse map: u(r_k) = r_k^(-c) v(t_k)."""
    return np.exp(v.grid.params.c * v.grid.t) * v.samples


def profile_mode(grid: CylinderGrid, s: float = 0.0) -> ModeFunction:
    """Psi_s on the grid, tagged as an exact bubble."""
    return ModeFunction.bubble_sum(grid, (s,), eval_psi(grid.params, s, grid.t))


def profile_prime_mode(grid: CylinderGrid, s: float = 0.0) -> ModeFunction:
    return ModeFunction(grid, 0, eval_psi_prime(grid.params, s, grid.t))


def signed_power(v, p: float):
    """sign(v) |v|^p through exp/log; |v| < 1e-300 maps to 0."""
    v = np.asarray(v, dtype=float)
    av = np.abs(v)
    out = np.zeros_like(v)
    big = av >= 1e-300
    out[big] = np.sign(v[big]) * np.exp(p * np.log(av[big]))
    return out


def power_increment(base, incr, p: float):
    """|b+r|^(p-1)(b+r) - |b|^(p-1) b without cancellation when |r| << b."""
    base = np.asarray(base, dtype=float)
    incr = np.asarray(incr, dtype=float)
    out = signed_power(base + incr, p) - signed_power(base, p)
    safe = (base > 0) & (np.abs(incr) <= 0.5 * base)
    b = base[safe]
    out[safe] = np.exp(p * np.log(b)) * np.expm1(p * np.log1p(incr[safe] / b))
    return out


def bubble_power_defect(params: CknParams, t, centers, coefs=None):
    """E = |sum a_j Psi_j|^(p-1) sum a_j Psi_j - sum a_j Psi_j^p, cancellation-free for a_j = 1."""
    p = params.p
    t = np.asarray(t, dtype=float)
    coefs = (1.0,) * len(centers) if coefs is None else tuple(coefs)
    psis = np.array([eval_psi(params, s, t) for s in centers])
    if any(a != 1.0 for a in coefs):
        a = np.asarray(coefs)[:, None]
        return signed_power(np.sum(a * psis, axis=0), p) - np.sum(a * signed_power(psis, p), axis=0)
    if len(centers) == 1:
        return np.zeros_like(t)
    lead = np.argmax(psis, axis=0)
    cols = np.arange(t.size)
    top = psis[lead, cols]
    not_top = np.ones_like(psis, dtype=bool)
    not_top[lead, cols] = False
    x = np.where(not_top, psis, 0.0).sum(axis=0) / top
    others_p = np.where(not_top, np.exp(p * np.log(psis)), 0.0).sum(axis=0)
    return np.exp(p * np.log(top)) * np.expm1(p * np.log1p(x)) - others_p
