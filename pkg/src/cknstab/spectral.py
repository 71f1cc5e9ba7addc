"""Linearized operator around Psi per angular mode, its low spectrum and oracles.

The operator L_l = -d^2/dt^2 + c^2 + lambda_l - V(t) is discretized with the same
lumped P1 pair as the grid module: A = omega (K + (c^2 + lambda_l) M - M V) against
the mass omega M, Dirichlet at +-T. With a lumped mass the generalized problem
is a symmetric tridiagonal one after diagonal scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import BracketError, ConvergenceError, DomainError
from .grid import CylinderGrid, ModeFunction, richardson
from .params import CknParams, Region, make_params
from .profiles import eval_psi


@dataclass(frozen=True, eq=False)
class LinearizedOperator:
    grid: CylinderGrid
    mode: int
    potential: np.ndarray = field(repr=False)

    @property
    def shift(self) -> float:
        return self.grid.params.c ** 2 + self.grid.angular_eigenvalue(self.mode)

    def interior_tridiagonal(self):
        """(diag, offdiag) of the scaled standard problem M^{-1/2} A M^{-1/2}."""
        h = self.grid.h
        diag = 2.0 / h ** 2 + self.shift - self.potential[1:-1]
        off = np.full(self.grid.n - 3, -1.0 / h ** 2)
        return diag, off

    def apply(self, v) -> np.ndarray:
        """Weak-form load of L_l v on all nodes."""
        v = np.asarray(v, dtype=float)
        g = self.grid
        return g.gram_apply(v, self.mode) - g.omega * g.weights * self.potential * v

    def strong_apply(self, v) -> np.ndarray:
        """Nodal values of L_l v (load divided by the lumped mass)."""
        g = self.grid
        return self.apply(v) / (g.omega * g.weights)


@dataclass
class SpectrumReport:
    mode: int
    eigenvalues: np.ndarray
    oracle: list
    abs_err: list
    negative_count: int
    continuum_edge: float
    eigenvectors: np.ndarray | None = None
    raw_eigenvalues: np.ndarray | None = None
    extrapolated: bool = False

    @property
    def bound_states(self) -> np.ndarray:
        return self.eigenvalues[self.eigenvalues < self.continuum_edge]


def bubble_potential(params: CknParams, t, centers=(0.0,)):
    total = sum(eval_psi(params, s, t) for s in centers)
    return params.p * total ** (params.p - 1.0)


def assemble(params: CknParams, grid: CylinderGrid, mode: int, centers=(0.0,)) -> LinearizedOperator:
    params.require_superlinear()
    return LinearizedOperator(grid, mode, bubble_potential(params, grid.t, centers))


def oracle_spectrum(params: CknParams, mode: int) -> list:
    """Exact bound states of the sech^2 well: c^2 + lambda_l - alpha^2 (m - n)^2, 0 <= n < m."""
    params.require_superlinear()
    p, c, N = params.p, params.c, params.N
    m = (p + 1.0) / (p - 1.0)
    lam = mode * (mode + N - 2.0)
    al = params.alpha
    out = []
    n = 0
    while n < m - 1e-12:
        out.append(c * c + lam - al * al * (m - n) ** 2)
        n += 1
    return out


def _lowest_tridiagonal(diag, off, k, vectors):
    """Bisection (stebz) plus inverse iteration (stein); MRRR as the one retry."""
    last = None
    for driver in ("stebz", "stemr"):
        try:
            res = eigh_tridiagonal(diag, off, eigvals_only=not vectors, select="i",
                                   select_range=(0, k - 1), lapack_driver=driver)
        except (LinAlgError, ValueError) as exc:
            last = exc
            continue
        return res if vectors else (res, None)
    raise ConvergenceError(f"tridiagonal eigensolver failed: {last}")


def eigen_lowest(op: LinearizedOperator, k: int, vectors: bool = True) -> SpectrumReport:
    """k smallest eigenvalues by Sturm bisection plus inverse iteration (LAPACK stebz/stein)."""
    if k < 1 or k > op.grid.n - 2:
        raise ValueError("need 1 <= k <= number of interior nodes")
    diag, off = op.interior_tridiagonal()
    vals, vecs = _lowest_tridiagonal(diag, off, k, vectors)
    full = None
    if vectors:
        g = op.grid
        full = np.zeros((g.n, k))
        full[1:-1] = vecs / math.sqrt(g.omega * g.h)
        for j in range(k):
            if full[np.argmax(np.abs(full[:, j])), j] < 0:
                full[:, j] *= -1.0
    return _report(op.grid.params, op.mode, np.asarray(vals), full, op.shift)


def _report(params, mode, vals, vecs, edge, raw=None, extrapolated=False):
    oracle = oracle_spectrum(params, mode)
    bound = [v for v in vals if v < edge]
    errs = [abs(v - o) for v, o in zip(bound, oracle)]
    return SpectrumReport(mode, vals, oracle, errs, int(np.sum(vals < 0)), edge, vecs, raw, extrapolated)


def spectrum(params: CknParams, grid: CylinderGrid, mode: int, k: int = 3,
             extrapolate: bool = True, zero_tol: float = 1e-6) -> SpectrumReport:
    """Lowest k eigenvalues, Richardson-extrapolated over (h, 2h) by default.

    negative_count ignores eigenvalues within zero_tol of zero.
    """
    op = assemble(params, grid, mode)
    fine = eigen_lowest(op, k)
    if not extrapolate:
        fine.negative_count = int(np.sum(fine.eigenvalues < -zero_tol))
        return fine
    coarse = eigen_lowest(assemble(params, grid.coarsen(), mode), k, vectors=False)
    vals = richardson(fine.eigenvalues, coarse.eigenvalues)
    rep = _report(params, mode, vals, fine.eigenvectors, op.shift, raw=fine.eigenvalues, extrapolated=True)
    rep.negative_count = int(np.sum(vals < -zero_tol))
    return rep


def sphere_harmonic_dim(N: int, mode: int) -> int:
    top = math.comb(mode + N - 1, N - 1)
    return top - (math.comb(mode + N - 3, N - 1) if mode >= 2 else 0)


def sturm_count(diag, off, sigma: float, weight=None) -> int:
    """Number of eigenvalues below sigma of the pencil (A, B), B = diag(weight) or I.

    Counts negative pivots of the LDL^T factorization of A - sigma B (Sylvester inertia).
    """
    d = np.asarray(diag, dtype=float) - sigma * (1.0 if weight is None else np.asarray(weight, dtype=float))
    e2 = (np.asarray(off, dtype=float) ** 2).tolist()
    d = d.tolist()
    tiny = 1e-300
    count = 0
    q = d[0]
    if q < 0:
        count += 1
    for k in range(1, len(d)):
        if q == 0.0:
            q = tiny
        q = d[k] - e2[k - 1] / q
        if q < 0:
            count += 1
    return count


@dataclass
class MorseReport:
    counts: dict
    multiplicities: dict
    lowest: dict
    index: int


def morse_index(params: CknParams, grid: CylinderGrid, l_max: int = 4, zero_tol: float = 1e-6,
                extrapolate: bool = True) -> MorseReport:
    """Negative eigenvalue counts per angular mode (marginal ones within zero_tol excluded)."""
    if params.region in (Region.INVALID, Region.BOUNDARY_HARDY):
        raise DomainError(f"no Morse index for region {params.region.value}")
    counts, mults, lowest = {}, {}, {}
    for mode in range(l_max + 1):
        op = assemble(params, grid, mode)
        diag, off = op.interior_tridiagonal()
        k = min(sturm_count(diag, off, 0.0) + 2, grid.n - 2)
        rep = spectrum(params, grid, mode, k=k, extrapolate=extrapolate, zero_tol=zero_tol)
        counts[mode] = int(np.sum(rep.eigenvalues < -zero_tol))
        mults[mode] = sphere_harmonic_dim(params.N, mode)
        lowest[mode] = float(rep.eigenvalues[0])
    return MorseReport(counts, mults, lowest, sum(counts[m] * mults[m] for m in counts))


def weighted_eigenvalue(params: CknParams, grid: CylinderGrid, index: int, rtol: float = 1e-10) -> float:
    """index-th eigenvalue (from 0) of G v = kappa * Psi^(p-1) v on the interior nodes.

    kappa_0 = 1 (Psi), kappa_1 = p (Psi'); kappa_2 > p is the coercivity constant
    on the H^1-orthogonal complement of {Psi, Psi'}. Found by Sturm bisection.
    """
    op = assemble(params, grid, 0)
    h = grid.h
    diag = 2.0 / h ** 2 + params.c ** 2 + np.zeros(grid.n - 2)
    off = np.full(grid.n - 3, -1.0 / h ** 2)
    weight = op.potential[1:-1] / params.p
    lo, hi = 0.0, 1.0
    while sturm_count(diag, off, hi, weight) <= index:
        lo, hi = hi, 2.0 * hi
        if hi > 1e8:
            raise ConvergenceError("weighted eigenvalue bracket failed")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if sturm_count(diag, off, mid, weight) <= index:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def weighted_eigenvalue_oracle(params: CknParams, index: int) -> float:
    """(p-1)^2/(2(p+1)) (n + 2/(p-1)) (n + (p+1)/(p-1)) for the sech^2 weight."""
    p = params.p
    return (p - 1.0) ** 2 / (2.0 * (p + 1.0)) * (index + 2.0 / (p - 1.0)) * (index + (p + 1.0) / (p - 1.0))


def coercivity_margin(params: CknParams, grid: CylinderGrid) -> float:
    """kappa_2 - p: positive iff ||v||^2 > p int Psi^(p-1) v^2 off span{Psi, Psi'}."""
    return weighted_eigenvalue(params, grid, 2) - params.p


def lowest_mode_eigenvalue(params: CknParams, mode: int, T: float, n: int, extrapolate: bool = True) -> float:
    grid = CylinderGrid(params, T, n)
    return float(spectrum(params, grid, mode, k=1, extrapolate=extrapolate).eigenvalues[0])


def find_symmetry_breaking_b(N: int, a: float, tol: float = 1e-6, T: float = 60.0, n: int = 12001,
                             zero_tol: float = 1e-6, scan: int = 20) -> float:
    """Bisect b in (a, a+1) on the sign of the lowest mode-1 eigenvalue."""
    a_c = (N - 2) / 2.0
    if a >= a_c:
        raise BracketError(f"no admissible b for a = {a} >= a_c = {a_c}")

    def mu(b):
        return lowest_mode_eigenvalue(make_params(N, a, b), 1, T, n)

    lo = None
    hi = None
    for k in range(scan):
        b = a + k / scan
        val = mu(b)
        if val < -zero_tol:
            lo = b
        elif lo is not None:
            hi = b
            break
    if lo is None or hi is None:
        raise BracketError(f"lowest mode-1 eigenvalue has no sign change in b for (N={N}, a={a})")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mu(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
