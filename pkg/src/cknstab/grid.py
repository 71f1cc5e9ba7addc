"""Truncated cylinder grid, mode functions and all quadrature.

The discretization is lumped P1: nodal values, trapezoid (lumped) mass and the
standard three-point stiffness. It is second order; higher accuracy where needed
comes from Richardson extrapolation over an (h, 2h) pair sharing the domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solveh_banded

from .errors import GridMismatch, GridTooNarrow, ModeError
from .params import CknParams

DEFAULT_T = 60.0
DEFAULT_N = 12001
TAIL_TOL = 1e-12


def sphere_area(N: int) -> float:
    """Surface measure of the unit (N-1)-sphere."""
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


@dataclass(frozen=True, eq=False)
class CylinderGrid:
    params: CknParams
    T: float = DEFAULT_T
    n: int = DEFAULT_N
    t: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 3 or not self.T > 0:
            raise ValueError(f"grid needs n >= 3 and T > 0, got n={self.n}, T={self.T}")
        t = -self.T + self.h * np.arange(self.n)
        t[-1] = self.T
        w = np.full(self.n, self.h)
        w[0] = w[-1] = self.h / 2.0
        t.flags.writeable = False
        w.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "weights", w)

    @property
    def h(self) -> float:
        return 2.0 * self.T / (self.n - 1)

    @property
    def omega(self) -> float:
        return sphere_area(self.params.N)

    def angular_eigenvalue(self, mode: int) -> float:
        return mode * (mode + self.params.N - 2.0)

    def coarsen(self) -> "CylinderGrid":
        """Same domain with twice the spacing (requires odd n)."""
        if self.n % 2 == 0:
            raise ValueError("coarsening needs an odd node count")
        return CylinderGrid(self.params, self.T, (self.n - 1) // 2 + 1)

    def refine(self) -> "CylinderGrid":
        return CylinderGrid(self.params, self.T, 2 * (self.n - 1) + 1)

    def same_as(self, other: "CylinderGrid") -> bool:
        return self is other or (self.params == other.params and self.T == other.T and self.n == other.n)

    def check_tail(self, centers) -> None:
        s_max = max(abs(s) for s in centers)
        if math.exp(-self.params.c * (self.T - s_max)) >= TAIL_TOL:
            raise GridTooNarrow(
                f"tail exp(-c(T - max|s|)) not below {TAIL_TOL:g} for T={self.T}, max|s|={s_max}"
            )

    # Gram matrix G = omega (K + (c^2 + lambda_l) M) and its pieces.
    def stiffness_apply(self, v: np.ndarray) -> np.ndarray:
        flux = np.diff(v) / self.h
        return np.concatenate(([0.0], flux)) - np.concatenate((flux, [0.0]))

    def gram_apply(self, v: np.ndarray, mode: int = 0) -> np.ndarray:
        shift = self.params.c ** 2 + self.angular_eigenvalue(mode)
        return self.omega * (self.stiffness_apply(v) + shift * self.weights * v)

    def interior_gram_banded(self, mode: int = 0) -> np.ndarray:
        """Upper banded storage of G restricted to interior nodes (Dirichlet)."""
        m = self.n - 2
        shift = self.params.c ** 2 + self.angular_eigenvalue(mode)
        ab = np.empty((2, m))
        ab[0, 0] = 0.0
        ab[0, 1:] = -self.omega / self.h
        ab[1, :] = self.omega * (2.0 / self.h + shift * self.h)
        return ab

    def solve_interior_gram(self, rhs: np.ndarray, mode: int = 0) -> np.ndarray:
        return solveh_banded(self.interior_gram_banded(mode), rhs)


def experiment_grid(params: CknParams, centers=(0.0,), h: float = 0.01, margin: float = 40.0) -> CylinderGrid:
    """Grid with c T >= margin + c max|s| and an odd node count divisible for two coarsenings."""
    s_max = max(abs(s) for s in centers)
    T_min = s_max + margin / params.c
    half = int(math.ceil(T_min / h / 4.0 - 1e-9)) * 4
    return CylinderGrid(params, half * h, 2 * half + 1)


@dataclass(frozen=True, eq=False)
class ModeFunction:
    """Samples of one angular coefficient v_l(t).

    Radial functions may carry an exact part: samples = sum_j coefs_j Psi_{centers_j}
    + remainder. The exact part lets callers use the weak identity
    -Psi'' + c^2 Psi = Psi^p instead of differencing the samples of Psi.
    """

    grid: CylinderGrid
    mode: int
    samples: np.ndarray
    centers: tuple = ()
    coefs: tuple = ()
    remainder: np.ndarray | None = None

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        if self.mode < 0:
            raise ValueError("mode must be nonnegative")
        object.__setattr__(self, "samples", s)
        if self.centers and self.mode != 0:
            raise ModeError("exact bubble parts are radial")

    @classmethod
    def bubble_sum(cls, grid, centers, bubble_samples, coefs=None, remainder=None):
        centers = tuple(float(s) for s in centers)
        coefs = tuple(float(a) for a in coefs) if coefs is not None else (1.0,) * len(centers)
        rem = np.zeros(grid.n) if remainder is None else np.asarray(remainder, dtype=float)
        return cls(grid, 0, np.asarray(bubble_samples) + rem, centers, coefs, rem)

    @property
    def has_bubbles(self) -> bool:
        return bool(self.centers)

    @property
    def lam(self) -> float:
        return self.grid.angular_eigenvalue(self.mode)

    def rest(self) -> np.ndarray:
        """The sampled part that is not an exact bubble."""
        return self.remainder if self.has_bubbles else self.samples

    def scaled(self, factor: float) -> "ModeFunction":
        if not self.has_bubbles:
            return ModeFunction(self.grid, self.mode, factor * self.samples)
        return ModeFunction(self.grid, 0, factor * self.samples, self.centers,
                            tuple(factor * a for a in self.coefs), factor * self.remainder)

    def plus_samples(self, extra) -> "ModeFunction":
        """Add a plain sampled function to the non-exact part."""
        extra = np.asarray(extra, dtype=float)
        if not self.has_bubbles:
            return ModeFunction(self.grid, self.mode, self.samples + extra)
        return ModeFunction(self.grid, 0, self.samples + extra, self.centers, self.coefs,
                            self.remainder + extra)

    def plain(self) -> "ModeFunction":
        return ModeFunction(self.grid, self.mode, self.samples)


def _check_pair(u: ModeFunction, v: ModeFunction):
    if not u.grid.same_as(v.grid):
        raise GridMismatch("functions live on different grids")
    if u.mode != v.mode:
        raise GridMismatch(f"mode mismatch: {u.mode} vs {v.mode}")


def h1_inner(u: ModeFunction, v: ModeFunction) -> float:
    """omega * int (u'v' + (c^2 + lambda_l) u v) dt with cell differences and trapezoid mass."""
    _check_pair(u, v)
    return float(u.samples @ u.grid.gram_apply(v.samples, u.mode))


def h1_norm(v: ModeFunction) -> float:
    return math.sqrt(max(h1_inner(v, v), 0.0))


def lp_norm(v: ModeFunction, q: float) -> float:
    if v.mode != 0:
        raise ModeError("L^q norms are only defined for the radial mode")
    if q < 1:
        raise ValueError("q must be >= 1")
    g = v.grid
    return float((g.omega * np.sum(g.weights * np.abs(v.samples) ** q)) ** (1.0 / q))


def load_interior(f_load: ModeFunction) -> np.ndarray:
    return f_load.samples[1:-1]


def riesz_representative(f_load: ModeFunction) -> ModeFunction:
    """Solve G w = f on interior nodes with w = 0 at +-T."""
    g = f_load.grid
    w = np.zeros(g.n)
    w[1:-1] = g.solve_interior_gram(load_interior(f_load), f_load.mode)
    return ModeFunction(g, f_load.mode, w)


def h_minus1_norm(f_load: ModeFunction) -> float:
    """Dual norm sqrt(f^T G^{-1} f) of a weak-form load vector."""
    f = load_interior(f_load)
    if not np.any(f):
        return 0.0
    w = f_load.grid.solve_interior_gram(f, f_load.mode)
    return math.sqrt(max(float(f @ w), 0.0))


def pairing(f_load: ModeFunction, w: ModeFunction) -> float:
    """Duality pairing <f, w> over interior nodes."""
    _check_pair(f_load, w)
    return float(load_interior(f_load) @ w.samples[1:-1])


def d12a_inner(grid: CylinderGrid, u_values, v_values) -> float:
    """Weighted Dirichlet inner product of radial u, v sampled at r = exp(-t).

    Computed on the cylinder through the Emden-Fowler isometry.
    """
    c = grid.params.c
    scale = np.exp(-c * grid.t)
    uu = ModeFunction(grid, 0, scale * np.asarray(u_values, dtype=float))
    vv = ModeFunction(grid, 0, scale * np.asarray(v_values, dtype=float))
    return h1_inner(uu, vv)


def d12a_inner_quadrature(params: CknParams, du, dv, log_r_min=-60.0, log_r_max=60.0, n=200001) -> float:
    """Direct radial quadrature of omega * int r^(-2a) u'(r) v'(r) r^(N-1) dr.

    du, dv are callables returning derivatives in r; integration runs in log r.
    Independent of the cylinder path and used to test it.
    """
    x = np.linspace(log_r_min, log_r_max, n)
    r = np.exp(x)
    integrand = r ** (params.N - 2.0 * params.a) * du(r) * dv(r)
    return sphere_area(params.N) * float(np.trapezoid(integrand, x))


def weighted_lq_quadrature(params: CknParams, u, q: float, log_r_min=-60.0, log_r_max=60.0, n=200001) -> float:
    """Direct radial quadrature of (omega int r^(-bq) |u|^q r^(N-1) dr)^(1/q)."""
    x = np.linspace(log_r_min, log_r_max, n)
    r = np.exp(x)
    integrand = r ** (params.N - params.b * q) * np.abs(u(r)) ** q
    return float((sphere_area(params.N) * np.trapezoid(integrand, x)) ** (1.0 / q))


def richardson(fine, coarse, order: float = 2.0):
    """Extrapolate values computed at spacings h (fine) and 2h (coarse)."""
    fine = np.asarray(fine, dtype=float)
    coarse = np.asarray(coarse, dtype=float)
    return fine + (fine - coarse) / (2.0 ** order - 1.0)


def observed_order(coarse, mid, fine) -> float:
    """Convergence order from values at spacings 4h, 2h, h."""
    return math.log2(abs((coarse - mid) / (mid - fine)))
