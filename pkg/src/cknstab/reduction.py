"""Lyapunov-Schmidt step solved directly: corrector phi and multipliers c_j.

For v = sum_j Psi_{s_j} + phi the discrete system is

    G phi - M [ |b+phi|^(p-1)(b+phi) - sum_j Psi_j^p ] - sum_j c_j M Psi_j^(p-1) Psi_j' = 0,
    <Psi_j', phi>_{H^1} = 0,   j = 1..nu,

with b = sum_j Psi_j, M the lumped mass times omega and Dirichlet data at +-T.
The linear image of each exact bubble is Psi_j^p (its equation), so phi is driven
only by the interaction error E. The H^1 pairing with Psi_j' uses the same weak
identity, <Psi_j', phi> = p int Psi_j^(p-1) Psi_j' phi, which makes the bordered
system symmetric up to the factor p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.stats import linregress

from .bubbles import BubbleConfig, bubble_samples, symmetric_pair
from .errors import NonConvergence, SingularBordered
from .functionals import energy_norm_sq, residual_load
from .grid import CylinderGrid, ModeFunction, experiment_grid, h1_norm, h_minus1_norm
from .params import CknParams
from .profiles import bubble_power_defect, eval_psi, eval_psi_prime, power_increment

JACOBIAN_CUTOFF = 1e-14
DAMPING_FLOOR = 2.0 ** -10


@dataclass
class ReductionSolution:
    config: BubbleConfig
    grid: CylinderGrid = field(repr=False)
    phi: ModeFunction = field(repr=False)
    multipliers: np.ndarray
    newton_residual: float
    orthogonality_defect: float
    iterations: int
    damped: bool
    phi_norm: float

    @property
    def multiplier_sum(self) -> float:
        return float(np.sum(np.abs(self.multipliers)))

    def state(self) -> ModeFunction:
        """v = sum Psi_j + phi with the exact part tagged."""
        return ModeFunction.bubble_sum(self.grid, self.config.centers,
                                       bubble_samples(self.config, self.grid), remainder=self.phi.samples)

    def multiplier_load(self) -> ModeFunction:
        g = self.grid
        load = np.zeros(g.n)
        for c_j, col in zip(self.multipliers, _multiplier_columns(self.config, g)):
            load[1:-1] += c_j * col
        return ModeFunction(g, 0, load)


def _multiplier_columns(config: BubbleConfig, grid: CylinderGrid):
    """Interior load vectors omega M Psi_j^(p-1) Psi_j'."""
    params = config.params
    t = grid.t[1:-1]
    w = grid.omega * grid.h
    return [w * eval_psi(params, s, t) ** (params.p - 1.0) * eval_psi_prime(params, s, t)
            for s in config.centers]


class _BorderedProblem:
    def __init__(self, config: BubbleConfig, grid: CylinderGrid):
        self.config = config
        self.grid = grid
        params = config.params
        self.p = params.p
        self.t = grid.t[1:-1]
        self.m = grid.n - 2
        self.mass = grid.omega * grid.h
        self.base = bubble_samples(config, grid)[1:-1]
        self.E = bubble_power_defect(params, self.t, config.centers)
        self.B = np.array(_multiplier_columns(config, grid))
        gram_b = self.B @ self.B.T
        scale = np.max(np.abs(np.diag(gram_b)))
        if np.linalg.matrix_rank(gram_b, tol=1e-12 * scale) < config.nu:
            raise SingularBordered("constraint directions are linearly dependent (coincident centers)")
        ab = grid.interior_gram_banded(0)
        self.g_diag = ab[1].copy()
        self.g_off = ab[0, 1:].copy()

    def gram(self, phi):
        out = self.g_diag * phi
        out[:-1] += self.g_off * phi[1:]
        out[1:] += self.g_off * phi[:-1]
        return out

    def equation(self, phi, mult):
        return (self.gram(phi) - self.mass * (power_increment(self.base, phi, self.p) + self.E)
                - mult @ self.B)

    def constraints(self, phi):
        return self.p * (self.B @ phi)

    def jacobian_diagonal(self, phi):
        w = self.base + phi
        aw = np.abs(w)
        deriv = self.p * aw ** (self.p - 1.0)
        deriv[aw < JACOBIAN_CUTOFF * np.max(aw)] = 0.0
        return self.g_diag - self.mass * deriv

    def bordered_apply(self, diag, x, c):
        jx = diag * x
        jx[:-1] += self.g_off * x[1:]
        jx[1:] += self.g_off * x[:-1]
        return jx - c @ self.B, self.p * (self.B @ x)

    def bordered_solve(self, diag, r1, r2, refine: int = 1):
        """Solve [J, -B; p B^T, 0][x; c] = [r1; r2] by block elimination.

        One banded LU of the tridiagonal J serves all nu + 1 right-hand sides;
        a refinement pass absorbs the rounding amplified by near-null directions of J.
        """
        ab = np.zeros((3, self.m))
        ab[0, 1:] = self.g_off
        ab[1] = diag
        ab[2, :-1] = self.g_off
        x = np.zeros(self.m)
        c = np.zeros(self.config.nu)
        res1, res2 = r1, r2
        for _ in range(refine + 1):
            sol = solve_banded((1, 1), ab, np.column_stack((res1, self.B.T)))
            y, X = sol[:, 0], sol[:, 1:]
            schur = self.p * (self.B @ X)
            dc = np.linalg.solve(schur, res2 - self.p * (self.B @ y))
            x = x + y + X @ dc
            c = c + dc
            a1, a2 = self.bordered_apply(diag, x, c)
            res1, res2 = r1 - a1, r2 - a2
        return x, c

    def merit(self, phi, mult):
        res = self.equation(phi, mult)
        dual = math.sqrt(max(float(res @ self.grid.solve_interior_gram(res)), 0.0))
        cons = self.constraints(phi)
        norms = np.sqrt(self.p * np.einsum("ij,ij->i", self.B, self.B) / self.mass)
        return dual, float(np.max(np.abs(cons) / norms))


def solve_projected(config: BubbleConfig, grid: CylinderGrid | None = None, tol: float = 1e-10,
                    max_iter: int = 50, h: float = 0.01) -> ReductionSolution:
    """Damped Newton on the bordered system, starting from phi = 0."""
    if config.nu < 2:
        raise ValueError("the projected problem needs at least two bubbles")
    if grid is None:
        grid = experiment_grid(config.params, config.centers, h)
    grid.check_tail(config.centers)
    prob = _BorderedProblem(config, grid)
    scale = math.sqrt(energy_norm_sq(ModeFunction.bubble_sum(grid, config.centers, bubble_samples(config, grid))))
    phi = np.zeros(prob.m)
    mult = np.zeros(config.nu)
    dual, cons = prob.merit(phi, mult)
    damped = False
    for it in range(1, max_iter + 1):
        d_phi, d_mult = prob.bordered_solve(prob.jacobian_diagonal(phi), -prob.equation(phi, mult),
                                            -prob.constraints(phi))
        lam = 1.0
        while True:
            trial_phi, trial_mult = phi + lam * d_phi, mult + lam * d_mult
            t_dual, t_cons = prob.merit(trial_phi, trial_mult)
            if t_dual + t_cons < dual + cons or lam <= DAMPING_FLOOR:
                break
            lam *= 0.5
        damped = damped or lam < 1.0
        phi, mult, dual, cons = trial_phi, trial_mult, t_dual, t_cons
        if dual < tol * scale and cons < 1e-10:
            break
    else:
        raise NonConvergence(f"Newton did not converge in {max_iter} iterations (residual {dual:.3e})")
    full = np.zeros(grid.n)
    full[1:-1] = phi
    phi_mf = ModeFunction(grid, 0, full)
    phi_norm = h1_norm(phi_mf)
    ortho = cons * math.sqrt(prob.mass) / phi_norm if phi_norm > 0 else 0.0
    return ReductionSolution(config, grid, phi_mf, mult, dual, ortho, it, damped, phi_norm)


def orthogonality_products(sol: ReductionSolution) -> np.ndarray:
    """<Psi_j', phi>_{H^1} through the weak identity, one entry per bubble."""
    cols = _multiplier_columns(sol.config, sol.grid)
    return np.array([sol.config.params.p * float(col @ sol.phi.samples[1:-1]) for col in cols])


def bordered_margin(sol: ReductionSolution, iters: int = 40, seed: int = 0) -> float:
    """Smallest singular value of the bordered Jacobian at the solution.

    Rows and columns are scaled by the lumped mass so that the value is an operator
    quantity independent of h. Inverse power iteration on K^T K.
    """
    prob = _BorderedProblem(sol.config, sol.grid)
    diag = prob.jacobian_diagonal(sol.phi.samples[1:-1])
    s_phi = 1.0 / math.sqrt(prob.mass)
    s_c = math.sqrt(prob.mass) / np.linalg.norm(prob.B, axis=1)

    def inv_scaled(v):
        # Scaled system D K D; K is symmetric after dividing constraint rows by -p.
        x, c = prob.bordered_solve(diag, v[:prob.m] / s_phi, -prob.p * v[prob.m:] / s_c)
        return np.concatenate((x / s_phi, c / s_c))

    x = np.random.default_rng(seed).standard_normal(prob.m + sol.config.nu)
    x /= np.linalg.norm(x)
    est = 1.0
    for _ in range(iters):
        y = inv_scaled(x)
        est = np.linalg.norm(y)
        x = y / est
    return 1.0 / est


def branch(params: CknParams, tol: float = 1e-9) -> str:
    if abs(params.p - 2.0) <= tol:
        return "log"
    return "linear" if params.p > 2.0 else "power"


def predicted_exponent(params: CknParams) -> float:
    return 1.0 if params.p >= 2.0 else params.p / 2.0


@dataclass
class ScalingReport:
    params: CknParams
    R: np.ndarray
    Q: np.ndarray
    phi_norm: np.ndarray
    multiplier_sum: np.ndarray
    damped: np.ndarray
    exponent: float
    stderr: float
    window: tuple
    branch: str
    log_statistic: np.ndarray
    margins: np.ndarray = None

    @staticmethod
    def ratio(values) -> float:
        values = np.asarray(values, dtype=float)
        return float(values.max() / values.min())


def fit_window(R, damped):
    """Drop the two smallest-R points when their solves needed damping."""
    order = np.argsort(R)
    keep = np.ones(len(R), dtype=bool)
    if any(damped[i] for i in order[:2]):
        keep[order[:2]] = False
    return keep


def phi_scaling_experiment(params: CknParams, R_list, nu: int = 2, h: float = 0.01,
                           with_margin: bool = False) -> ScalingReport:
    R = np.asarray(sorted(R_list), dtype=float)
    if len(R) < 5:
        raise ValueError("an exponent fit needs at least five separations")
    Q, norms, msum, damped, margins = [], [], [], [], []
    for r in R:
        config = BubbleConfig(params, tuple(r * (j - (nu - 1) / 2.0) for j in range(nu)))
        sol = solve_projected(config, h=h)
        Q.append(config.Q)
        norms.append(sol.phi_norm)
        msum.append(sol.multiplier_sum)
        damped.append(sol.damped)
        margins.append(bordered_margin(sol) if with_margin else np.nan)
    Q, norms, msum, damped = map(np.asarray, (Q, norms, msum, damped))
    keep = fit_window(R, damped)
    fit = linregress(np.log(Q[keep]), np.log(norms[keep]))
    stat = norms / (Q * np.sqrt(params.c * R))
    return ScalingReport(params, R, Q, norms, msum, damped, float(fit.slope), float(fit.stderr),
                         (float(R[keep].min()), float(R[keep].max())), branch(params), stat, np.asarray(margins))


@dataclass
class CounterexampleState:
    solution: ReductionSolution
    v: ModeFunction
    f_load: ModeFunction
    multipliers: np.ndarray
    residual_identity_defect: float
    v_plus: ModeFunction
    v_minus_norm: float

    @property
    def gamma(self) -> float:
        return h_minus1_norm(self.f_load)


def counterexample_state(params: CknParams, R: float, h: float = 0.01, grid: CylinderGrid | None = None,
                         tol: float = 1e-10) -> CounterexampleState:
    """v_R = Psi_{-R/2} + Psi_{R/2} + phi and its residual sum_j c_j Psi_j^(p-1) Psi_j'."""
    config = symmetric_pair(params, R)
    sol = solve_projected(config, grid=grid, h=h, tol=tol)
    v = sol.state()
    f_load = sol.multiplier_load()
    direct = residual_load(v)
    diff = ModeFunction(sol.grid, 0, direct.samples - f_load.samples)
    minus = np.maximum(-v.samples, 0.0)
    v_plus = v.plus_samples(minus)
    return CounterexampleState(sol, v, f_load, sol.multipliers, h_minus1_norm(diff), v_plus,
                               h1_norm(ModeFunction(sol.grid, 0, minus)))
