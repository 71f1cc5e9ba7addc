"""Distance to bubble manifolds and the deficit / residual stability experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import linregress

from .errors import DomainError, NoDescent
from .functionals import deficit, exact_part, residual_load, second_variation_ratio
from .grid import CylinderGrid, ModeFunction, experiment_grid, h1_norm, h_minus1_norm
from .params import CknParams, radial_experiments_allowed
from .profiles import eval_psi, eval_psi_prime, profile_mode
from .reduction import branch, counterexample_state, fit_window

LM_LAMBDA0 = 1e-3
STEP_TOL = 1e-10
GRAD_TOL = 1e-12
TIE_TOL = 1e-10
COALESCE_TOL = 1e-6


@dataclass
class DistanceResult:
    centers: np.ndarray
    coefs: np.ndarray | None
    distance: float
    converged: bool
    multistart_count: int
    gradient_defect: float = 0.0
    coalesced: bool = False


def _approximant(params, t, centers, coefs):
    out = np.zeros_like(t)
    for s, a in zip(centers, coefs):
        out += a * eval_psi(params, s, t)
    return out


def _residual(v: ModeFunction, centers, coefs):
    """v - sum a_j Psi_{s_j}; the exact part of v is subtracted analytically first."""
    params, t = v.grid.params, v.grid.t
    if v.has_bubbles:
        return v.rest() + exact_part(v) - _approximant(params, t, centers, coefs)
    return v.samples - _approximant(params, t, centers, coefs)


def _tangents(params, t, centers, coefs, with_scalar):
    """Columns d(residual)/d(theta): +a_j Psi'_{s_j} for shifts, -Psi_{s_j} for scalars."""
    cols = [a * eval_psi_prime(params, s, t) for s, a in zip(centers, coefs)]
    if with_scalar:
        cols += [-eval_psi(params, s, t) for s in centers]
    return np.array(cols)


def _lm(v: ModeFunction, centers, coefs, with_scalar, max_iter=200):
    g = v.grid
    params, t = g.params, g.t
    nu = len(centers)
    theta = np.concatenate((centers, coefs if with_scalar else []))

    def unpack(th):
        return th[:nu], (th[nu:] if with_scalar else np.ones(nu))

    def cost(th):
        r = _residual(v, *unpack(th))
        return float(r @ g.gram_apply(r, 0)), r

    f, r = cost(theta)
    lam = LM_LAMBDA0
    converged = False
    for _ in range(max_iter):
        jac = _tangents(params, t, *unpack(theta), with_scalar)
        gj = np.array([g.gram_apply(col, 0) for col in jac])
        H = gj @ jac.T
        grad = gj @ r
        if np.max(np.abs(grad)) < GRAD_TOL:
            converged = True
            break
        improved = False
        for _ in range(30):
            step = -np.linalg.solve(H + lam * np.diag(np.diag(H)), grad)
            f_new, r_new = cost(theta + step)
            if f_new <= f:
                theta, f, r = theta + step, f_new, r_new
                lam = max(lam / 10.0, 1e-12)
                improved = True
                break
            lam *= 10.0
        if not improved or np.max(np.abs(step)) < STEP_TOL:
            converged = True
            break
    centers, coefs = unpack(theta)
    order = np.argsort(centers)
    return centers[order], coefs[order], max(f, 0.0), converged


def _gradient_defect(v, centers, coefs, with_scalar):
    """Largest normalized H^1 product of the residual with a tangent generator."""
    g = v.grid
    r = _residual(v, centers, coefs)
    r_norm = math.sqrt(max(float(r @ g.gram_apply(r, 0)), 0.0))
    if r_norm == 0.0:
        return 0.0
    worst = 0.0
    for col in _tangents(g.params, g.t, centers, coefs, with_scalar):
        col_norm = math.sqrt(float(col @ g.gram_apply(col, 0)))
        worst = max(worst, abs(float(col @ g.gram_apply(r, 0))) / (r_norm * col_norm))
    return worst


def start_centers(v: ModeFunction, nu: int) -> np.ndarray:
    """The nu highest local maxima of v, kept at least one profile width apart."""
    x = v.samples
    t = v.grid.t
    width = 1.0 / v.grid.params.alpha
    peaks = np.flatnonzero((x[1:-1] >= x[:-2]) & (x[1:-1] >= x[2:])) + 1
    peaks = peaks[np.argsort(-x[peaks], kind="stable")]
    chosen = []
    for k in peaks:
        if all(abs(t[k] - t[j]) >= width for j in chosen):
            chosen.append(k)
        if len(chosen) == nu:
            break
    centers = [t[k] for k in chosen]
    if not centers:
        centers = [t[int(np.argmax(np.abs(x)))]]
    while len(centers) < nu:
        centers.append(centers[-1] + width)
    return np.sort(np.array(centers, dtype=float))


def distance_to_manifold(v: ModeFunction, nu: int = 1, with_scalar: bool = False,
                         starts=None) -> DistanceResult:
    """min over centers (and scalars) of ||v - sum_j a_j Psi_{s_j}||_{H^1}."""
    if v.mode != 0:
        raise DomainError("distances to bubble manifolds are radial")
    params = v.grid.params
    if starts is None:
        base = start_centers(v, nu)
        starts = [base]
        for j in range(nu):
            for delta in (2.0, -2.0):
                shifted = base.copy()
                shifted[j] += delta
                starts.append(shifted)
    peak = eval_psi(params, 0.0, 0.0)
    results = []
    for s0 in starts:
        s0 = np.sort(np.asarray(s0, dtype=float))
        a0 = np.interp(s0, v.grid.t, v.samples) / peak if with_scalar else np.ones(nu)
        try:
            out = _lm(v, s0, a0, with_scalar)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(out[0])) and math.isfinite(out[2]):
            results.append(out)
    if not results:
        raise NoDescent("every start of the distance minimization failed")
    best_f = min(r[2] for r in results)
    ties = [r for r in results if r[2] <= best_f + TIE_TOL * max(best_f, 1e-300) + 1e-300]
    ties.sort(key=lambda r: tuple(r[0]))
    centers, coefs, f, converged = ties[0]
    coalesced = nu > 1 and bool(np.min(np.diff(centers)) < COALESCE_TOL)
    return DistanceResult(centers, coefs if with_scalar else None, math.sqrt(f), converged, len(starts),
                          _gradient_defect(v, centers, coefs, with_scalar), coalesced)


@dataclass
class StabilityReport:
    experiment: str
    params: CknParams
    x: np.ndarray
    gamma: np.ndarray
    distance: np.ndarray
    deficit: np.ndarray
    exponent: float
    stderr: float
    window: tuple
    expected: float
    passed: bool
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        p = self.params
        sweep = [
            {"x": float(x), "gamma": float(g), "distance": float(d), "deficit": float(e)}
            for x, g, d, e in zip(self.x, self.gamma, self.distance, self.deficit)
        ]
        return {
            "experiment": self.experiment,
            "params": {"N": p.N, "a": p.a, "b": p.b, "p": p.p},
            "sweep": sweep,
            "fit": {"exponent": self.exponent, "stderr": self.stderr, "window": list(self.window)},
            "pass": bool(self.passed),
        }


def _ratio(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(values.max() / values.min())


def _require_radial(params: CknParams):
    params.require_superlinear()
    if not radial_experiments_allowed(params):
        raise DomainError(f"stability experiments need a stable radial extremal, region is {params.region.value}")


def smooth_bump(x):
    """exp(1 - 1/(1 - x^2)) on |x| < 1, zero outside; equals 1 at x = 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


def default_direction(grid: CylinderGrid, width: float = 5.0) -> np.ndarray:
    """Positive, even, compactly supported; orthogonal to Psi' by parity."""
    return smooth_bump(grid.t / width)


def one_bubble_stability(params: CknParams, eps_list=None, phi_dir=None, grid: CylinderGrid | None = None,
                         slope_tol: float = 0.03, ratio_max: float = 3.0) -> StabilityReport:
    """v_eps = Psi + eps phi: residual dual norm against distance to {Psi_s}."""
    _require_radial(params)
    eps_list = np.logspace(-4, -2, 9) if eps_list is None else np.asarray(eps_list, dtype=float)
    grid = experiment_grid(params) if grid is None else grid
    phi = default_direction(grid) if phi_dir is None else np.asarray(phi_dir, dtype=float)
    psi = profile_mode(grid)
    gam, dist, defs = [], [], []
    for eps in eps_list:
        v = psi.plus_samples(eps * phi)
        gam.append(h_minus1_norm(residual_load(v)))
        dist.append(distance_to_manifold(v, 1).distance)
        defs.append(deficit(v).deficit)
    gam, dist, defs = map(np.asarray, (gam, dist, defs))
    pos = eps_list > 0
    fit = linregress(np.log(gam[pos]), np.log(dist[pos]))
    ratio = _ratio(dist[pos] / gam[pos])
    # Leading-order distance: eps times the part of phi orthogonal to Psi'.
    dpsi = eval_psi_prime(params, 0.0, grid.t)
    g_phi = grid.gram_apply(phi, 0)
    proj = float(dpsi @ g_phi) / float(dpsi @ grid.gram_apply(dpsi, 0))
    resid = phi - proj * dpsi
    predicted = math.sqrt(float(resid @ grid.gram_apply(resid, 0)))
    passed = abs(fit.slope - 1.0) <= slope_tol and ratio < ratio_max
    extras = {"ratio": ratio, "predicted_distance_per_eps": predicted,
              "distance_per_eps": (dist[pos] / eps_list[pos]).tolist()}
    return StabilityReport("stability-one", params, eps_list, gam, dist, defs, float(fit.slope),
                           float(fit.stderr), (float(eps_list[pos].min()), float(eps_list[pos].max())),
                           1.0, passed, extras)


def multi_bubble_stability(params: CknParams, R_list, h: float = 0.01, slope_tol: float = 0.05,
                           ratio_max: float = 3.0) -> StabilityReport:
    """Counterexample sweep: d_* against Gamma = ||f||_{H^-1} for nu = 2."""
    _require_radial(params)
    R = np.asarray(sorted(R_list), dtype=float)
    gam, dist, defs, Q, damped, vminus, energies, ident, mults = [], [], [], [], [], [], [], [], []
    for r in R:
        state = counterexample_state(params, r, h=h)
        v = state.v
        gam.append(state.gamma)
        dist.append(distance_to_manifold(v, 2, starts=[np.array([-r / 2.0, r / 2.0])]).distance)
        rec = deficit(v)
        defs.append(rec.deficit)
        energies.append(rec.h1_norm_sq)
        Q.append(state.solution.config.Q)
        damped.append(state.solution.damped)
        vminus.append(state.v_minus_norm)
        ident.append(state.residual_identity_defect)
        mults.append(state.solution.multiplier_sum)
    gam, dist, defs, Q, damped = map(np.asarray, (gam, dist, defs, Q, damped))
    keep = fit_window(R, damped)
    br = branch(params)
    fit = linregress(np.log(gam[keep]), np.log(dist[keep]))
    stat = dist / (gam * np.sqrt(np.abs(np.log(gam))))
    if br == "log":
        expected = 1.0
        passed = _ratio(stat[keep]) < ratio_max
    else:
        expected = 1.0 if br == "linear" else params.p / 2.0
        passed = abs(fit.slope - expected) <= slope_tol
    extras = {
        "Q": Q.tolist(), "gamma_over_Q_ratio": _ratio(gam / Q), "log_statistic": stat.tolist(),
        "log_statistic_ratio": _ratio(stat[keep]), "v_minus_norm": vminus, "energy": energies,
        "residual_identity_defect": ident, "multiplier_sum": mults, "branch": br,
    }
    return StabilityReport("stability-multi", params, R, gam, dist, defs, float(fit.slope), float(fit.stderr),
                           (float(R[keep].min()), float(R[keep].max())), expected, passed, extras)


BASIS_SIZE = 10


def bump_basis(grid: CylinderGrid, s: float = 0.0, width: float = 5.0) -> np.ndarray:
    """Five even and five odd smooth bumps supported in |t - s| <= width."""
    x = (grid.t - s) / width
    env = smooth_bump(x)
    even = [env * np.cos(k * math.pi * x) for k in range(5)]
    odd = [env * np.sin(k * math.pi * x) for k in range(1, 6)]
    return np.array(even + odd)


def perturbation_ensemble(params: CknParams, grid: CylinderGrid, count: int, seed: int = 0,
                          s: float = 0.0) -> np.ndarray:
    """Unit-H^1 directions orthogonal to Psi_s and Psi'_s (weak-identity pairing).

    The coefficient matrix is drawn row by row, so an ensemble of size 2k starts
    with the ensemble of size k.
    """
    coef = np.random.default_rng(seed).standard_normal((count, BASIS_SIZE))
    basis = bump_basis(grid, s)
    p = params.p
    w = grid.omega * grid.weights
    psi = eval_psi(params, s, grid.t)
    dpsi = eval_psi_prime(params, s, grid.t)
    # H^1 products with the exact profiles: <Psi, f> = int Psi^p f, <Psi', f> = p int Psi^(p-1) Psi' f.
    duals = np.array([w * psi ** p, p * w * psi ** (p - 1.0) * dpsi])
    gram = duals @ np.array([psi, dpsi]).T
    out = []
    for row in coef:
        phi = row @ basis
        phi = phi - np.linalg.solve(gram, duals @ phi) @ np.array([psi, dpsi])
        out.append(phi / math.sqrt(float(phi @ grid.gram_apply(phi, 0))))
    return np.array(out)


@dataclass
class DeficitLawReport:
    params: CknParams
    eps: np.ndarray
    ratios: np.ndarray
    predicted: np.ndarray
    min_ratio: float
    min_ratio_doubled: float
    oracle_rel_err: float
    scaling_change: float
    passed: bool
    deficits: np.ndarray = None
    distances: np.ndarray = None

    def as_dict(self) -> dict:
        p = self.params
        sweep = []
        for k, eps in enumerate(self.eps):
            sweep.append({"x": float(eps), "gamma": float("nan"),
                          "distance": float(np.min(self.distances[:, k])),
                          "deficit": float(np.min(self.deficits[:, k]))})
        return {
            "experiment": "deficit-law",
            "params": {"N": p.N, "a": p.a, "b": p.b, "p": p.p},
            "sweep": sweep,
            "fit": {"exponent": 2.0, "stderr": 0.0, "window": [float(self.eps.min()), float(self.eps.max())]},
            "pass": bool(self.passed),
            "min_ratio": self.min_ratio,
            "min_ratio_doubled": self.min_ratio_doubled,
            "oracle_rel_err": self.oracle_rel_err,
        }


def _deficit_ratios(params, grid, dirs, eps_list, c0=1.0, s=0.0, d2_floor=1e-10):
    psi = ModeFunction.bubble_sum(grid, (s,), c0 * eval_psi(params, s, grid.t), coefs=(c0,))
    ratios = np.full((len(dirs), len(eps_list)), np.nan)
    defs = np.zeros_like(ratios)
    dists = np.zeros_like(ratios)
    for i, phi in enumerate(dirs):
        for k, eps in enumerate(eps_list):
            u = psi.plus_samples(c0 * eps * phi)
            e = deficit(u).deficit
            d = distance_to_manifold(u, 1, with_scalar=True, starts=[np.array([s])]).distance
            defs[i, k], dists[i, k] = e, d
            if d * d > d2_floor:
                ratios[i, k] = e / (d * d)
    return ratios, defs, dists


def deficit_vs_distance(params: CknParams, count: int = 10, eps_list=None, seed: int = 0,
                        grid: CylinderGrid | None = None, oracle_eps: float = 1e-3,
                        oracle_tol: float = 0.05) -> DeficitLawReport:
    """e(u)/d(u)^2 over u = Psi + eps phi_k, with the ensemble doubled as a stability check."""
    _require_radial(params)
    grid = experiment_grid(params) if grid is None else grid
    eps_list = np.logspace(-4, -1, 7) if eps_list is None else np.asarray(eps_list, dtype=float)
    if not np.any(np.isclose(eps_list, oracle_eps)):
        eps_list = np.sort(np.append(eps_list, oracle_eps))
    k_or = int(np.argmin(np.abs(eps_list - oracle_eps)))
    dirs = perturbation_ensemble(params, grid, 2 * count, seed)
    ratios, defs, dists = _deficit_ratios(params, grid, dirs, eps_list)
    predicted = np.array([second_variation_ratio(params, grid, phi) for phi in dirs])
    min_half = float(np.nanmin(ratios[:count]))
    min_full = float(np.nanmin(ratios))
    rel = float(np.max(np.abs(ratios[:, k_or] - predicted) / predicted))
    doubled, _, _ = _deficit_ratios(params, grid, dirs[:1], [oracle_eps], c0=2.0)
    scaling = float(abs(doubled[0, 0] - ratios[0, k_or]) / ratios[0, k_or])
    passed = min_half > 0 and min_full > 0 and 0.5 <= min_half / min_full <= 2.0 and rel <= oracle_tol
    return DeficitLawReport(params, eps_list, ratios, predicted, min_half, min_full, rel, scaling, passed,
                            defs, dists)
