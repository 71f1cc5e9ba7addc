"""Acceptance checks shared by the test suite and the `verify-all` command.

Each check returns a CriterionResult holding the measured quantities. Quick mode
doubles the grid spacing, shortens sweeps and multiplies accuracy tolerances by 4.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bubbles import interaction
from .functionals import (best_constant_inv, best_constant_inv_quadrature, bubble_energy, deficit,
                          energy_norm_sq, sobolev_constant)
from .grid import (CylinderGrid, ModeFunction, d12a_inner, d12a_inner_quadrature, experiment_grid, lp_norm,
                   observed_order, richardson, weighted_lq_quadrature)
from .params import felli_schneider, make_params
from .profiles import (eval_psi, eval_psi_derivatives, eval_psi_prime, eval_W, eval_W_prime, profile_mode,
                       radii)
from .reduction import phi_scaling_experiment
from .spectral import assemble, eigen_lowest, find_symmetry_breaking_b, morse_index, spectrum
from .stability import deficit_vs_distance, multi_bubble_stability, one_bubble_stability

QUICK_FACTOR = 4.0

SOBOLEV = make_params(3, 0, 0)
POWER = make_params(4, 0, 0.5)       # p = 5/3
CRITICAL = make_params(3, 0, 0.5)    # p = 2
NEGATIVE_A = make_params(3, -1, -0.2)

ISOMETRY_TUPLES = [(3, 0, 0), (3, -1, -0.2), (4, 0, 0.5), (3, 0.2, 0.2), (5, -1, -0.5)]
FS_TUPLES = [(3, -1.0), (4, -0.5), (5, -2.0)]
R_LISTS = {
    "p=5": (SOBOLEV, [16, 20, 24, 28, 32, 36, 40]),
    "p=5/3": (POWER, [16, 20, 24, 28, 32, 36, 40]),
    "p=2": (CRITICAL, [20, 25, 30, 35, 40, 50, 60]),
}


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    measured: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:2d} [{status}] {self.name}"


@dataclass(frozen=True)
class Settings:
    quick: bool = False

    @property
    def h(self) -> float:
        return 0.02 if self.quick else 0.01

    def tol(self, value: float) -> float:
        return value * QUICK_FACTOR if self.quick else value

    def sweep(self, values, minimum: int = 5):
        """Halve a sweep in quick mode while keeping enough points for a fit."""
        values = list(values)
        if not self.quick:
            return values
        keep = max(minimum, (len(values) + 1) // 2)
        return values[-keep:]


def _timed(fn):
    def wrapper(settings: Settings = Settings()):
        start = time.perf_counter()
        result = fn(settings)
        result.seconds = time.perf_counter() - start
        return result
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@_timed
def check_best_constant(settings: Settings) -> CriterionResult:
    """Best constant at the Sobolev point against two independent closed forms."""
    closed = best_constant_inv(SOBOLEV)
    sobolev = sobolev_constant(3)
    alt = 3.0 * math.pi * (math.sqrt(math.pi) / 4.0) ** (2.0 / 3.0)
    quad = best_constant_inv_quadrature(SOBOLEV)
    rel = max(abs(closed - sobolev), abs(closed - alt)) / sobolev
    rel_quad = abs(closed - quad) / sobolev
    tol = settings.tol(1e-8)
    return CriterionResult(1, "best constant equals the sharp Sobolev constant", rel < tol and rel_quad < tol,
                           {"best_const_inv": closed, "sobolev": sobolev, "rel_err": rel, "rel_err_quadrature": rel_quad})


def _isometry(params, h):
    grid = experiment_grid(params, h=h)
    psi = profile_mode(grid)
    h1_exact = energy_norm_sq(psi)
    span = 45.0 / params.c
    d12 = d12a_inner_quadrature(params, lambda r: eval_W_prime(params, r), lambda r: eval_W_prime(params, r),
                                -span, span)
    q = params.p + 1.0
    lq = weighted_lq_quadrature(params, lambda r: eval_W(params, r), q, -span, span)
    w = eval_W(params, radii(grid))
    fine = d12a_inner(grid, w, w)
    coarse_grid = grid.coarsen()
    wc = eval_W(params, radii(coarse_grid))
    coarse = d12a_inner(coarse_grid, wc, wc)
    return {
        "h1_norm_sq": h1_exact,
        "d12a_quadrature": d12,
        "rel_isometry": abs(d12 - h1_exact) / h1_exact,
        "rel_lq_isometry": abs(lq - lp_norm(psi, q)) / lq,
        "rel_transform_path": abs(float(richardson(fine, coarse)) - d12) / d12,
        "rel_deficit": abs(deficit(psi).normalized),
        "rel_energy_quantization": abs(h1_exact - bubble_energy(params)) / h1_exact,
    }


@_timed
def check_isometry(settings: Settings) -> CriterionResult:
    """D^{1,2}_a norm of W equals the H^1 norm of Psi; deficit of Psi vanishes."""
    tol = settings.tol(1e-8)
    measured = {}
    ok = True
    for N, a, b in ISOMETRY_TUPLES:
        m = _isometry(make_params(N, a, b), settings.h)
        measured[f"({N},{a},{b})"] = m
        ok &= all(m[k] < tol for k in m if k.startswith("rel_"))
    return CriterionResult(2, "transform isometry and vanishing deficit of Psi", ok, measured)


def _spectral_case(params, h, tol):
    grid = experiment_grid(params, h=h)
    out = {}
    ok = True
    for mode in (0, 1, 2):
        oracle = spectrum(params, grid, mode, k=1).oracle
        k = max(len([o for o in oracle]), 1)
        rep = spectrum(params, grid, mode, k=k)
        bound = [(v, o) for v, o in zip(rep.eigenvalues, oracle)]
        errs = [abs(v - o) for v, o in bound]
        raw = [eigen_lowest(assemble(params, g, mode), k, vectors=False).eigenvalues
               for g in (grid.coarsen().coarsen(), grid.coarsen(), grid)]
        orders = [observed_order(raw[0][j], raw[1][j], raw[2][j]) for j in range(len(bound))]
        out[f"mode{mode}"] = {"eigenvalues": [float(v) for v, _ in bound], "oracle": [float(o) for _, o in bound],
                              "max_abs_err": max(errs) if errs else 0.0, "orders": orders}
        ok &= (not errs or max(errs) < tol) and all(abs(o - 2.0) <= 0.1 * (QUICK_FACTOR if h > 0.01 else 1.0)
                                                    for o in orders)
    morse = morse_index(params, grid, l_max=2)
    out["mode0_negative_count"] = morse.counts[0]
    ok &= morse.counts[0] == 1
    # Zero mode: eigenvector of mu_1(0) against Psi'/||Psi'|| in L^2.
    rep = spectrum(params, grid, 0, k=2)
    vec = rep.eigenvectors[:, 1]
    dpsi = eval_psi_prime(params, 0.0, grid.t)
    wts = grid.omega * grid.weights
    dpsi = dpsi / math.sqrt(np.sum(wts * dpsi ** 2))
    if np.sum(wts * vec * dpsi) < 0:
        vec = -vec
    out["zero_mode_eigenvalue"] = float(rep.eigenvalues[1])
    out["zero_mode_vector_err"] = float(math.sqrt(np.sum(wts * (vec - dpsi) ** 2)))
    ok &= abs(rep.eigenvalues[1]) < tol and out["zero_mode_vector_err"] < 1e-4 * (QUICK_FACTOR if h > 0.01 else 1.0)
    out["zero_mode_residual"] = zero_mode_residual(params, grid)
    ok &= out["zero_mode_residual"] < tol
    return ok, out


def zero_mode_residual(params, grid: CylinderGrid) -> float:
    """Relative L^2 size of L_0 Psi' at the coarse nodes, Richardson-combined over (h, 2h)."""
    vals = []
    for g in (grid, grid.coarsen()):
        op = assemble(params, g, 0)
        dpsi = eval_psi_prime(params, 0.0, g.t)
        res = op.strong_apply(dpsi)
        res[0] = res[-1] = 0.0
        vals.append((res, dpsi))
    fine = vals[0][0][::2]
    combined = richardson(fine, vals[1][0])
    coarse_grid = grid.coarsen()
    w = coarse_grid.weights
    dpsi = vals[1][1]
    return float(math.sqrt(np.sum(w * combined ** 2) / np.sum(w * dpsi ** 2)))


@_timed
def check_spectrum(settings: Settings) -> CriterionResult:
    """Bound states against the sech^2 oracle, O(h^2) order, Morse index and zero mode."""
    tol = settings.tol(1e-6)
    measured = {}
    ok = True
    for params in (SOBOLEV, POWER):
        case_ok, out = _spectral_case(params, settings.h, tol)
        measured[params.describe()] = out
        ok &= case_ok
    return CriterionResult(3, "linearized spectrum matches the sech^2 oracle", ok, measured)


@_timed
def check_felli_schneider(settings: Settings) -> CriterionResult:
    """Mode-1 eigenvalue crossing against the closed-form threshold."""
    tol = settings.tol(1e-4)
    measured = {}
    ok = True
    for N, a in FS_TUPLES:
        T = 60.0
        n = int(round(2 * T / settings.h)) + 1
        b_star = find_symmetry_breaking_b(N, a, tol=1e-7, T=T, n=n)
        diff = abs(b_star - felli_schneider(N, a))
        measured[f"({N},{a})"] = {"b_star": b_star, "b_fs": felli_schneider(N, a), "abs_diff": diff}
        ok &= diff < tol
    return CriterionResult(4, "symmetry-breaking threshold equals the Felli-Schneider curve", ok, measured)


def interaction_fit(params, h, points: int = 11):
    c = params.c
    grid = experiment_grid(params, (0.0, 20.0 / c), h=h)
    s = np.linspace(10.0 / c, 20.0 / c, points)
    vals = np.array([interaction(params, grid, 0.0, x) for x in s])
    slope = np.polyfit(s, np.log(vals), 1)[0]
    pref15 = interaction(params, grid, 0.0, 15.0 / c) * math.exp(15.0)
    pref20 = interaction(params, grid, 0.0, 20.0 / c) * math.exp(20.0)
    return {"slope": float(slope), "slope_rel_err": float(abs(slope + c) / c),
            "prefactor_15": pref15, "prefactor_20": pref20, "prefactor_rel_diff": abs(pref15 - pref20) / pref20}


@_timed
def check_interaction(settings: Settings) -> CriterionResult:
    """Exponential decay rate c of the bubble interaction and prefactor convergence."""
    measured = {}
    ok = True
    for params in (SOBOLEV, POWER):
        m = interaction_fit(params, settings.h)
        measured[params.describe()] = m
        ok &= m["slope_rel_err"] < 0.02 and m["prefactor_rel_diff"] < 0.01
    return CriterionResult(5, "interaction decays like exp(-c s)", ok, measured)


@_timed
def check_reduction(settings: Settings) -> CriterionResult:
    """Corrector scaling Q, Q|log Q|^(1/2), Q^(p/2) and multiplier scale Q."""
    slope_tol = settings.tol(0.05)
    measured = {}
    ok = True
    for tag, (params, R_list) in R_LISTS.items():
        rep = phi_scaling_experiment(params, settings.sweep(R_list), h=settings.h)
        m = {"R": rep.R.tolist(), "phi_norm": rep.phi_norm.tolist(), "exponent": rep.exponent,
             "log_statistic_ratio": rep.ratio(rep.log_statistic),
             "multiplier_ratio": rep.ratio(rep.multiplier_sum / rep.Q)}
        if rep.branch == "log":
            ok &= m["log_statistic_ratio"] < 3.0
        else:
            expected = 1.0 if rep.branch == "linear" else params.p / 2.0
            m["expected"] = expected
            ok &= abs(rep.exponent - expected) <= slope_tol
        ok &= m["multiplier_ratio"] < 3.0
        measured[tag] = m
    return CriterionResult(6, "reduction scaling trichotomy", ok, measured)


def _multi_reports(settings: Settings):
    return {tag: multi_bubble_stability(params, settings.sweep(R_list), h=settings.h,
                                        slope_tol=settings.tol(0.05))
            for tag, (params, R_list) in R_LISTS.items()}


@_timed
def check_residual_scale(settings: Settings) -> CriterionResult:
    """Gamma/Q bounded along the counterexample sweep and two-bubble energy window."""
    measured = {}
    ok = True
    for tag, rep in _multi_reports(settings).items():
        e1 = bubble_energy(rep.params)
        energy = np.asarray(rep.extras["energy"])
        m = {"gamma_over_Q_ratio": rep.extras["gamma_over_Q_ratio"],
             "energy_over_bubble": (energy / e1).tolist(),
             "residual_identity_defect": max(rep.extras["residual_identity_defect"])}
        ok &= (m["gamma_over_Q_ratio"] < 3.0 and np.all(np.abs(energy / e1 - 2.0) < 0.5)
               and m["residual_identity_defect"] < 1e-8)
        measured[tag] = m
    return CriterionResult(7, "residual scale Q and energy quantization", ok, measured)


@_timed
def check_one_bubble(settings: Settings) -> CriterionResult:
    """Two-sided one-bubble law d_0 ~ Gamma."""
    measured = {}
    ok = True
    eps = np.logspace(-4, -2, 5 if settings.quick else 9)
    for params in (SOBOLEV, NEGATIVE_A):
        grid = experiment_grid(params, h=settings.h)
        rep = one_bubble_stability(params, eps, grid=grid, slope_tol=settings.tol(0.03))
        m = {"exponent": rep.exponent, "ratio": rep.extras["ratio"],
             "distance_per_eps": rep.extras["distance_per_eps"][0],
             "predicted_distance_per_eps": rep.extras["predicted_distance_per_eps"]}
        ok &= rep.passed
        measured[params.describe()] = m
    return CriterionResult(8, "one-bubble two-sided stability", ok, measured)


@_timed
def check_multi_bubble(settings: Settings) -> CriterionResult:
    """Sharp exponents of d_* against Gamma for p = 5, 5/3 and the log-corrected p = 2."""
    measured = {}
    ok = True
    for tag, rep in _multi_reports(settings).items():
        measured[tag] = {"exponent": rep.exponent, "expected": rep.expected, "stderr": rep.stderr,
                         "window": list(rep.window), "log_statistic_ratio": rep.extras["log_statistic_ratio"]}
        ok &= rep.passed
    return CriterionResult(9, "multi-bubble sharp exponents", ok, measured)


@_timed
def check_deficit_law(settings: Settings) -> CriterionResult:
    """e(u) >= const d(u)^2 over a fixed-seed ensemble, matched to the second variation."""
    grid = experiment_grid(SOBOLEV, h=settings.h)
    count = 5 if settings.quick else 10
    eps = np.logspace(-4, -1, 4 if settings.quick else 7)
    rep = deficit_vs_distance(SOBOLEV, count=count, eps_list=eps, grid=grid, oracle_tol=settings.tol(0.05))
    m = {"min_ratio": rep.min_ratio, "min_ratio_doubled": rep.min_ratio_doubled,
         "oracle_rel_err": rep.oracle_rel_err, "scaling_change": rep.scaling_change}
    ok = rep.passed and rep.scaling_change < 0.1
    return CriterionResult(10, "deficit controls squared distance", ok, m)


CHECKS = [check_best_constant, check_isometry, check_spectrum, check_felli_schneider, check_interaction,
          check_reduction, check_residual_scale, check_one_bubble, check_multi_bubble, check_deficit_law]


def run_all(quick: bool = False) -> list:
    settings = Settings(quick)
    return [check(settings) for check in CHECKS]
