import numpy as np
import pytest
from scipy import integrate

from cknstab.bubbles import BubbleConfig, symmetric_pair
from cknstab.errors import DomainError
from cknstab.grid import experiment_grid
from cknstab.params import make_params
from cknstab.profiles import eval_psi, eval_psi_prime
from cknstab.reduction import (bordered_margin, branch, counterexample_state, fit_window, orthogonality_products,
                               phi_scaling_experiment, predicted_exponent, solve_projected)


def leading_multiplier(P, R):
    """c_1 ~ -int E Psi_1' / int Psi_1^(p-1) Psi_1'^2 by adaptive quadrature."""
    p, s1, s2 = P.p, -R / 2, R / 2
    psi = lambda s, t: float(eval_psi(P, s, t))
    E = lambda t: (psi(s1, t) + psi(s2, t)) ** p - psi(s1, t) ** p - psi(s2, t) ** p
    span = 60.0 / P.c
    num = integrate.quad(lambda t: E(t) * float(eval_psi_prime(P, s1, t)), s1 - span, s2 + span,
                         points=[s1, 0.0, s2], limit=500, epsabs=0, epsrel=1e-8)[0]
    den = integrate.quad(lambda t: psi(s1, t) ** (p - 1) * float(eval_psi_prime(P, s1, t)) ** 2,
                         s1 - span, s1 + span, points=[s1], limit=500, epsabs=0)[0]
    return -num / den


@pytest.mark.filterwarnings("ignore::scipy.integrate.IntegrationWarning")
@pytest.mark.parametrize("tup, R, tol", [((3, 0, 0), 20.0, 2e-3), ((3, 0, 0), 30.0, 1e-4),
                                         ((4, 0, 0.5), 30.0, 1e-4), ((3, 0, 0.5), 40.0, 1e-4)])
def test_multipliers_match_leading_order(tup, R, tol):
    P = make_params(*tup)
    sol = solve_projected(symmetric_pair(P, R))
    c1 = leading_multiplier(P, R)
    assert sol.multipliers[0] == pytest.approx(c1, rel=tol)
    assert sol.multipliers[1] == pytest.approx(-sol.multipliers[0], rel=1e-8)


def test_projected_solution_properties():
    P = make_params(3, 0, 0)
    sol = solve_projected(symmetric_pair(P, 20.0), tol=1e-10)
    assert sol.newton_residual < 1e-10
    assert sol.orthogonality_defect < 1e-12
    assert not sol.damped
    assert np.all(np.abs(orthogonality_products(sol)) < 1e-14)
    phi = sol.phi.samples
    assert np.allclose(phi, phi[::-1], atol=1e-14)  # even for a symmetric pair
    assert sol.phi_norm == pytest.approx(5.6838e-4, rel=1e-3)
    assert bordered_margin(sol) > 0.1


def test_three_bubbles():
    P = make_params(3, 0, 0)
    sol = solve_projected(BubbleConfig(P, (-15.0, 0.0, 15.0)))
    c = sol.multipliers
    assert c[0] == pytest.approx(-c[2], rel=1e-8)
    assert abs(c[1]) < 1e-12
    assert sol.newton_residual < 1e-10


def test_counterexample_identity():
    P = make_params(3, 0, 0)
    state = counterexample_state(P, 20.0)
    # The residual of v_R equals sum_j c_j Psi_j^(p-1) Psi_j' up to solver tolerance.
    assert state.residual_identity_defect < 1e-10
    assert state.v_minus_norm == 0.0
    assert state.gamma > 0


def test_branches():
    assert branch(make_params(3, 0, 0)) == "linear"
    assert branch(make_params(3, 0, 0.5)) == "log"
    assert branch(make_params(4, 0, 0.5)) == "power"
    assert predicted_exponent(make_params(4, 0, 0.5)) == pytest.approx(5 / 6)
    assert predicted_exponent(make_params(3, 0, 0.5)) == 1.0


def test_fit_window():
    R = np.array([10, 20, 30, 40, 50])
    assert fit_window(R, np.zeros(5, dtype=bool)).all()
    keep = fit_window(R, np.array([False, True, False, False, False]))
    assert keep.tolist() == [False, False, True, True, True]


def test_sweep_needs_five_points():
    with pytest.raises(ValueError):
        phi_scaling_experiment(make_params(3, 0, 0), [10, 20, 30])


def test_scaling_linear_branch():
    P = make_params(3, 0, 0)
    rep = phi_scaling_experiment(P, [16, 20, 24, 28, 32], h=0.02)
    assert rep.exponent == pytest.approx(1.0, abs=0.01)
    assert rep.ratio(rep.multiplier_sum / rep.Q) < 1.1


def test_reduction_requires_superlinear():
    with pytest.raises(DomainError):
        solve_projected(symmetric_pair(make_params(3, -1, 0), 20.0))


def test_explicit_grid_is_used():
    P = make_params(3, 0, 0)
    cfg = symmetric_pair(P, 20.0)
    grid = experiment_grid(P, cfg.centers, h=0.02)
    sol = solve_projected(cfg, grid=grid)
    assert sol.grid is grid
