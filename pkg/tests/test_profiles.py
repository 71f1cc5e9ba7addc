import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cknstab.grid import experiment_grid
from cknstab.params import make_params
from cknstab.profiles import (bubble_power_defect, emden_fowler_forward, emden_fowler_inverse, eval_psi,
                              eval_psi_derivatives, eval_psi_prime, eval_V, eval_V_prime, eval_W, eval_W_prime,
                              logcosh, power_increment, psi_peak, radii, signed_power)

TUPLES = [(3, 0, 0), (3, -1, -0.2), (4, 0, 0.5), (3, 0.2, 0.2), (5, -1, -0.5), (3, 0, 0.5)]
tuples = st.sampled_from(TUPLES)


def mp_psi(P, x):
    """Reference Psi(x) = A sech(alpha x)^(2/(p-1)) in extended precision."""
    p, c = mp.mpf(P.p), mp.mpf(P.c)
    A = ((p + 1) * c ** 2 / 2) ** (1 / (p - 1))
    return A * mp.sech(c * (p - 1) / 2 * x) ** (2 / (p - 1))


def mp_W(P, r):
    p, c = mp.mpf(P.p), mp.mpf(P.c)
    return (2 * (p + 1) * c ** 2) ** (1 / (p - 1)) * (1 + r ** (c * (p - 1))) ** (-2 / (p - 1))


def test_logcosh_large_arguments():
    x = np.array([0.0, 1.0, 50.0, 800.0, -800.0])
    ref = [float(mp.log(mp.cosh(v))) for v in x]
    assert np.allclose(logcosh(x), ref, rtol=1e-15, atol=1e-15)


def test_peak_values():
    assert psi_peak(make_params(3, 0, 0)) == pytest.approx(0.75 ** 0.25, rel=1e-15)
    assert psi_peak(make_params(4, 0, 0.5)) == pytest.approx((4.0 / 3.0) ** 1.5, rel=1e-14)
    assert psi_peak(make_params(3, 0, 0.5)) == pytest.approx(0.375, rel=1e-15)


mp.mp.dps = 30


@settings(max_examples=40, deadline=None)
@given(tup=tuples, x=st.floats(-30.0, 30.0))
def test_psi_matches_reference(tup, x):
    P = make_params(*tup)
    assert eval_psi(P, 0.0, x) == pytest.approx(float(mp_psi(P, x)), rel=1e-12)
    assert eval_psi(P, 1.5, x + 1.5) == pytest.approx(float(mp_psi(P, x)), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(tup=tuples, x=st.floats(-20.0, 20.0))
def test_derivatives_match_reference(tup, x):
    P = make_params(*tup)
    derivs = eval_psi_derivatives(P, 0.0, x)
    scale = float(mp_psi(P, 0))
    for k in (1, 2, 3):
        ref = float(mp.diff(lambda y: mp_psi(P, y), x, k))
        assert derivs[k] == pytest.approx(ref, rel=1e-9, abs=1e-12 * scale)
    assert eval_psi_prime(P, 0.0, x) == pytest.approx(derivs[1], rel=1e-14, abs=1e-300)


@settings(max_examples=40, deadline=None)
@given(tup=tuples, x=st.floats(-25.0, 25.0))
def test_profile_equation(tup, x):
    # -Psi'' + c^2 Psi = Psi^p
    P = make_params(*tup)
    psi, _, d2, _ = eval_psi_derivatives(P, 0.0, x)
    lhs = -d2 + P.c ** 2 * psi
    assert lhs == pytest.approx(psi ** P.p, rel=1e-10, abs=1e-14 * psi_peak(P))


@settings(max_examples=40, deadline=None)
@given(tup=tuples, t=st.floats(-20.0, 20.0))
def test_emden_fowler_link(tup, t):
    # W(e^-t) = e^(ct) Psi(t) and V(e^-t) = e^(ct) Psi'(t).
    P = make_params(*tup)
    r = math.exp(-t)
    w = eval_W(P, r)
    assert w == pytest.approx(float(mp_W(P, mp.e ** (-t))), rel=1e-12)
    assert w * math.exp(-P.c * t) == pytest.approx(eval_psi(P, 0.0, t), rel=1e-12)
    assert eval_V(P, r) * math.exp(-P.c * t) == pytest.approx(eval_psi_prime(P, 0.0, t), rel=1e-10,
                                                               abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(tup=tuples, log_r=st.floats(-8.0, 8.0))
def test_radial_derivatives(tup, log_r):
    P = make_params(*tup)
    r = mp.e ** log_r
    ref = float(mp.diff(lambda y: mp_W(P, y), r))
    assert eval_W_prime(P, float(r)) == pytest.approx(ref, rel=1e-9, abs=1e-14)
    # V = -(r W' + c W)
    v_ref = -(float(r) * ref + P.c * float(mp_W(P, r)))
    assert eval_V(P, float(r)) == pytest.approx(v_ref, rel=1e-9, abs=1e-14)
    h = 1e-6 * float(r)
    fd = (eval_V(P, float(r) + h) - eval_V(P, float(r) - h)) / (2 * h)
    assert eval_V_prime(P, float(r)) == pytest.approx(fd, rel=1e-5, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(tup=tuples, log_tau=st.floats(-3.0, 3.0), t=st.floats(-10.0, 10.0))
def test_dilation_is_translation(tup, log_tau, t):
    # tau^c W(tau r) pulls back to Psi(t - log tau).
    P = make_params(*tup)
    tau = math.exp(log_tau)
    r = math.exp(-t)
    lhs = tau ** P.c * eval_W(P, tau * r) * math.exp(-P.c * t)
    assert lhs == pytest.approx(eval_psi(P, log_tau, t), rel=1e-11)


def test_transform_roundtrip():
    P = make_params(3, -1, -0.2)
    grid = experiment_grid(P, h=0.05)
    u = eval_W(P, radii(grid))
    v = emden_fowler_forward(grid, u)
    assert np.allclose(v.samples, eval_psi(P, 0.0, grid.t), rtol=1e-12, atol=0)
    assert np.allclose(emden_fowler_inverse(v), u, rtol=1e-12, atol=0)


@settings(max_examples=60, deadline=None)
@given(v=st.floats(-1e3, 1e3), p=st.floats(1.05, 6.0))
def test_signed_power_odd(v, p):
    assert signed_power(-v, p) == pytest.approx(-signed_power(v, p), rel=1e-14, abs=0)
    if abs(v) > 1e-300:
        assert signed_power(v, p) == pytest.approx(math.copysign(abs(v) ** p, v), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(base=st.floats(1e-8, 10.0), frac=st.floats(-3.0, 3.0), p=st.floats(1.05, 6.0))
def test_power_increment(base, frac, p):
    incr = frac * base
    ref = float(mp.sign(base + incr) * abs(mp.mpf(base) + incr) ** p - mp.mpf(base) ** p)
    assert power_increment(np.array([base]), np.array([incr]), p)[0] == pytest.approx(
        ref, rel=1e-10, abs=1e-14 * base ** p)


def test_power_increment_tiny_relative_step():
    # The naive difference loses every digit here.
    got = power_increment(np.array([1.0]), np.array([1e-17]), 5.0)[0]
    assert got == pytest.approx(5e-17, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(tup=tuples, R=st.floats(2.0, 40.0), t=st.floats(-30.0, 30.0))
def test_bubble_power_defect(tup, R, t):
    P = make_params(*tup)
    p = P.p
    # The reference itself cancels up to ~25 digits, so evaluate it at 80.
    with mp.workdps(80):
        a, b = mp_psi(P, t + R / 2), mp_psi(P, t - R / 2)
        ref = float((a + b) ** p - a ** p - b ** p)
    got = bubble_power_defect(P, np.array([t]), (-R / 2, R / 2))[0]
    assert got == pytest.approx(ref, rel=1e-9, abs=1e-300)
    assert got >= 0.0


def test_bubble_power_defect_with_coefficients():
    P = make_params(3, 0, 0)
    t = np.linspace(-5, 5, 11)
    got = bubble_power_defect(P, t, (0.0,), coefs=(2.0,))
    assert np.allclose(got, (2.0 ** 5 - 2.0) * eval_psi(P, 0.0, t) ** 5, rtol=1e-12)
    assert np.all(bubble_power_defect(P, t, (0.0,)) == 0.0)
