import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from cknstab.errors import BracketError, DomainError
from cknstab.grid import CylinderGrid, experiment_grid, richardson
from cknstab.params import felli_schneider, make_params
from cknstab.profiles import eval_psi, eval_psi_prime
from cknstab.spectral import (assemble, coercivity_margin, eigen_lowest, find_symmetry_breaking_b, morse_index,
                              oracle_spectrum, sphere_harmonic_dim, spectrum, sturm_count, weighted_eigenvalue,
                              weighted_eigenvalue_oracle)


def test_oracle_values():
    assert oracle_spectrum(make_params(3, 0, 0), 0) == pytest.approx([-2.0, 0.0], abs=1e-15)
    assert oracle_spectrum(make_params(3, 0, 0), 1) == pytest.approx([0.0, 2.0], abs=1e-15)
    assert oracle_spectrum(make_params(3, 0, 0), 2) == pytest.approx([4.0, 6.0], abs=1e-15)
    # p = 5/3: alpha = 1/3, four bound states 1 - (4 - n)^2 / 9
    assert oracle_spectrum(make_params(4, 0, 0.5), 0) == pytest.approx([-7 / 9, 0.0, 5 / 9, 8 / 9], abs=1e-14)


def test_sphere_harmonic_dims():
    assert [sphere_harmonic_dim(3, l) for l in range(4)] == [1, 3, 5, 7]
    assert [sphere_harmonic_dim(4, l) for l in range(4)] == [1, 4, 9, 16]


@pytest.mark.parametrize("tup", [(3, 0, 0), (4, 0, 0.5)])
def test_bound_states_match_oracle(tup):
    P = make_params(*tup)
    grid = experiment_grid(P, h=0.01)
    for mode in (0, 1, 2):
        oracle = oracle_spectrum(P, mode)
        rep = spectrum(P, grid, mode, k=len(oracle))
        assert np.max(np.abs(rep.eigenvalues - np.array(oracle))) < 1e-6
        raw_err = np.max(np.abs(rep.raw_eigenvalues - np.array(oracle)))
        assert 1e-7 < raw_err < 1e-4  # unextrapolated values are O(h^2)


def test_continuum_edge():
    P = make_params(3, 0, 0)
    grid = experiment_grid(P, h=0.02)
    rep = spectrum(P, grid, 0, k=4)
    assert len(rep.bound_states) == 2
    assert np.all(rep.eigenvalues[2:] > P.c ** 2)


def test_zero_mode_is_psi_prime(sobolev, sobolev_grid):
    rep = spectrum(sobolev, sobolev_grid, 0, k=2)
    vec = rep.eigenvectors[:, 1]
    g = sobolev_grid
    w = g.omega * g.weights
    dpsi = eval_psi_prime(sobolev, 0.0, g.t)
    dpsi /= math.sqrt(np.sum(w * dpsi ** 2))
    vec = vec * np.sign(np.sum(w * vec * dpsi))
    assert math.sqrt(np.sum(w * (vec - dpsi) ** 2)) < 1e-4
    # Ground state is even and positive.
    ground = rep.eigenvectors[:, 0]
    assert np.all(ground >= -1e-12)
    assert np.allclose(ground, ground[::-1], atol=1e-8)


def test_eigen_lowest_validates_k(sobolev):
    grid = CylinderGrid(sobolev, 60.0, 101)
    with pytest.raises(ValueError):
        eigen_lowest(assemble(sobolev, grid, 0), 0)


def test_morse_index(sobolev, sobolev_grid):
    rep = morse_index(sobolev, sobolev_grid, l_max=3)
    assert rep.counts == {0: 1, 1: 0, 2: 0, 3: 0}
    assert rep.index == 1
    assert abs(rep.lowest[1]) < 1e-6
    with pytest.raises(DomainError):
        morse_index(make_params(3, 1, 1), sobolev_grid)


@settings(max_examples=12, deadline=None)
@given(N=st.integers(3, 5), a=st.floats(-2.0, -0.2), u=st.floats(0.05, 0.95))
def test_mode1_sign_follows_threshold(N, a, u):
    b = a + u
    b_fs = felli_schneider(N, a)
    if abs(b - b_fs) < 0.02:
        return
    P = make_params(N, a, b)
    grid = experiment_grid(P, h=0.05)
    lowest = spectrum(P, grid, 1, k=1).eigenvalues[0]
    assert (lowest < 0) == (b < b_fs)
    assert lowest == pytest.approx(oracle_spectrum(P, 1)[0], rel=1e-3, abs=1e-4)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 40), seed=st.integers(0, 2 ** 31), sigma=st.floats(-3.0, 3.0))
def test_sturm_count_matches_dense(n, seed, sigma):
    rng = np.random.default_rng(seed)
    d = rng.normal(size=n)
    e = rng.normal(size=n - 1)
    w = rng.uniform(0.1, 2.0, size=n)
    A = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    plain = np.linalg.eigvalsh(A)
    general = scipy.linalg.eigh(A, np.diag(w), eigvals_only=True)
    if np.min(np.abs(plain - sigma)) > 1e-9:
        assert sturm_count(d, e, sigma) == int(np.sum(plain < sigma))
    if np.min(np.abs(general - sigma)) > 1e-9:
        assert sturm_count(d, e, sigma, w) == int(np.sum(general < sigma))


def test_weighted_eigenvalue_oracle_values():
    P = make_params(3, 0, 0)
    assert [weighted_eigenvalue_oracle(P, n) for n in range(3)] == pytest.approx([1.0, 5.0, 35.0 / 3.0])
    Q = make_params(4, 0, 0.5)
    p = Q.p
    assert weighted_eigenvalue_oracle(Q, 2) == pytest.approx(p * (3 * p - 1) / (p + 1))


@pytest.mark.parametrize("tup", [(3, 0, 0), (3, -1, -0.2)])
def test_weighted_eigenvalues(tup):
    P = make_params(*tup)
    grid = experiment_grid(P, h=0.01)
    for n in range(3):
        fine = weighted_eigenvalue(P, grid, n)
        coarse = weighted_eigenvalue(P, grid.coarsen(), n)
        assert fine == pytest.approx(weighted_eigenvalue_oracle(P, n), rel=1e-4)
        assert richardson(fine, coarse) == pytest.approx(weighted_eigenvalue_oracle(P, n), rel=1e-7)
    assert coercivity_margin(P, grid) > 0


def test_symmetry_breaking_bisection():
    b_star = find_symmetry_breaking_b(4, -0.5, tol=1e-6, T=60.0, n=6001)
    assert abs(b_star - felli_schneider(4, -0.5)) < 1e-4


def test_symmetry_breaking_errors():
    with pytest.raises(BracketError):
        find_symmetry_breaking_b(3, 0.6)
    with pytest.raises(BracketError):
        find_symmetry_breaking_b(3, 0.2, T=60.0, n=3001)


def test_two_bubble_potential_has_two_negative_modes():
    P = make_params(3, 0, 0)
    grid = experiment_grid(P, (-10.0, 10.0), h=0.02)
    op = assemble(P, grid, 0, centers=(-10.0, 10.0))
    rep = eigen_lowest(op, 4, vectors=False)
    assert np.sum(rep.eigenvalues < -1.0) == 2
    assert np.sum(np.abs(rep.eigenvalues) < 1e-2) == 2


def test_poschl_teller_index_symbolic():
    sympy = pytest.importorskip("sympy")
    p = sympy.symbols("p", positive=True)
    lam = (p + 1) / (p - 1)
    assert sympy.simplify(lam * (lam + 1) - 2 * p * (p + 1) / (p - 1) ** 2) == 0


@settings(max_examples=30, deadline=None)
@given(tup=st.sampled_from([(3, 0, 0), (3, -1, -0.2), (4, 0, 0.5), (5, -1, -0.5)]), x=st.floats(-10.0, 10.0))
def test_potential_is_sech_squared_well(tup, x):
    # p Psi^(p-1) = alpha^2 lam (lam + 1) sech^2(alpha x) with lam = (p+1)/(p-1)
    P = make_params(*tup)
    lam = (P.p + 1) / (P.p - 1)
    grid = CylinderGrid(P, 20.0, 11)
    pot = assemble(P, grid, 0).potential
    assert np.allclose(pot, P.alpha ** 2 * lam * (lam + 1) / np.cosh(P.alpha * grid.t) ** 2, rtol=1e-12)
    value = P.p * eval_psi(P, 0.0, x) ** (P.p - 1)
    assert value == pytest.approx(P.alpha ** 2 * lam * (lam + 1) / math.cosh(P.alpha * x) ** 2, rel=1e-12)
