import numpy as np
import pytest
from scipy import stats

from thermobilliards import (IllPosedError, RngStream, disc_union,
                             equilateral_triangle, two_plates)
from thermobilliards.sampling import moment_table
from thermobilliards.stationary import (build_linear_system, component_energies,
                                        estimate_transition_matrix,
                                        exact_transition_matrix,
                                        solve_stationary, stationary_mixture)


def test_exact_transition_matrices():
    tab = two_plates((1.0, 2.0), (1.0, 1.0))
    tm = exact_transition_matrix(tab)
    assert np.array_equal(tm.p, [[0.0, 1.0], [1.0, 0.0]])
    tri = equilateral_triangle((1.0, 2.0, 3.0), (1.0, 1.0, 1.0))
    tm = exact_transition_matrix(tri)
    assert np.allclose(tm.p, (np.ones((3, 3)) - np.eye(3)) / 2.0)


def test_estimate_transition_matrix_rows():
    tri = equilateral_triangle((1.0, 1.0, 1.0), (1.0, 1.0, 1.0))
    tm = estimate_transition_matrix(tri, 50000, RngStream(0, 0))
    assert np.allclose(tm.p.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(np.diag(tm.p) == 0.0)
    assert np.all(np.abs(tm.p - (np.ones((3, 3)) - np.eye(3)) / 2.0)
                  <= 4 * tm.se + np.eye(3))
    with pytest.raises(ValueError):
        estimate_transition_matrix(tri, 100, RngStream(0, 0))


def test_estimate_is_reproducible():
    du = disc_union(1.0, 0.4, (1.0, 2.0), (0.9, 0.8))
    a = estimate_transition_matrix(du, 20000, RngStream(1, 3))
    b = estimate_transition_matrix(du, 20000, RngStream(1, 3))
    assert np.array_equal(a.counts, b.counts)


def test_two_plate_mixture_closed_form():
    # for plates the fixed point is solvable by hand:
    # c = (I - Q)^{-1} diag-weighted source with Q off-diagonal (1 - alpha_i)
    a1, a2 = 0.7, 0.4
    tab = two_plates((2.0, 1.0), (a1, a2))
    mix = stationary_mixture(tab)
    c = 1.0 - (1.0 - a1) * (1.0 - a2)
    expect = 0.5 / c * np.array([
        [a1, (1.0 - a1) * a2],
        [(1.0 - a2) * a1, a2],
    ])
    assert np.allclose(mix.c, expect, atol=1e-12)
    assert np.allclose(mix.c.sum(axis=1), mix.abar, atol=1e-12)
    assert np.allclose(mix.conditional_weights().sum(axis=1), 1.0, atol=1e-12)


def test_full_accommodation_mixture_is_diagonal():
    tri = equilateral_triangle((1.0, 2.0, 3.0), (1.0, 1.0, 1.0))
    mix = stationary_mixture(tri)
    assert np.allclose(mix.c, np.eye(3) / 3.0, atol=1e-12)


def test_solve_stationary_rejects_unit_spectral_radius():
    Q = np.array([[0.0, 1.0], [1.0, 0.0]])  # alpha = 0 everywhere
    with pytest.raises(IllPosedError):
        solve_stationary(Q, np.zeros(2), np.ones(2), np.full(2, 0.5), 3)


def test_build_linear_system_scaling():
    tab = two_plates((2.0, 1.0), (0.5, 0.5))
    p = exact_transition_matrix(tab)
    Q, pi_w, temps, abar = build_linear_system(p, tab.components)
    assert np.allclose(Q, [[0.0, 0.5], [0.5, 0.0]])
    assert np.allclose(pi_w, [0.25, 0.25])
    assert np.allclose(temps, [2.0, 1.0])
    assert np.allclose(abar, [0.5, 0.5])


def test_mixture_speed_sampler_matches_cdf():
    tri = equilateral_triangle((1.0, 2.0, 3.0), (0.7, 0.7, 0.7))
    mix = stationary_mixture(tri)
    gen = RngStream(2, 0).generator()
    for i in range(3):
        speeds = mix.sample_speeds(i, 50000, gen)
        ks = stats.kstest(speeds, lambda r: mix.speed_cdf(i, r))
        assert ks.pvalue > 0.001


def test_component_energies_equal_temperature():
    tri = equilateral_triangle((2.0, 2.0, 2.0), (0.5, 0.8, 0.3))
    mix = stationary_mixture(tri)
    p = exact_transition_matrix(tri)
    e_plus, e_minus = component_energies(mix, p, tri.components)
    mu = moment_table(2.0, 2).mean_energy
    assert np.allclose(e_plus, mu, atol=1e-12)
    assert np.allclose(e_minus, mu, atol=1e-12)


def test_component_energies_ordering():
    # hotter components emit hotter particles even with mixing
    tri = equilateral_triangle((1.0, 2.0, 3.0), (0.6, 0.6, 0.6))
    mix = stationary_mixture(tri)
    p = exact_transition_matrix(tri)
    e_plus, _ = component_energies(mix, p, tri.components)
    assert e_plus[0] < e_plus[1] < e_plus[2]
