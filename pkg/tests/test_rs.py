"""RS potential: fixed points, free energies, and the single-crossing check."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from tapreg.asymptotics import stieltjes_T
from tapreg.rs import (
    fixed_point_e,
    i_rs,
    mmse,
    single_crossing_suite,
    solve_fixed_point,
)

GOLDEN_CONJ = (math.sqrt(5.0) - 1.0) / 2.0


def test_fixed_point_closed_values():
    assert_allclose(fixed_point_e(2.0, 0.5), math.sqrt(2.0) - 1.0, rtol=1e-15)
    # alpha=delta=1: E^2 + E - 1 = 0, E = (sqrt(5)-1)/2
    assert_allclose(fixed_point_e(1.0, 1.0), GOLDEN_CONJ, rtol=1e-15)


@given(st.floats(0.1, 32.0), st.floats(0.01, 32.0))
@settings(max_examples=80, deadline=None)
def test_fixed_point_residual_property(alpha, delta):
    e = fixed_point_e(alpha, delta)
    assert 0.0 < e < 1.0
    k = alpha * delta
    assert abs(e - (k + e) / (k + e + alpha)) <= 1e-13


def test_fixed_point_matches_stieltjes_T():
    # The RS error parameter and the spectral T(delta) coincide; the two
    # implementations share no code path.
    for alpha in np.linspace(0.25, 8.0, 12):
        for delta in np.linspace(0.25, 8.0, 12):
            assert abs(fixed_point_e(float(alpha), float(delta)) - stieltjes_T(float(delta), float(alpha))) <= 1e-13


def test_solution_golden_ratio_identities():
    sol = solve_fixed_point(1.0, 1.0)
    assert_allclose(sol.e_delta, GOLDEN_CONJ, rtol=1e-14)
    assert_allclose(sol.sigma_sq, 1.0 + GOLDEN_CONJ, rtol=1e-14)
    # E = sigma^2/(sigma^2+1) exactly at the fixed point
    assert_allclose(sol.sigma_sq / (sol.sigma_sq + 1.0), sol.e_delta, rtol=1e-14)
    assert_allclose(sol.free_energy, -0.7902288194345509, rtol=1e-12)


def test_free_energy_reference_value():
    sol = solve_fixed_point(2.0, 0.5)
    assert_allclose(sol.free_energy, -1.4943671649762917, rtol=1e-13)
    assert_allclose(sol.free_energy, -sol.i_rs_at_min - 1.0, rtol=1e-14)


def test_damped_iteration_agrees_with_closed_form():
    # solve_fixed_point would raise if the two routes drifted apart; sweep a
    # wide box including the corners to exercise both conjugate branches.
    for alpha in (0.25, 0.5, 1.0, 2.0, 8.0):
        for delta in (0.25, 1.0, 8.0):
            sol = solve_fixed_point(alpha, delta)
            assert 0.0 < sol.e_delta < 1.0


def test_potential_is_minimized_at_fixed_point():
    for alpha, delta in ((1.0, 1.0), (2.0, 0.5), (0.5, 2.0)):
        e_star = fixed_point_e(alpha, delta)
        i_star = i_rs(e_star, alpha, delta)
        grid = np.linspace(0.005, 1.0, 400)
        vals = np.array([i_rs(float(e), alpha, delta) for e in grid])
        assert np.all(vals >= i_star - 1e-12)
        # strictly larger once clear of the minimizer
        away = np.abs(grid - e_star) > 0.05
        assert np.all(vals[away] > i_star)


def test_potential_slope_changes_sign_at_minimum():
    e_star = fixed_point_e(1.0, 1.0)
    h = 1e-4
    left = (i_rs(e_star, 1.0, 1.0) - i_rs(e_star - h, 1.0, 1.0)) / h
    right = (i_rs(e_star + h, 1.0, 1.0) - i_rs(e_star, 1.0, 1.0)) / h
    assert left < 0 < right


def test_i_rs_domain():
    assert math.isfinite(i_rs(1.0, 2.0, 0.5))  # e = 1 is allowed
    for bad in (0.0, -0.2, 1.2, math.nan):
        with pytest.raises(ValueError, match="e must"):
            i_rs(bad, 2.0, 0.5)
    with pytest.raises(ValueError, match="alpha"):
        i_rs(0.5, -1.0, 0.5)
    with pytest.raises(ValueError, match="delta"):
        i_rs(0.5, 1.0, 0.0)


def test_mmse_values():
    assert mmse(0.0) == 1.0
    assert_allclose(mmse(1.0), 0.5, rtol=1e-15)
    s = np.linspace(0.0, 10.0, 50)
    vals = [mmse(float(v)) for v in s]
    assert np.all(np.diff(vals) < 0)
    with pytest.raises(ValueError, match="snr"):
        mmse(-0.1)


def test_single_crossing_curves_coincide():
    report = single_crossing_suite(np.arange(0.01, 0.995, 0.01))
    assert len(report.checks) == 99
    assert report.max_abs_gap <= 1e-12
    for check in report.checks:
        assert check.delta_fp > 0
        assert check.fixed_point_residual <= 1e-12
        # m_rs solves m^2 + delta m - 1 = 0
        assert abs(check.m_rs**2 + check.delta_rs * check.m_rs - 1.0) <= 1e-12


def test_single_crossing_grid_validation():
    with pytest.raises(ValueError, match="non-empty"):
        single_crossing_suite([])
    for bad in ([0.0], [1.0], [-0.5], [0.5, 1.5]):
        with pytest.raises(ValueError, match="strictly inside"):
            single_crossing_suite(bad)
