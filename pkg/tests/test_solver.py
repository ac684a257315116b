"""Sphere-constrained least squares and the multi-restart TAP maximizer."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from tapreg.model import ModelParams, ProblemInstance, generate_instance
from tapreg.oracle import ridge_solve
from tapreg.rs import fixed_point_e
from tapreg.solver import (
    OptResult,
    SolverOptions,
    constrained_least_squares,
    maximize_tap,
    profile_over_q,
)
from tapreg.tap import EPS_Q, f_tap


def _residual(instance, a) -> float:
    r = instance.y - instance.x @ a
    return float(r @ r)


# ---------------------------------------------------------------------------
# constrained_least_squares

def test_secular_identity_design_shrinks_radially():
    # x = I: minimizing |y - a| on |a| = r gives a = r * y/|y| and mu = |y|/r - 1.
    rng = np.random.default_rng(3)
    y = rng.standard_normal(6)
    inst = ProblemInstance.from_data(np.eye(6), y, delta=1.0)
    for r in (0.5, 1.0, 2.0):
        sol = constrained_least_squares(inst, r)
        assert_allclose(sol.a_mu, r * y / np.linalg.norm(y), rtol=1e-9, atol=1e-12)
        assert_allclose(sol.mu, float(np.linalg.norm(y)) / r - 1.0, rtol=1e-8)
        assert not sol.hard_case


def test_secular_recovers_ols_at_its_own_radius():
    inst = generate_instance(ModelParams(p=12, alpha=3.0, delta=0.5, master_seed=2), 0)
    g, c, _ = inst.gram()
    a_ols = np.linalg.solve(g, c)
    sol = constrained_least_squares(inst, float(np.linalg.norm(a_ols)))
    assert abs(sol.mu) < 1e-6
    assert_allclose(sol.a_mu, a_ols, rtol=1e-6, atol=1e-9)


def test_secular_beats_brute_force_grid():
    # Oracle: sweep mu over a fine grid, rescale each candidate onto the
    # sphere (grid points are only approximately feasible), and compare
    # residuals.  The solver must match the best rescaled candidate.
    inst = generate_instance(ModelParams(p=6, alpha=2.0, delta=0.5, master_seed=17), 0)
    lam, vecs, ceig = inst.gram_eigh()
    for radius in (0.4, 1.0, 1.8):
        sol = constrained_least_squares(inst, radius)
        assert abs(float(sol.a_mu @ sol.a_mu) - radius**2) <= 1e-9 * max(1.0, radius**2)
        best = math.inf
        for mu in np.geomspace(1e-6, 1e4, 200_000) - float(lam[0]) / 2.0:
            if np.any(lam + mu <= 0):
                continue
            cand = vecs @ (ceig / (lam + mu))
            nrm = float(np.linalg.norm(cand))
            if nrm == 0.0:
                continue
            best = min(best, _residual(inst, cand * (radius / nrm)))
        assert _residual(inst, sol.a_mu) <= best + 1e-9


def test_secular_mu_decreases_as_radius_grows():
    inst = generate_instance(ModelParams(p=10, alpha=2.0, delta=0.5, master_seed=5), 0)
    radii = np.linspace(0.2, 3.0, 10)
    mus = [constrained_least_squares(inst, float(r)).mu for r in radii]
    assert np.all(np.diff(mus) < 0)


def test_secular_hard_case_pads_minimal_eigenvector():
    # Diagonal design with c orthogonal to the minimal direction: the shifted
    # family saturates below the requested radius and the deficit must be
    # padded along e_min.
    d = np.array([0.3, 1.0, 1.5, 2.0])
    y = np.array([0.0, 1.0, -0.5, 0.25])  # y[0] = 0 makes c[0] = 0
    inst = ProblemInstance.from_data(np.diag(d), y, delta=1.0)
    lam = d**2
    coords = (d * y)[1:] / (lam[1:] - lam[0])
    reach = float(np.sqrt(np.sum(coords**2)))
    tau = 0.7
    radius = math.sqrt(reach**2 + tau**2)

    sol = constrained_least_squares(inst, radius)
    assert sol.hard_case
    assert_allclose(sol.mu, -lam[0], rtol=1e-12)
    assert_allclose(abs(sol.a_mu[0]), tau, rtol=1e-9)
    assert_allclose(float(np.linalg.norm(sol.a_mu)), radius, rtol=1e-9)
    assert_allclose(sol.norm_gap, tau**2, rtol=1e-9)


def test_secular_pads_null_space_when_underdetermined(wide_instance):
    # n < p: beyond the min-norm LS radius the padding lives in the null
    # space of x, so the fit cannot improve and must not degrade.
    a_min = np.linalg.pinv(wide_instance.x) @ wide_instance.y
    radius = 1.2 * float(np.linalg.norm(a_min))
    sol = constrained_least_squares(wide_instance, radius)
    assert sol.hard_case
    assert_allclose(float(np.linalg.norm(sol.a_mu)), radius, rtol=1e-9)
    # x interpolates y exactly here (n < p), and null-space padding must not
    # disturb that: both residuals are pure round-off.
    assert _residual(wide_instance, a_min) <= 1e-12
    assert _residual(wide_instance, sol.a_mu) <= 1e-12


def test_secular_radius_validation(small_instance):
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(ValueError, match="radius"):
            constrained_least_squares(small_instance, bad)


# ---------------------------------------------------------------------------
# SolverOptions

@pytest.mark.parametrize(
    "kwargs",
    [
        dict(restarts=0),
        dict(max_iters=0),
        dict(armijo=0.0),
        dict(armijo=1.0),
        dict(backtrack=0.0),
        dict(backtrack=1.0),
        dict(q_init_list=(0.5, 1.0)),
        dict(q_init_list=(0.0,)),
    ],
)
def test_solver_options_validation(kwargs):
    with pytest.raises(ValueError):
        SolverOptions(**kwargs)


# ---------------------------------------------------------------------------
# maximize_tap

def test_maximizer_beats_ridge_start():
    for seed, delta in ((0, 0.5), (1, 0.5), (2, 0.1)):
        inst = generate_instance(ModelParams(p=60, alpha=2.0, delta=delta, master_seed=seed), 0)
        res = maximize_tap(inst)
        ridge_value = f_tap(ridge_solve(inst).a_delta, inst).value
        assert res.f_value >= ridge_value - 1e-9
        assert isinstance(res, OptResult)


def test_maximizer_result_is_consistent(small_instance):
    res = maximize_tap(small_instance)
    # the reported value is the exact evaluation at the reported point
    assert res.f_value == f_tap(res.a_hat, small_instance).value
    assert res.q_final <= 1.0 - EPS_Q + 1e-15
    assert res.restarts_used == SolverOptions().restarts
    if res.converged:
        assert res.grad_norm <= 1e-8 * math.sqrt(small_instance.params.p)


def test_maximizer_is_deterministic(small_instance):
    a = maximize_tap(small_instance)
    b = maximize_tap(small_instance)
    assert_array_equal(a.a_hat, b.a_hat)
    assert a.f_value == b.f_value
    assert a.iterations == b.iterations


def test_maximizer_honors_options(small_instance):
    opts = SolverOptions(restarts=3, max_iters=200, stream_tag=(9, 9))
    res = maximize_tap(small_instance, opts=opts)
    assert res.restarts_used == 3
    assert res.iterations <= 200


def test_maximizer_near_interior_stationary_point():
    inst = generate_instance(ModelParams(p=120, alpha=2.0, delta=0.5, master_seed=11), 0)
    res = maximize_tap(inst)
    assert res.converged
    assert 0.0 < res.q_final < 1.0 - EPS_Q / 2


# ---------------------------------------------------------------------------
# profile_over_q

def test_profile_default_grid(small_instance):
    points = profile_over_q(small_instance)
    assert len(points) == 19
    assert_allclose([pt.q for pt in points], np.arange(0.05, 0.951, 0.05), rtol=1e-12)


def test_profile_peak_sits_at_rs_overlap():
    # g_tap's maximizer concentrates on q = 1 - E_delta; at p=1000 the argmax
    # over the default grid should land within one grid step of it.
    inst = generate_instance(ModelParams(p=1000, alpha=2.0, delta=0.5, master_seed=0), 0)
    points = profile_over_q(inst)
    best = max(points, key=lambda pt: pt.g_tap)
    q_star = 1.0 - fixed_point_e(2.0, 0.5)
    assert abs(best.q - q_star) <= 0.05 + 1e-12


def test_profile_grid_validation(small_instance):
    with pytest.raises(ValueError, match="non-empty"):
        profile_over_q(small_instance, q_grid=[])
    with pytest.raises(ValueError, match="q grid"):
        profile_over_q(small_instance, q_grid=[0.5, 1.0])
    with pytest.raises(ValueError, match="q grid"):
        profile_over_q(small_instance, q_grid=[-0.1])
