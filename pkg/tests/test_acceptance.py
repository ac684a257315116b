"""One test per advertised guarantee of the package.

Each test computes its check, prints a single ``ACCEPTANCE n: PASS/FAIL``
line (visible under ``pytest -s``), and then asserts — so this module
doubles as a checklist of everything the library promises.  Tolerances are
part of the contract and are stated inline.
"""

import math

import numpy as np
import pytest

from tapreg.asymptotics import stieltjes_T
from tapreg.concavity import directional_curvature, scan_nonconcavity
from tapreg.harness import preset, run_experiment
from tapreg.model import ModelParams, generate_instance
from tapreg.oracle import gaussian_log_partition, mc_spherical_free_energy, ridge_solve
from tapreg.rng import substream
from tapreg.rs import single_crossing_suite, solve_fixed_point
from tapreg.solver import maximize_tap, profile_over_q
from tapreg.tap import f_tap, grad_f_tap, h_family, hessian_quadratic_form, surrogate_constant_c

RS_FE_ALPHA2_DELTA_HALF = -1.4943671649762917  # free energy at alpha=2, delta=0.5


def _verdict(number: int, ok: bool, description: str) -> bool:
    print(f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} - {description}")
    return ok


def test_acceptance_1_fixed_point_identities():
    worst_spectral = worst_quadratic = worst_damped = 0.0
    for alpha in np.linspace(0.25, 8.0, 20):
        for delta in np.linspace(0.25, 8.0, 20):
            alpha, delta = float(alpha), float(delta)
            e = solve_fixed_point(alpha, delta).e_delta  # raises if its two routes disagree
            worst_spectral = max(worst_spectral, abs(e - stieltjes_T(delta, alpha)))
            worst_quadratic = max(
                worst_quadratic, abs(e * e + (alpha * delta + alpha - 1.0) * e - alpha * delta)
            )
            # one more independent route: plain damped iteration written out here
            k = alpha * delta
            e_iter = 0.5
            for _ in range(400):
                e_iter = 0.5 * e_iter + 0.5 * (k + e_iter) / (k + e_iter + alpha)
            worst_damped = max(worst_damped, abs(e - e_iter))
    ok = worst_spectral <= 1e-12 and worst_quadratic <= 1e-12 and worst_damped <= 1e-10
    assert _verdict(
        1,
        ok,
        "RS fixed point matches the spectral transform and its defining quadratic on a "
        f"20x20 (alpha, delta) grid (max gaps {worst_spectral:.1e}, {worst_quadratic:.1e}, "
        f"damped route {worst_damped:.1e})",
    )


def test_acceptance_2_asymptotic_curvature_reference_value():
    instance = generate_instance(ModelParams(p=8, alpha=10.0, delta=0.1, master_seed=0), 0)
    value = directional_curvature(instance, None, 0.5).asymptotic_value
    ok = abs(value - (-0.4357)) <= 1e-3
    assert _verdict(
        2,
        ok,
        f"asymptotic curvature at alpha=10, delta=0.1, q=0.5 is {value:.6f} "
        "(expected -0.4357 +/- 1e-3)",
    )


def test_acceptance_3_large_instance_ridge_statistics_match_limits():
    params = ModelParams(p=2000, alpha=2.0, delta=0.5, master_seed=0)
    instance = generate_instance(params, 0)
    ridge = ridge_solve(instance)
    err_f = abs(f_tap(ridge.a_delta, instance).value - RS_FE_ALPHA2_DELTA_HALF)
    err_q = abs(ridge.norm_sq_over_p - (2.0 - math.sqrt(2.0)))
    err_r = abs(ridge.residual_over_p - math.sqrt(2.0) / 2.0)
    ok = max(err_f, err_q, err_r) <= 0.02
    assert _verdict(
        3,
        ok,
        "p=2000 ridge statistics sit within 0.02 of their limits "
        f"(TAP value err {err_f:.4f}, norm err {err_q:.4f}, residual err {err_r:.4f})",
    )


@pytest.mark.slow
def test_acceptance_4_tap_maximum_concentrates_on_rs_value():
    ok = True
    bounds_ok = True
    detail = []
    for delta in (0.1, 0.5):
        fe = solve_fixed_point(2.0, delta).free_energy
        c = surrogate_constant_c(2.0, delta)
        hits = 0
        for trial in range(10):
            params = ModelParams(p=400, alpha=2.0, delta=delta, master_seed=0)
            instance = generate_instance(params, (400, trial))
            result = maximize_tap(instance)
            ridge = ridge_solve(instance)
            bounds_ok &= result.f_value >= f_tap(ridge.a_delta, instance).value - 1e-9
            resid = instance.y - instance.x @ ridge.a_delta
            regularized = (
                -float(resid @ resid) / (2.0 * delta * params.p)
                - float(ridge.a_delta @ ridge.a_delta) / (2.0 * params.p)
            )
            bounds_ok &= result.f_value <= regularized + c + 1e-6
            hits += abs(result.f_value - fe) <= 0.05
        detail.append(f"delta={delta}: {hits}/10 within 0.05")
        ok = ok and hits >= 9
    ok = ok and bounds_ok
    assert _verdict(
        4,
        ok,
        "p=400 TAP maximum concentrates on the RS free energy with its ridge/surrogate "
        f"sandwich never violated ({'; '.join(detail)}; bounds ok: {bool(bounds_ok)})",
    )


def _gaussian_prior_mc(instance, samples=10_000_000, block=500_000):
    """Independent Monte Carlo of the per-coordinate Gaussian-prior log-partition.

    Returns (estimate, delta-method standard error of the log-mean).
    """
    p = instance.params.p
    delta = instance.params.delta
    logs = np.empty(samples)
    done = 0
    index = 0
    while done < samples:
        m = min(block, samples - done)
        gen = substream(instance.params.master_seed, 777, "gauss-mc-oracle", index)
        draws = gen.standard_normal((m, p))
        resid = instance.y[None, :] - draws @ instance.x.T
        logs[done : done + m] = -np.einsum("ij,ij->i", resid, resid) / (2.0 * delta)
        done += m
        index += 1
    shift = float(logs.max())
    weights = np.exp(logs - shift)
    mean = float(weights.mean())
    value = (shift + math.log(mean)) / p
    se = float(weights.std()) / (mean * math.sqrt(samples)) / p
    return value, se


@pytest.mark.slow
def test_acceptance_5_free_energies_cross_validate():
    worst_sigmas = 0.0
    for seed in range(5):
        instance = generate_instance(ModelParams(p=6, alpha=2.0, delta=0.5, master_seed=seed), 0)
        analytic = gaussian_log_partition(instance).value
        mc_value, se = _gaussian_prior_mc(instance)
        worst_sigmas = max(worst_sigmas, abs(analytic - mc_value) / se)
    gauss_ok = worst_sigmas <= 3.0

    instance = generate_instance(ModelParams(p=16, alpha=2.0, delta=0.5, master_seed=0), 0)
    estimate = mc_spherical_free_energy(instance, samples=1_000_000)
    diff = abs(estimate.value - gaussian_log_partition(instance).value)
    allowed = (estimate.ci_high - estimate.ci_low) + 0.1
    sphere_ok = diff <= allowed
    ok = gauss_ok and sphere_ok
    assert _verdict(
        5,
        ok,
        f"closed-form Gaussian free energy within 3 sigma of 1e7-sample MC on 5 seeds "
        f"(worst {worst_sigmas:.2f} sigma); spherical MC within CI+0.1 of the Gaussian "
        f"reference ({diff:.4f} <= {allowed:.4f})",
    )


def test_acceptance_6_profile_never_exceeds_surrogate():
    q_grid = np.arange(0.05, 0.951, 0.05)
    worst = -math.inf
    for seed in range(5):
        instance = generate_instance(ModelParams(p=200, alpha=2.0, delta=0.5, master_seed=seed), 0)
        for point in profile_over_q(instance, None, q_grid):
            worst = max(worst, point.g_tap - point.g)
    ok = worst <= 1e-9
    assert _verdict(
        6,
        ok,
        "constrained profile g_tap(q) never exceeds its surrogate g(q) over 5 instances "
        f"x 19 overlaps (max g_tap - g = {worst:.2e})",
    )


@pytest.mark.slow
def test_acceptance_7_distance_to_ridge_shrinks_with_p():
    records = run_experiment(preset("figure1", threads=4))
    ok = all(record.status == "ok" for record in records)
    detail = []
    for delta in (0.1, 0.5):
        means = {}
        for record in records:
            if record.delta == delta:
                means.setdefault(record.p, []).append(record.dist_sq_norm)
        sizes = sorted(means)
        averages = np.array([float(np.mean(means[p])) for p in sizes])
        slope = float(np.polyfit(sizes, averages, 1)[0])
        ok = ok and slope < 0.0 and averages[-1] < averages[0]
        detail.append(
            f"delta={delta}: slope {slope:.1e}, mean@{sizes[0]} {averages[0]:.4f} -> "
            f"mean@{sizes[-1]} {averages[-1]:.5f}"
        )
    assert _verdict(
        7,
        ok,
        f"mean normalized TAP-ridge distance shrinks with p in the preset sweep ({'; '.join(detail)})",
    )


def test_acceptance_8_derivatives_and_tangency():
    rng = np.random.default_rng(2024)
    worst_grad = worst_hess = 0.0
    pairs = 0
    for p, alpha, delta, seed in ((20, 2.0, 0.5, 5), (35, 0.5, 1.0, 6), (50, 4.0, 0.25, 7)):
        instance = generate_instance(ModelParams(p=p, alpha=alpha, delta=delta, master_seed=seed), 0)
        for _ in range(34):
            u = rng.standard_normal(p)
            a = math.sqrt(p * rng.uniform(0.05, 0.85)) * u / np.linalg.norm(u)
            v = rng.standard_normal(p)
            v /= np.linalg.norm(v)

            eps = 1e-6
            fd_slope = (f_tap(a + eps * v, instance).value - f_tap(a - eps * v, instance).value) / (2 * eps)
            slope = float(grad_f_tap(a, instance) @ v)
            worst_grad = max(worst_grad, abs(fd_slope - slope) / max(1.0, abs(slope)))

            eps = 1e-3
            fd_quad = (
                f_tap(a + eps * v, instance).value
                - 2.0 * f_tap(a, instance).value
                + f_tap(a - eps * v, instance).value
            ) / eps**2
            quad = hessian_quadratic_form(a, v, instance)
            worst_hess = max(worst_hess, abs(fd_quad - quad) / max(1.0, abs(quad)))
            pairs += 1

    worst_tangent = 0.0
    for alpha in (0.5, 1.0, 2.0, 8.0):
        for delta in (0.1, 0.5, 2.0):
            e = solve_fixed_point(alpha, delta).e_delta
            worst_tangent = max(worst_tangent, abs(h_family(1.0 - e, alpha, delta).h1 - 0.5))

    ok = worst_grad <= 1e-5 and worst_hess <= 1e-4 and worst_tangent <= 1e-10
    assert _verdict(
        8,
        ok,
        f"gradient and Hessian quadratic form match finite differences over {pairs} probes "
        f"(worst rel {worst_grad:.1e} / {worst_hess:.1e}); h'(1 - E_delta) = 1/2 to "
        f"{worst_tangent:.1e}",
    )


def test_acceptance_9_scalar_channel_curves_coincide():
    report = single_crossing_suite(np.arange(0.01, 0.995, 0.01))
    ok = len(report.checks) == 99 and report.max_abs_gap <= 1e-12
    assert _verdict(
        9,
        ok,
        "the two scalar-channel noise curves coincide on 99 grid points "
        f"(max gap {report.max_abs_gap:.2e})",
    )


def test_acceptance_10_nonconcavity_detected_where_expected():
    low_noise = generate_instance(ModelParams(p=500, alpha=10.0, delta=0.1, master_seed=0), 0)
    high_noise = generate_instance(ModelParams(p=500, alpha=2.0, delta=2.0, master_seed=0), 0)
    flagged = [r.q for r in scan_nonconcavity(low_noise) if r.nonconcave]
    spurious = [r.q for r in scan_nonconcavity(high_noise) if r.nonconcave]
    ok = bool(flagged) and not spurious
    assert _verdict(
        10,
        ok,
        f"curvature scan flags the low-noise regime at q={[round(q, 1) for q in flagged]} "
        "and finds nothing in the high-noise regime",
    )
