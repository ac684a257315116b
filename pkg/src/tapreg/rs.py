"""Replica-symmetric potential for the Gaussian-prior scalar channel.

The potential is minimized over the error parameter E in (0, 1]; its
minimizer E_delta solves the fixed point

    E = (alpha*delta + E) / (alpha*delta + E + alpha) = sigma^2 / (sigma^2 + 1),

with effective noise sigma^2 = (alpha*delta + E) / alpha.  The asymptotic
free energy equals -i_rs(E_delta) - alpha/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError

__all__ = [
    "i_rs",
    "fixed_point_e",
    "RsSolution",
    "solve_fixed_point",
    "mmse",
    "CrossingCheck",
    "SingleCrossingReport",
    "single_crossing_suite",
]

_DAMPING = 0.5
_MAX_FIXED_POINT_ITERS = 200
_AGREEMENT_TOL = 1e-10


def _check_alpha_delta(alpha, delta):
    if not (np.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be positive and finite, got {alpha!r}")
    if not (np.isfinite(delta) and delta > 0):
        raise ValueError(f"delta must be positive and finite, got {delta!r}")


def i_rs(e: float, alpha: float, delta: float) -> float:
    """RS potential at error parameter e in (0, 1].

    Sign convention: the scalar-channel mutual information enters as
    -(1/2) log(sigma^2 / (sigma^2 + 1)), and i_rs is pinned so that
    -i_rs(E_delta) - alpha/2 is the asymptotic free energy.
    """
    _check_alpha_delta(alpha, delta)
    if not (np.isfinite(e) and 0.0 < e <= 1.0):
        raise ValueError(f"e must lie in (0, 1], got {e!r}")
    sigma_sq = (alpha * delta + e) / alpha
    channel_mi = -0.5 * math.log(sigma_sq / (sigma_sq + 1.0))
    return channel_mi + 0.5 * (alpha * math.log1p(e / (alpha * delta)) - e / sigma_sq)


def fixed_point_e(alpha: float, delta: float) -> float:
    """Closed-form minimizer E_delta of the RS potential.

    Root of E^2 + (alpha*delta + alpha - 1) E - alpha*delta = 0 in (0, 1);
    written in conjugate form when the linear coefficient dominates so no
    precision is lost at large alpha*delta.
    """
    _check_alpha_delta(alpha, delta)
    b = 1.0 - alpha - alpha * delta
    disc = math.sqrt(b * b + 4.0 * alpha * delta)
    if b < 0.0:
        return 2.0 * alpha * delta / (disc - b)
    return 0.5 * (b + disc)


@dataclass(frozen=True)
class RsSolution:
    e_delta: float
    sigma_sq: float
    i_rs_at_min: float
    free_energy: float


def solve_fixed_point(alpha: float, delta: float) -> RsSolution:
    """Solve the RS fixed point by closed form, cross-checked by damped iteration.

    The closed form is the authority; the 0.5-damped Picard iteration from
    E = 1/2 must agree with it to 1e-10 or a NumericalError is raised.
    """
    _check_alpha_delta(alpha, delta)
    e_closed = fixed_point_e(alpha, delta)

    k = alpha * delta
    e_iter = 0.5
    for _ in range(_MAX_FIXED_POINT_ITERS):
        e_next = (1.0 - _DAMPING) * e_iter + _DAMPING * (k + e_iter) / (k + e_iter + alpha)
        if abs(e_next - e_iter) <= 1e-14:
            e_iter = e_next
            break
        e_iter = e_next
    if abs(e_closed - e_iter) > _AGREEMENT_TOL:
        raise NumericalError(
            f"RS fixed point disagreement: closed form {e_closed!r} vs damped iteration "
            f"{e_iter!r} at alpha={alpha}, delta={delta}"
        )

    sigma_sq = (alpha * delta + e_closed) / alpha
    i_min = i_rs(e_closed, alpha, delta)
    return RsSolution(
        e_delta=e_closed,
        sigma_sq=sigma_sq,
        i_rs_at_min=i_min,
        free_energy=-i_min - 0.5 * alpha,
    )


# ---------------------------------------------------------------------------
# Single-crossing diagnostics for the scalar Gaussian channel with a unit
# Gaussian prior: mmse(s) = 1/(1+s), and the two noise-vs-overlap curves
# delta_fp and delta_rs coincide identically.

def mmse(s: float) -> float:
    """Scalar-channel minimum mean squared error at SNR s >= 0."""
    if not (np.isfinite(s) and s >= 0):
        raise ValueError(f"snr must be non-negative, got {s!r}")
    return 1.0 / (1.0 + s)


@dataclass(frozen=True)
class CrossingCheck:
    z: float
    delta_fp: float
    delta_rs: float
    m_rs: float
    fixed_point_residual: float


@dataclass(frozen=True)
class SingleCrossingReport:
    max_abs_gap: float
    checks: list


def single_crossing_suite(z_grid) -> SingleCrossingReport:
    """Compare the two overlap-to-noise curves on a grid of z in (0, 1).

    delta_fp(z) = (1+z)(1-z)/z comes from inverting the fixed point;
    delta_rs(z) = (1-z^2)/z from the stationarity of the RS potential.
    They agree identically; the report carries the float-level gap and, for
    each z, the residual of M = mmse(delta/(1+M)) at the quadratic root
    M_rs(delta) = (-delta + sqrt(delta^2 + 4))/2.
    """
    z_grid = np.asarray(z_grid, dtype=float)
    if z_grid.size == 0:
        raise ValueError("z grid must be non-empty")
    if not np.all((z_grid > 0.0) & (z_grid < 1.0)):
        raise ValueError("z grid must lie strictly inside (0, 1)")

    checks = []
    max_gap = 0.0
    for z in z_grid:
        d_fp = (1.0 + z) * (1.0 - z) / z
        d_rs = (1.0 - z * z) / z
        max_gap = max(max_gap, abs(d_fp - d_rs))
        m = 0.5 * (-d_rs + math.sqrt(d_rs * d_rs + 4.0))
        resid = abs(m - mmse(d_rs / (1.0 + m)))
        checks.append(
            CrossingCheck(z=float(z), delta_fp=d_fp, delta_rs=d_rs, m_rs=m, fixed_point_residual=resid)
        )
    return SingleCrossingReport(max_abs_gap=max_gap, checks=checks)
