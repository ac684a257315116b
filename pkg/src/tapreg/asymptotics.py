"""High-dimensional limits for the ridge estimator and the design spectrum.

The central quantity is

    T(t) = ( 1 - alpha - t*alpha + sqrt((1 - alpha - t*alpha)^2 + 4*alpha*t) ) / 2,

the limit of t * (1/p) tr((x'x + t I)^{-1}) under the N(0, 1/n) design with
n/p -> alpha.  Everything else in this module is written in terms of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "stieltjes_T",
    "trace_inverse_limit",
    "lambda_min_limit",
    "RidgeAsymptotics",
    "ridge_asymptotics",
]


def stieltjes_T(t: float, alpha: float) -> float:
    """Evaluate T(t) for regularizer t >= 0 and aspect ratio alpha > 0.

    Uses the conjugate form 2*alpha*t / (sqrt(b^2 + 4*alpha*t) - b) when
    b = 1 - alpha - t*alpha < 0, avoiding the cancellation that makes the
    textbook root formula lose all precision for large t or alpha.
    """
    if not (np.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be positive and finite, got {alpha!r}")
    if not (np.isfinite(t) and t >= 0):
        raise ValueError(f"t must be non-negative and finite, got {t!r}")
    b = 1.0 - alpha - t * alpha
    disc = math.sqrt(b * b + 4.0 * alpha * t)
    if b < 0.0:
        return 2.0 * alpha * t / (disc - b)
    return 0.5 * (b + disc)


def trace_inverse_limit(t: float, alpha: float) -> float:
    """Limit of (1/p) tr((x'x + t I)^{-1}), equal to T(t)/t (t > 0)."""
    if not (np.isfinite(t) and t > 0):
        raise ValueError(f"t must be positive and finite, got {t!r}")
    return stieltjes_T(t, alpha) / t


def lambda_min_limit(alpha: float) -> float:
    """Limiting smallest eigenvalue (1 - sqrt(1/alpha))^2 of x'x, alpha > 1 only."""
    if not alpha > 1:
        raise ValueError("the smallest-eigenvalue limit is exposed for alpha > 1 only")
    return (1.0 - math.sqrt(1.0 / alpha)) ** 2


@dataclass(frozen=True)
class RidgeAsymptotics:
    """Limits of the ridge solution a_delta = (x'x + delta I)^{-1} x'y."""

    t_delta: float           # T(delta)
    q_delta: float           # limit of |a_delta|^2 / p
    residual_limit: float    # limit of |y - x a_delta|^2 / p
    tap_at_ridge: float      # limit of the TAP value at a_delta
    lambda_min_limit: float | None  # (1 - sqrt(1/alpha))^2, None unless alpha > 1


def ridge_asymptotics(alpha: float, delta: float) -> RidgeAsymptotics:
    """Deterministic p -> infinity limits of the ridge estimator's statistics."""
    if not (np.isfinite(delta) and delta > 0):
        raise ValueError(f"delta must be positive and finite, got {delta!r}")
    t_delta = stieltjes_T(delta, alpha)
    q_delta = 1.0 - t_delta
    residual_limit = delta * t_delta + delta * (alpha - 1.0)
    tap_at_ridge = (
        -0.5 * alpha
        + 0.5 * q_delta
        - 0.5 * alpha * math.log1p(t_delta / (delta * alpha))
        + 0.5 * math.log(t_delta)
    )
    lam = lambda_min_limit(alpha) if alpha > 1 else None
    return RidgeAsymptotics(
        t_delta=t_delta,
        q_delta=q_delta,
        residual_limit=residual_limit,
        tap_at_ridge=tap_at_ridge,
        lambda_min_limit=lam,
    )
