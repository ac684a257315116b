"""TAP free energy for spherical-prior linear regression, exact at finite p.

For a in the open ball |a|^2 < p, with overlap q = |a|^2 / p,

    f(a) = -|y - x a|^2 / (2 delta p) - h(q),

where h collects the Onsager and entropy terms,

    h(q) = (alpha/2) log(1 + (1-q)/(delta*alpha)) - (1/2) log(1-q).

Points with q >= 1 get the -inf sentinel (never an exception).  All
derivative evaluations require q <= 1 - EPS_Q to stay clear of the entropy
singularity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, ProblemInstance
from .rs import fixed_point_e

__all__ = [
    "EPS_Q",
    "HFamily",
    "h_family",
    "TapEvaluation",
    "f_tap",
    "grad_f_tap",
    "hessian_quadratic_form",
    "surrogate_constant_c",
    "gap",
    "GPoint",
    "g_pair",
]

EPS_Q = 1e-8  # derivative domain guard: q <= 1 - EPS_Q


@dataclass(frozen=True)
class HFamily:
    h: float
    h1: float
    h2: float


def h_family(q: float, alpha: float, delta: float) -> HFamily:
    """h(q) and its first two derivatives on 0 <= q < 1."""
    if not (np.isfinite(alpha) and alpha > 0):
        raise ValueError(f"alpha must be positive and finite, got {alpha!r}")
    if not (np.isfinite(delta) and delta > 0):
        raise ValueError(f"delta must be positive and finite, got {delta!r}")
    if not (np.isfinite(q) and 0.0 <= q < 1.0):
        raise ValueError(f"entropy singularity: q must lie in [0, 1), got {q!r}")
    k = delta * alpha
    omq = 1.0 - q
    h = 0.5 * alpha * math.log1p(omq / k) - 0.5 * math.log(omq)
    h1 = -0.5 * alpha / (k + omq) + 0.5 / omq
    h2 = -0.5 * alpha / (k + omq) ** 2 + 0.5 / omq**2
    return HFamily(h=h, h1=h1, h2=h2)


@dataclass(frozen=True)
class TapEvaluation:
    """Value and additive decomposition; value is -inf whenever q >= 1."""

    value: float
    q: float
    residual_term: float
    onsager_term: float
    entropy_term: float


def _resolve_params(instance: ProblemInstance, params: ModelParams | None) -> ModelParams:
    return instance.params if params is None else params


def _check_point(a, p: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape != (p,):
        raise ValueError(f"point must have shape ({p},), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("point must be finite")
    return a


def f_tap(a, instance: ProblemInstance, params: ModelParams | None = None) -> TapEvaluation:
    """Evaluate the TAP free energy at a (returns the term decomposition)."""
    params = _resolve_params(instance, params)
    a = _check_point(a, params.p)
    r = instance.y - instance.x @ a
    residual_term = -float(r @ r) / (2.0 * params.delta * params.p)
    q = float(a @ a) / params.p

    if q >= 1.0:
        k = params.delta * params.alpha
        arg = 1.0 + (1.0 - q) / k
        onsager = -0.5 * params.alpha * math.log(arg) if arg > 0.0 else math.nan
        return TapEvaluation(
            value=-math.inf,
            q=q,
            residual_term=residual_term,
            onsager_term=onsager,
            entropy_term=-math.inf,
        )

    hf = h_family(q, params.alpha, params.delta)
    onsager_term = -0.5 * params.alpha * math.log1p((1.0 - q) / (params.delta * params.alpha))
    entropy_term = 0.5 * math.log(1.0 - q)
    return TapEvaluation(
        value=residual_term - hf.h,
        q=q,
        residual_term=residual_term,
        onsager_term=onsager_term,
        entropy_term=entropy_term,
    )


def _check_derivative_domain(q: float) -> None:
    if q > 1.0 - EPS_Q:
        raise ValueError(
            f"entropy singularity: derivative evaluations need q <= 1 - {EPS_Q:g}, got q={q!r}"
        )


def grad_f_tap(a, instance: ProblemInstance, params: ModelParams | None = None) -> np.ndarray:
    """Gradient x'(y - x a)/(delta p) - (2 h'(q)/p) a."""
    params = _resolve_params(instance, params)
    a = _check_point(a, params.p)
    q = float(a @ a) / params.p
    _check_derivative_domain(q)
    hf = h_family(q, params.alpha, params.delta)
    return instance.x.T @ (instance.y - instance.x @ a) / (params.delta * params.p) - (
        2.0 * hf.h1 / params.p
    ) * a


def hessian_quadratic_form(a, v, instance: ProblemInstance, params: ModelParams | None = None) -> float:
    """v' Hess f(a) v without forming the p-by-p Hessian.

    From -p Hess f = (4/p) h''(q) a a' + 2 h'(q) I + x'x / delta.
    """
    params = _resolve_params(instance, params)
    a = _check_point(a, params.p)
    v = _check_point(v, params.p)
    q = float(a @ a) / params.p
    _check_derivative_domain(q)
    hf = h_family(q, params.alpha, params.delta)
    xv = instance.x @ v
    quad = (
        (4.0 / params.p) * hf.h2 * float(a @ v) ** 2
        + 2.0 * hf.h1 * float(v @ v)
        + float(xv @ xv) / params.delta
    )
    return -quad / params.p


def surrogate_constant_c(alpha: float, delta: float) -> float:
    """Constant C tying the linear surrogate -q/2 + C to the RS free energy.

    C = (1 - E)/2 - (alpha/2) log(1 + E/(delta*alpha)) + (1/2) log E at the
    RS fixed point E = E_delta, so C - alpha/2 is the RS free energy.
    """
    e = fixed_point_e(alpha, delta)
    return 0.5 * (1.0 - e) - 0.5 * alpha * math.log1p(e / (delta * alpha)) + 0.5 * math.log(e)


def gap(q: float, alpha: float, delta: float) -> float:
    """Deterministic dominance margin g(q) - g_tap(q) = h(q) - q/2 + C.

    Non-negative on [0, 1) with a double root at q = 1 - E_delta; the
    instance-dependent constrained-fit term cancels in the difference.
    """
    hf = h_family(q, alpha, delta)
    return hf.h - 0.5 * q + surrogate_constant_c(alpha, delta)


@dataclass(frozen=True)
class GPoint:
    q: float
    g_tap: float
    g: float


def g_pair(q: float, instance: ProblemInstance, params: ModelParams | None = None) -> GPoint:
    """Evaluate the constrained profile g_tap(q) and its surrogate g(q).

    Both share max over |a|^2 = pq of -|y - xa|^2/(2 delta p); g_tap
    subtracts h(q) while g subtracts q/2 - C.
    """
    params = _resolve_params(instance, params)
    if not (np.isfinite(q) and 0.0 <= q < 1.0):
        raise ValueError(f"q must lie in [0, 1), got {q!r}")

    if q == 0.0:
        rss = float(instance.y @ instance.y)
    else:
        from .solver import constrained_least_squares

        sol = constrained_least_squares(instance, math.sqrt(params.p * q))
        r = instance.y - instance.x @ sol.a_mu
        rss = float(r @ r)

    best_fit = -rss / (2.0 * params.delta * params.p)
    hf = h_family(q, params.alpha, params.delta)
    c = surrogate_constant_c(params.alpha, params.delta)
    return GPoint(q=q, g_tap=best_fit - hf.h, g=best_fit - 0.5 * q + c)
