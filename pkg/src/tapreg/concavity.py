"""Curvature probe along the design's minimal eigenvector.

At a = sqrt(p q) u_min the directional curvature (1/q)(-a' Hess f a)
reduces to a scalar formula in (q, alpha, delta, lambda_min); negative
values certify that the TAP objective is not concave there.  The
deterministic large-p proxy replaces lambda_min by its limit
(1 - sqrt(1/alpha))^2 (alpha > 1), giving, with k = alpha*delta,

    -(k + 1 + q) alpha / (k + 1 - q)^2 + (1 + q)/(1 - q)^2 + (alpha + 1 - 2 sqrt(alpha))/k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, ProblemInstance
from .tap import h_family

__all__ = [
    "MinEigpair",
    "min_eigpair",
    "CurvatureReport",
    "directional_curvature",
    "scan_nonconcavity",
]


@dataclass(frozen=True)
class MinEigpair:
    lambda_min: float
    u_min: np.ndarray


@dataclass(frozen=True)
class CurvatureReport:
    q: float
    lambda_min: float
    finite_p_value: float
    asymptotic_value: float
    nonconcave: bool


def min_eigpair(instance: ProblemInstance) -> MinEigpair:
    """Smallest eigenpair of x'x from its full symmetric eigendecomposition.

    The eigenvector sign is fixed (largest-magnitude entry positive) so
    repeated calls are bit-identical.
    """
    lam, vecs, _ = instance.gram_eigh()
    u = np.array(vecs[:, 0])
    pivot = int(np.argmax(np.abs(u)))
    if u[pivot] < 0:
        u = -u
    return MinEigpair(lambda_min=float(lam[0]), u_min=u)


def directional_curvature(
    instance: ProblemInstance, params: ModelParams | None, q: float
) -> CurvatureReport:
    """Curvature (1/q)(-a' Hess f a) at a = sqrt(p q) u_min.

    finite_p_value = 4 q h''(q) + 2 h'(q) + lambda_min/delta uses the
    realized lambda_min; asymptotic_value substitutes its alpha > 1 limit
    (nan when alpha <= 1, where the limit is 0 and the proxy untrustworthy).
    """
    params = instance.params if params is None else params
    if not (np.isfinite(q) and 0.0 < q < 1.0):
        raise ValueError(f"q must lie in (0, 1), got {q!r}")
    alpha, delta = params.alpha, params.delta
    pair = min_eigpair(instance)
    hf = h_family(q, alpha, delta)
    finite_p = 4.0 * q * hf.h2 + 2.0 * hf.h1 + pair.lambda_min / delta

    k = alpha * delta
    if alpha > 1.0:
        edge = (1.0 - math.sqrt(1.0 / alpha)) ** 2
        asymptotic = (
            -(k + 1.0 + q) * alpha / (k + 1.0 - q) ** 2
            + (1.0 + q) / (1.0 - q) ** 2
            + edge * alpha / k
        )
    else:
        asymptotic = math.nan
    return CurvatureReport(
        q=q,
        lambda_min=pair.lambda_min,
        finite_p_value=finite_p,
        asymptotic_value=asymptotic,
        nonconcave=finite_p < 0.0,
    )


def scan_nonconcavity(
    instance: ProblemInstance, params: ModelParams | None = None, q_grid=None
) -> list[CurvatureReport]:
    """Curvature reports over a grid of overlaps (use any(r.nonconcave) to summarize)."""
    if q_grid is None:
        q_grid = np.arange(0.1, 0.91, 0.1)
    q_grid = np.asarray(q_grid, dtype=float)
    if q_grid.size == 0:
        raise ValueError("q grid must be non-empty")
    return [directional_curvature(instance, params, float(q)) for q in q_grid]
