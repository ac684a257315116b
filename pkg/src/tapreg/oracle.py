"""Reference free energies used to cross-validate the TAP value.

The Gaussian-prior log-partition has a closed form (Gaussian integral); the
spherical-prior one is estimated by plain Monte Carlo over the sphere with a
bootstrap confidence interval.  Both are per-coordinate: (1/p) log Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import logsumexp

from .exceptions import NumericalError
from .model import ModelParams, ProblemInstance
from .rng import substream

__all__ = [
    "RidgeSolution",
    "ridge_solve",
    "FreeEnergyEstimate",
    "gaussian_log_partition",
    "mc_spherical_free_energy",
    "tap_ridge_distance",
]

_MC_BLOCK = 1 << 16
_BOOTSTRAP_RESAMPLES = 1000


@dataclass(frozen=True)
class RidgeSolution:
    a_delta: np.ndarray
    norm_sq_over_p: float
    residual_over_p: float


@dataclass(frozen=True)
class FreeEnergyEstimate:
    value: float
    method: str
    samples: int | None = None
    ci_low: float | None = None
    ci_high: float | None = None


def _resolve_params(instance: ProblemInstance, params: ModelParams | None) -> ModelParams:
    return instance.params if params is None else params


def ridge_solve(instance: ProblemInstance, params: ModelParams | None = None) -> RidgeSolution:
    """Ridge solution a = (x'x + delta I)^{-1} x'y via an SPD solve.

    For n < p the equivalent n-by-n system a = x'(x x' + delta I)^{-1} y is
    solved instead.
    """
    params = _resolve_params(instance, params)
    n, p = instance.x.shape
    delta = params.delta
    try:
        if n >= p:
            g, c, _ = instance.gram()
            a = scipy.linalg.solve(g + delta * np.eye(p), c, assume_a="pos")
        else:
            k = instance.x @ instance.x.T
            w = scipy.linalg.solve(k + delta * np.eye(n), instance.y, assume_a="pos")
            a = instance.x.T @ w
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - SPD by construction
        raise NumericalError(f"ridge system solve failed: {exc}") from exc
    r = instance.y - instance.x @ a
    return RidgeSolution(
        a_delta=a,
        norm_sq_over_p=float(a @ a) / p,
        residual_over_p=float(r @ r) / p,
    )


def gaussian_log_partition(instance: ProblemInstance, params: ModelParams | None = None) -> FreeEnergyEstimate:
    """Exact (1/p) log-partition under the N(0, I_p) prior.

    value = (1/p) [ -(1/2) log det(I + x'x/delta) + y'x a_delta/(2 delta)
                    - y'y/(2 delta) ],
    with the log-determinant from a Cholesky factorization.
    """
    params = _resolve_params(instance, params)
    g, c, yty = instance.gram()
    p = params.p
    delta = params.delta
    m = np.eye(p) + g / delta
    try:
        chol, lower = scipy.linalg.cho_factor(m, lower=True)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - M >= I
        raise NumericalError(f"log-determinant factorization failed: {exc}") from exc
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    a_delta = scipy.linalg.cho_solve((chol, lower), c) / delta
    value = (-0.5 * logdet + float(c @ a_delta) / (2.0 * delta) - yty / (2.0 * delta)) / p
    return FreeEnergyEstimate(value=value, method="gaussian-exact")


def mc_spherical_free_energy(
    instance: ProblemInstance,
    params: ModelParams | None = None,
    samples: int = 200_000,
    stream_tag=None,
) -> FreeEnergyEstimate:
    """Monte Carlo (1/p) log-partition under the uniform sqrt(p)-sphere prior.

    Samples are drawn in fixed-size blocks, each from its own RNG substream,
    so the estimate is independent of scheduling; the log-mean uses a
    max-shifted log-sum-exp.  The 95% CI comes from a 1000-resample
    bootstrap of the per-sample log-weights (clipped to contain the point
    estimate).
    """
    params = _resolve_params(instance, params)
    if not isinstance(samples, (int, np.integer)) or samples < 1000:
        raise ValueError(f"samples must be an integer >= 1000, got {samples!r}")
    tag = instance.stream_tag if stream_tag is None else stream_tag
    tag = tag if isinstance(tag, tuple) else (tag,)
    p = params.p
    delta = params.delta
    sqrt_p = math.sqrt(p)

    logs = np.empty(samples)
    done = 0
    block_index = 0
    while done < samples:
        m = min(_MC_BLOCK, samples - done)
        gen = substream(params.master_seed, *tag, "mc-sphere", block_index)
        beta = gen.standard_normal((m, p))
        norms = np.linalg.norm(beta, axis=1)
        if np.any(norms == 0.0):  # pragma: no cover - probability zero
            raise NumericalError("sphere sampler drew a zero vector")
        beta *= (sqrt_p / norms)[:, None]
        resid = instance.y[None, :] - beta @ instance.x.T
        logs[done : done + m] = -np.einsum("ij,ij->i", resid, resid) / (2.0 * delta)
        done += m
        block_index += 1

    if not np.isfinite(logs.max()):  # pragma: no cover - log-weights are finite by construction
        raise NumericalError("all spherical MC weights underflowed; increase delta or samples")
    log_n = math.log(samples)
    value = (float(logsumexp(logs)) - log_n) / p

    boot = substream(params.master_seed, *tag, "mc-bootstrap")
    resampled = np.empty(_BOOTSTRAP_RESAMPLES)
    for j in range(_BOOTSTRAP_RESAMPLES):
        idx = boot.integers(0, samples, samples)
        resampled[j] = (float(logsumexp(logs[idx])) - log_n) / p
    ci_low, ci_high = np.percentile(resampled, [2.5, 97.5])
    return FreeEnergyEstimate(
        value=value,
        method="spherical-mc",
        samples=int(samples),
        ci_low=min(float(ci_low), value),
        ci_high=max(float(ci_high), value),
    )


def tap_ridge_distance(a_hat, a_delta) -> float:
    """Normalized squared distance (1/p) |a_hat - a_delta|^2."""
    a_hat = np.asarray(a_hat, dtype=float)
    a_delta = np.asarray(a_delta, dtype=float)
    if a_hat.shape != a_delta.shape or a_hat.ndim != 1 or a_hat.size == 0:
        raise ValueError(f"expected two equal-length vectors, got {a_hat.shape} and {a_delta.shape}")
    diff = a_hat - a_delta
    return float(diff @ diff) / a_hat.size
