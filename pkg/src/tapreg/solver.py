"""Maximization of the TAP free energy over the ball |a|^2 <= p (1 - eps).

Two solvers live here:

* `constrained_least_squares` — minimize |y - x a| subject to |a| = radius,
  via bisection on the shift mu in (x'x + mu I) a = x'y, whose solution norm
  is strictly decreasing in mu on (-lambda_min, inf).  When x'y has (nearly)
  no component on the minimal eigenspace the shifted family cannot reach the
  radius (hard case); the solver then pads the limit solution with a
  minimal-eigenvector component.

* `maximize_tap` — multi-restart projected gradient ascent with a
  backtracking (Armijo) line search, iterating on the cached Gram form so a
  step costs O(p^2) regardless of n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError
from .model import ModelParams, ProblemInstance
from .oracle import ridge_solve
from .rng import substream
from .tap import EPS_Q, GPoint, f_tap, g_pair, h_family

__all__ = [
    "SecularSolution",
    "constrained_least_squares",
    "SolverOptions",
    "OptResult",
    "maximize_tap",
    "profile_over_q",
]

_HARD_CASE_TOL = 1e-10   # eigenvalues within this (relative) of lambda_min count as minimal
_NORM_SQ_TOL = 1e-9      # acceptable |  |a|^2 - radius^2 | / max(1, radius^2)
_MAX_BISECT = 300


@dataclass(frozen=True)
class SecularSolution:
    """Solution of the sphere-constrained least-squares problem.

    norm_gap is |  |a_mu|^2 - radius^2 | from the bisection, or, in the hard
    case, the squared mass tau^2 that had to be padded along the minimal
    eigenvector to reach the radius.
    """

    mu: float
    a_mu: np.ndarray
    norm_gap: float
    hard_case: bool = False


def constrained_least_squares(instance: ProblemInstance, radius: float) -> SecularSolution:
    """Minimize |y - x a| over the sphere |a| = radius."""
    if not (np.isfinite(radius) and radius > 0):
        raise ValueError(f"radius must be positive and finite, got {radius!r}")
    lam, vecs, ceig = instance.gram_eigh()
    p = lam.shape[0]

    # Null-direction cleanup: x'y lies in the row space of x, so its
    # coordinates on (near-)zero eigenvalues are pure round-off.  Dropping
    # them keeps phi(mu) from being polluted near mu = 0 when n < p.
    scale = float(lam[-1]) if lam[-1] > 0 else 1.0
    rank_tol = scale * max(instance.x.shape) * np.finfo(float).eps
    ceig = np.where(lam > rank_tol, ceig, 0.0)

    lam_min = float(lam[0])
    target = radius * radius

    def phi(mu: float) -> float:
        return float(np.sum((ceig / (lam + mu)) ** 2))

    mu_lo = -lam_min + 1e-12 * max(1.0, lam_min)
    if phi(mu_lo) < target:
        # Hard case: the shifted family tops out below the radius.  Take the
        # mu -> -lambda_min limit on the non-minimal directions and pad the
        # deficit along the minimal eigenvector.
        minimal = lam - lam_min <= _HARD_CASE_TOL * max(1.0, scale)
        coords = np.where(minimal, 0.0, ceig / np.where(minimal, 1.0, lam - lam_min))
        reach = float(coords @ coords)
        tau_sq = max(target - reach, 0.0)
        coords[0] += math.sqrt(tau_sq)
        a = vecs @ coords
        return SecularSolution(mu=-lam_min, a_mu=a, norm_gap=tau_sq, hard_case=True)

    # Bracket: phi(mu_lo) >= target; grow mu_hi until phi(mu_hi) <= target.
    mu_hi = max(1.0, float(np.linalg.norm(ceig)) / radius)
    for _ in range(200):
        if phi(mu_hi) <= target:
            break
        mu_hi *= 2.0
    else:  # pragma: no cover - phi(mu) <= |c|^2/mu^2 forces termination
        raise NumericalError(f"could not bracket the secular root (radius={radius})")

    lo, hi = mu_lo, mu_hi
    mu = 0.5 * (lo + hi)
    val = phi(mu)
    for _ in range(_MAX_BISECT):
        if abs(val - target) <= 1e-12 * max(1.0, target):
            break
        if val > target:
            lo = mu
        else:
            hi = mu
        nxt = 0.5 * (lo + hi)
        if nxt == mu or hi - lo <= np.finfo(float).eps * max(1.0, abs(hi)):
            break
        mu = nxt
        val = phi(mu)

    norm_gap = abs(val - target)
    if norm_gap > _NORM_SQ_TOL * max(1.0, target):
        raise NumericalError(
            f"secular bisection stalled: |a(mu)|^2={val!r} vs target={target!r} "
            f"with bracket [{lo!r}, {hi!r}]"
        )
    a = vecs @ (ceig / (lam + mu))
    return SecularSolution(mu=float(mu), a_mu=a, norm_gap=norm_gap, hard_case=False)


@dataclass(frozen=True)
class SolverOptions:
    """Knobs for maximize_tap; defaults are the reference configuration."""

    restarts: int = 8
    max_iters: int = 5000
    grad_tol: float | None = None  # None -> 1e-8 * sqrt(p)
    q_init_list: tuple = (0.1, 0.3, 0.5, 0.7, 0.9, 0.5, 0.5)
    armijo: float = 1e-4
    backtrack: float = 0.5
    stream_tag: int | tuple | None = None  # None -> instance.stream_tag

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("need at least one restart")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not 0.0 < self.backtrack < 1.0:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if not 0.0 < self.armijo < 1.0:
            raise ValueError("armijo constant must lie in (0, 1)")
        for q in self.q_init_list:
            if not 0.0 < q <= 1.0 - EPS_Q:
                raise ValueError(f"restart overlap {q!r} outside (0, 1 - eps]")


@dataclass(frozen=True)
class OptResult:
    a_hat: np.ndarray
    f_value: float
    grad_norm: float
    iterations: int
    restarts_used: int
    converged: bool
    q_final: float


class _BallProblem:
    """TAP objective in Gram form on the ball |a|^2 <= p (1 - eps)."""

    def __init__(self, instance: ProblemInstance, params: ModelParams):
        self.g, self.c, self.yty = instance.gram()
        self.p = params.p
        self.alpha = params.alpha
        self.delta = params.delta
        self.rad2 = params.p * (1.0 - EPS_Q)
        # Cheap curvature bound (|G|_1 >= lambda_max) used to seed the step size.
        self.lip = (float(np.linalg.norm(self.g, 1)) / self.delta + 3.0) / self.p

    def value(self, a, ga) -> float:
        q = float(a @ a) / self.p
        rss = max(self.yty - 2.0 * float(self.c @ a) + float(a @ ga), 0.0)
        hf = h_family(q, self.alpha, self.delta)
        return -rss / (2.0 * self.delta * self.p) - hf.h

    def grad(self, a, ga):
        q = float(a @ a) / self.p
        hf = h_family(q, self.alpha, self.delta)
        return (self.c - ga) / (self.delta * self.p) - (2.0 * hf.h1 / self.p) * a

    def clip_to_ball(self, a):
        nn = float(a @ a)
        if nn > self.rad2:
            return a * math.sqrt(self.rad2 / nn)
        return a

    def feasible_grad_norm(self, a, grad) -> float:
        """Norm of the gradient projected onto feasible directions."""
        nn = float(a @ a)
        if nn >= self.rad2 * (1.0 - 1e-12):
            unit = a / math.sqrt(nn)
            outward = max(float(grad @ unit), 0.0)
            return float(np.linalg.norm(grad - outward * unit))
        return float(np.linalg.norm(grad))


def _ascend(problem: _BallProblem, a0: np.ndarray, opts: SolverOptions, grad_tol: float):
    """Projected gradient ascent from a0; returns (a, f, grad_norm, iters, converged, accepted)."""
    a = problem.clip_to_ball(np.array(a0, dtype=float))
    ga = problem.g @ a
    fval = problem.value(a, ga)
    step = 1.0 / problem.lip  # line search adapts from here
    step_cap = 1e6 * step
    accepted_total = 0
    iters = 0
    grad_norm = math.inf
    converged = False

    for iters in range(1, opts.max_iters + 1):
        grad = problem.grad(a, ga)
        grad_norm = problem.feasible_grad_norm(a, grad)
        if grad_norm <= grad_tol:
            converged = True
            break

        t = step
        accepted = False
        for _ in range(60):
            a_new = problem.clip_to_ball(a + t * grad)
            ga_new = problem.g @ a_new
            f_new = problem.value(a_new, ga_new)
            gain = f_new - fval
            if gain > 0.0 and gain >= opts.armijo * float(grad @ (a_new - a)):
                accepted = True
                break
            t *= opts.backtrack
        if not accepted:
            break  # line search exhausted: stalled (flat to float precision)
        a, ga, fval = a_new, ga_new, f_new
        step = min(t * 2.0, step_cap)
        accepted_total += 1

    return a, fval, grad_norm, iters, converged, accepted_total


def maximize_tap(
    instance: ProblemInstance,
    params: ModelParams | None = None,
    opts: SolverOptions | None = None,
) -> OptResult:
    """Best TAP value over the ball from multi-restart projected ascent.

    Restart 0 starts at the ridge solution; the rest start at uniform-random
    points with overlaps cycling through opts.q_init_list, each drawn from
    its own RNG substream so the result is schedule-independent.
    """
    params = instance.params if params is None else params
    opts = SolverOptions() if opts is None else opts
    p = params.p
    grad_tol = opts.grad_tol if opts.grad_tol is not None else 1e-8 * math.sqrt(p)
    tag = opts.stream_tag if opts.stream_tag is not None else instance.stream_tag
    tag = tag if isinstance(tag, tuple) else (tag,)

    problem = _BallProblem(instance, params)
    inits = [ridge_solve(instance, params).a_delta]
    for i in range(opts.restarts - 1):
        q0 = opts.q_init_list[i % len(opts.q_init_list)]
        v = substream(params.master_seed, *tag, "tap-init", i).standard_normal(p)
        nrm = float(np.linalg.norm(v))
        if nrm == 0.0:  # pragma: no cover - probability zero
            raise NumericalError("restart draw returned the zero vector")
        inits.append(v * (math.sqrt(p * q0) / nrm))

    best = None
    any_progress = False
    diagnostics = []
    for a0 in inits:
        a, fval, grad_norm, iters, converged, accepted = _ascend(problem, a0, opts, grad_tol)
        any_progress = any_progress or accepted > 0 or converged
        diagnostics.append((fval, grad_norm, iters, converged))
        if best is None or fval > best[1]:
            best = (a, fval, grad_norm, iters, converged)

    if not any_progress:
        raise NumericalError(
            f"no restart could increase the objective; per-restart (f, grad, iters, converged): {diagnostics}"
        )

    a_hat, _, grad_norm, iters, converged = best
    evaluation = f_tap(a_hat, instance, params)
    return OptResult(
        a_hat=a_hat,
        f_value=evaluation.value,
        grad_norm=grad_norm,
        iterations=iters,
        restarts_used=len(inits),
        converged=converged,
        q_final=evaluation.q,
    )


def profile_over_q(instance: ProblemInstance, params: ModelParams | None = None, q_grid=None) -> list[GPoint]:
    """Constrained profile g_tap and surrogate g on a grid of overlaps."""
    if q_grid is None:
        q_grid = np.arange(0.05, 0.951, 0.05)
    q_grid = np.asarray(q_grid, dtype=float)
    if q_grid.size == 0:
        raise ValueError("q grid must be non-empty")
    if not np.all((q_grid >= 0.0) & (q_grid <= 1.0 - EPS_Q)):
        raise ValueError(f"q grid must lie in [0, 1 - {EPS_Q:g}]")
    return [g_pair(float(q), instance, params) for q in q_grid]
