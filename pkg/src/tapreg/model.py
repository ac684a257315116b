"""Synthetic regression instances and sphere geometry.

The planted model is y = x @ beta0 + sqrt(delta) * z with an n-by-p design
of i.i.d. N(0, 1/n) entries, beta0 uniform on the sphere of radius sqrt(p),
unit Gaussian noise z, and n = round(alpha * p).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import NumericalError
from .rng import substream

__all__ = [
    "ModelParams",
    "ProblemInstance",
    "OperatorNormCheck",
    "generate_instance",
    "project_to_sphere",
    "operator_norm_check",
    "instance_to_json",
    "instance_from_json",
]

_MAX_REDRAWS = 16


def fmt17(v: float) -> str:
    """Decimal text for a float with 17 significant digits (lossless round-trip)."""
    return format(float(v), ".17g")


@dataclass(frozen=True)
class ModelParams:
    """Dimensions and noise level of the planted regression model."""

    p: int
    alpha: float
    delta: float
    master_seed: int = 0

    def __post_init__(self):
        if not isinstance(self.p, (int, np.integer)) or isinstance(self.p, bool) or self.p < 1:
            raise ValueError(f"p must be a positive integer, got {self.p!r}")
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha!r}")
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise ValueError(f"delta must be positive and finite, got {self.delta!r}")
        if int(round(self.alpha * self.p)) < 1:
            raise ValueError("round(alpha * p) must be at least 1")

    @property
    def n(self) -> int:
        """Number of observations, round(alpha * p)."""
        return int(round(self.alpha * self.p))

    @property
    def alpha_realized(self) -> float:
        """Aspect ratio n / p actually realized at this finite size."""
        return self.n / self.p


@dataclass(eq=False)
class ProblemInstance:
    """One realization of the model; treat as immutable after creation.

    ``beta0`` and ``z`` are None for instances built from observed data
    (see :meth:`from_data`); everything downstream of generation only needs
    ``x`` and ``y``.
    """

    x: np.ndarray
    beta0: np.ndarray | None
    z: np.ndarray | None
    y: np.ndarray
    params: ModelParams
    stream_tag: int | tuple = 0
    _gram: tuple | None = field(default=None, repr=False)
    _gram_eigh: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=float)
        self.y = np.ascontiguousarray(self.y, dtype=float)
        if self.x.ndim != 2:
            raise ValueError("x must be a 2-d array")
        n, p = self.x.shape
        if (n, p) != (self.params.n, self.params.p):
            raise ValueError(
                f"design shape {self.x.shape} does not match params (n={self.params.n}, p={self.params.p})"
            )
        if self.y.shape != (n,):
            raise ValueError("y must have shape (n,)")
        if self.beta0 is not None:
            self.beta0 = np.ascontiguousarray(self.beta0, dtype=float)
            if self.beta0.shape != (p,):
                raise ValueError("beta0 must have shape (p,)")
        if self.z is not None:
            self.z = np.ascontiguousarray(self.z, dtype=float)
            if self.z.shape != (n,):
                raise ValueError("z must have shape (n,)")
        for arr in (self.x, self.y, self.beta0, self.z):
            if arr is not None:
                arr.setflags(write=False)

    @classmethod
    def from_data(cls, x, y, delta, master_seed=0):
        """Wrap observed (x, y) data with noise level delta; no planted signal."""
        x = np.asarray(x, dtype=float)
        n, p = x.shape
        params = ModelParams(p=p, alpha=n / p, delta=float(delta), master_seed=master_seed)
        return cls(x=x, beta0=None, z=None, y=np.asarray(y, dtype=float), params=params)

    # Cached dense factorizations shared by the solvers.  The instance is
    # immutable, so lazy fill-in is safe (worst case two threads compute the
    # same value).

    def gram(self):
        """Return (G, c, yty) with G = x'x, c = x'y, yty = y'y (cached)."""
        if self._gram is None:
            g = self.x.T @ self.x
            c = self.x.T @ self.y
            self._gram = (g, c, float(self.y @ self.y))
        return self._gram

    def gram_eigh(self):
        """Eigendecomposition of x'x: (lam ascending, V, c_eig = V'x'y) (cached)."""
        if self._gram_eigh is None:
            g, c, _ = self.gram()
            lam, vecs = scipy.linalg.eigh(g)
            lam = np.maximum(lam, 0.0)  # x'x is PSD; clip eigh round-off
            self._gram_eigh = (lam, vecs, vecs.T @ c)
        return self._gram_eigh


@dataclass(frozen=True)
class OperatorNormCheck:
    sigma_max: float
    bound: float
    within: bool


def generate_instance(params: ModelParams, stream_tag=0) -> ProblemInstance:
    """Draw one instance from its (master_seed, stream_tag) substream.

    The design, signal and noise come from separate purpose-labelled
    substreams, so regeneration is bit-identical regardless of call order.
    """
    n, p = params.n, params.p
    seed = params.master_seed
    tag = stream_tag if isinstance(stream_tag, tuple) else (stream_tag,)

    x = substream(seed, *tag, "design").standard_normal((n, p)) / math.sqrt(n)

    g_signal = substream(seed, *tag, "signal")
    for _ in range(_MAX_REDRAWS):
        raw = g_signal.standard_normal(p)
        nrm = float(np.linalg.norm(raw))
        if nrm > 0.0:
            break
    else:  # pragma: no cover - probability zero
        raise NumericalError(f"signal draw returned the zero vector {_MAX_REDRAWS} times (p={p})")
    beta0 = project_to_sphere(raw, math.sqrt(p))

    z = substream(seed, *tag, "noise").standard_normal(n)
    y = x @ beta0 + math.sqrt(params.delta) * z
    return ProblemInstance(x=x, beta0=beta0, z=z, y=y, params=params, stream_tag=stream_tag)


def project_to_sphere(v, radius: float) -> np.ndarray:
    """Rescale v onto the sphere of the given radius."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot project a non-finite vector")
    if not (np.isfinite(radius) and radius > 0):
        raise ValueError(f"radius must be positive and finite, got {radius!r}")
    nrm = float(np.linalg.norm(v))
    if nrm == 0.0:
        raise ValueError("undefined projection: cannot project the zero vector onto a sphere")
    return v * (radius / nrm)


def operator_norm_check(instance: ProblemInstance, k: float = 3.0) -> OperatorNormCheck:
    """Check sigma_max(x) against the (sqrt(n)+sqrt(p)+k)/sqrt(n) tail bound.

    The bound holds for unit-variance i.i.d. entries with probability at
    least 1 - 2 exp(-k^2/2); the 1/sqrt(n) factor rescales it to this
    model's N(0, 1/n) entries.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    n, p = instance.x.shape
    sigma_max = float(scipy.linalg.svdvals(instance.x)[0]) if instance.x.size else 0.0
    bound = (math.sqrt(n) + math.sqrt(p) + k) / math.sqrt(n)
    return OperatorNormCheck(sigma_max=sigma_max, bound=bound, within=sigma_max <= bound)


# ---------------------------------------------------------------------------
# JSON serialization.  Floats are written as decimals with 17 significant
# digits so a dump/load round trip is bit-exact and the bytes are stable.

def _fmt_vector(v) -> str:
    return "[" + ",".join(fmt17(t) for t in v) + "]"


def instance_to_json(instance: ProblemInstance) -> str:
    """Serialize a generated instance (requires beta0 and z) to JSON text."""
    if instance.beta0 is None or instance.z is None:
        raise ValueError("only generated instances (with beta0 and z) can be serialized")
    params = instance.params
    tag = instance.stream_tag
    if isinstance(tag, tuple):
        stream = "[" + ",".join(str(int(t)) for t in tag) + "]"
    else:
        stream = str(int(tag))
    rows = ",".join(_fmt_vector(row) for row in instance.x)
    parts = [
        f'"p":{params.p}',
        f'"n":{params.n}',
        f'"alpha":{fmt17(params.alpha)}',
        f'"delta":{fmt17(params.delta)}',
        f'"seed":{int(params.master_seed)}',
        f'"stream":{stream}',
        f'"x":[{rows}]',
        f'"beta0":{_fmt_vector(instance.beta0)}',
        f'"z":{_fmt_vector(instance.z)}',
        f'"y":{_fmt_vector(instance.y)}',
    ]
    return "{" + ",".join(parts) + "}"


def instance_from_json(text: str) -> ProblemInstance:
    """Rebuild an instance from :func:`instance_to_json` output."""
    doc = json.loads(text)
    try:
        params = ModelParams(
            p=int(doc["p"]),
            alpha=float(doc["alpha"]),
            delta=float(doc["delta"]),
            master_seed=int(doc["seed"]),
        )
        stream = doc["stream"]
        tag = tuple(int(t) for t in stream) if isinstance(stream, list) else int(stream)
        inst = ProblemInstance(
            x=np.array(doc["x"], dtype=float),
            beta0=np.array(doc["beta0"], dtype=float),
            z=np.array(doc["z"], dtype=float),
            y=np.array(doc["y"], dtype=float),
            params=params,
            stream_tag=tag,
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed instance document: {exc}") from exc
    if int(doc["n"]) != params.n:
        raise ValueError(f"stored n={doc['n']} inconsistent with round(alpha*p)={params.n}")
    recon = inst.x @ inst.beta0 + math.sqrt(params.delta) * inst.z
    err = float(np.linalg.norm(inst.y - recon))
    if err > 1e-9 * max(1.0, float(np.linalg.norm(inst.y))):
        raise ValueError(f"instance document violates y = x@beta0 + sqrt(delta)*z (|err|={err:.3e})")
    return inst
