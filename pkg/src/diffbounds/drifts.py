"""Exact and approximate drift fields for Langevin-type diffusions.

A drift field is a vector field on R^d used as the deterministic part of
a diffusion.  The constructors here produce the exact gradient drift of a
target, constant perturbations of it, a precomputed linearization around
an expansion point, a tail regularizer that restores inward pointing
error far from the origin, and a stochastic drift driven by an auxiliary
Ornstein-Uhlenbeck process.

Fields evaluate batched: (d,) -> (d,) and (m, d) -> (m, d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bounds import glm_constants
from .metrics import SampleSet
from .targets import find_mode

__all__ = [
    "DriftField",
    "StochasticDriftSpec",
    "exact_drift",
    "offset_drift",
    "taylor2_drift",
    "taylor_remainder_bound",
    "tail_regularized_drift",
    "ou_stochastic_drift",
    "drift_error_sup",
    "mode_cloud_probe",
]


@dataclass(frozen=True, eq=False)
class DriftField:
    """Vector field with optional Lipschitz constant and provenance label.

    fn must accept a single point (d,) or a batch (m, d) and return the
    matching shape; every constructor in this module guarantees that.
    """

    dim: int
    fn: Callable[[np.ndarray], np.ndarray]
    lipschitz: float | None = None
    label: str = ""

    def __call__(self, x) -> np.ndarray:
        return self.fn(np.asarray(x, dtype=float))


@dataclass(frozen=True, eq=False)
class StochasticDriftSpec:
    """Drift b~(x, y) depending on an auxiliary diffusion dY = b_aux(Y)dt + S dW.

    aux_noise is the noise coefficient matrix S (an aux_dim x aux_dim
    array); combine(x, y) is the drift applied to the primary coordinate.
    """

    base: DriftField
    aux_dim: int
    aux_drift: Callable[[np.ndarray], np.ndarray]
    aux_noise: np.ndarray
    combine: Callable[[np.ndarray, np.ndarray], np.ndarray]
    label: str = ""


def exact_drift(model) -> DriftField:
    """The gradient field of the model's log density."""
    return DriftField(
        dim=model.dim,
        fn=model.grad_log_density,
        lipschitz=getattr(model, "lipschitz", None),
        label=f"grad-log[{getattr(model, 'name', 'model')}]",
    )


def offset_drift(field: DriftField, eps) -> DriftField:
    """field plus a constant vector; the sup drift error is exactly ||eps||_2."""
    eps = np.broadcast_to(np.atleast_1d(np.asarray(eps, dtype=float)), (field.dim,)).copy()
    if not np.all(np.isfinite(eps)):
        raise ValueError("offset must be finite")
    return DriftField(
        dim=field.dim,
        fn=lambda x: field(x) + eps,
        lipschitz=field.lipschitz,
        label=f"{field.label}+offset",
    )


def taylor2_drift(model, x_star=None) -> DriftField:
    """Linearized drift A (x - x*), A the log-density Hessian at x*.

    This is the gradient of the second-order expansion of log density
    around x*, dropping the constant gradient term when x* is a mode (the
    expansion point defaults to the mode).  The matrix is precomputed, so
    each evaluation is one d x d product regardless of data size.
    """
    hess = getattr(model, "hessian", None)
    if hess is None:
        raise ValueError("model has no second derivatives; cannot linearize")
    link = getattr(model, "link", None)
    if link is not None and link.d2 is None:
        raise ValueError("link function lacks a second derivative")
    x_star = find_mode(model) if x_star is None else np.atleast_1d(np.asarray(x_star, dtype=float))
    if x_star.shape != (model.dim,):
        raise ValueError(f"x_star must have shape ({model.dim},)")
    A = np.asarray(hess(x_star), dtype=float)
    if A.shape != (model.dim, model.dim):
        raise ValueError(f"hessian has shape {A.shape}, expected square of size {model.dim}")
    At = A.T.copy()
    return DriftField(
        dim=model.dim,
        fn=lambda x: (x - x_star) @ At,
        lipschitz=float(np.linalg.norm(A, 2)),
        label="taylor2",
    )


def taylor_remainder_bound(model, radius: float) -> float:
    """Analytic bound sqrt(d) radius^2 M_N on ||b - b_taylor2|| within the radius.

    M_N aggregates third-derivative bounds of the prior and links; the
    bound holds for ||x - x*|| <= radius.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    M_N = glm_constants(model).M_N
    return math.sqrt(model.dim) * radius * radius * M_N


def tail_regularized_drift(field: DriftField, eps: float, R: float) -> DriftField:
    """Add an inward radial term that activates between R/2 and R.

    The added vector is

        -(eps/2) g(||x||) x/||x||,   g(r) = clip(2r/R - 1, 0, 1),

    i.e. zero inside the R/2 ball, ramping linearly to magnitude eps/2 at
    radius R and constant beyond.  It is the exact gradient of a
    continuous radial potential, so exp of that potential is a valid
    density tilt; for a field within eps/2 of a reference drift b, the
    regularized field stays within eps of b and satisfies
    x . (b(x) - b_R(x)) >= 0 outside the R ball.
    """
    if not (eps > 0):
        raise ValueError(f"eps must be positive, got {eps}")
    if not (R > 0):
        raise ValueError(f"R must be positive, got {R}")

    def fn(x):
        base = field(x)
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        g = np.clip(2.0 * r / R - 1.0, 0.0, 1.0)
        # at r = 0 the ramp is inactive (g = 0); guard the division anyway
        tilt = -0.5 * eps * g * x / np.where(r > 0.0, r, 1.0)
        return base + tilt

    return DriftField(dim=field.dim, fn=fn, lipschitz=None,
                      label=f"{field.label}+tail-reg")


def ou_stochastic_drift(base: DriftField, alpha: float, v: float) -> StochasticDriftSpec:
    """Stochastic drift b~(x, y) = base(x) + y with OU auxiliary noise.

    The auxiliary process dY = -alpha Y dt + sqrt(2v) dW has stationary law
    N(0, (v/alpha) I), so the added term is mean zero under the stationary
    auxiliary law.
    """
    if not (alpha > 0 and v > 0):
        raise ValueError("alpha and v must be positive")
    d = base.dim
    return StochasticDriftSpec(
        base=base,
        aux_dim=d,
        aux_drift=lambda y: -alpha * np.asarray(y, dtype=float),
        aux_noise=math.sqrt(2.0 * v) * np.eye(d),
        combine=lambda x, y: base(x) + y,
        label=f"{base.label}+ou(alpha={alpha:g},v={v:g})",
    )


def drift_error_sup(a: DriftField, b: DriftField, probe: SampleSet) -> float:
    """Max over probe points of ||a(x) - b(x)||_2; a lower bound on the true sup."""
    if a.dim != b.dim:
        raise ValueError(f"field dimensions differ: {a.dim} vs {b.dim}")
    if probe.dim != a.dim:
        raise ValueError(f"probe dimension {probe.dim} does not match fields ({a.dim})")
    if probe.n < 1:
        raise ValueError("probe is empty")
    diff = a(probe.points) - b(probe.points)
    return float(np.max(np.linalg.norm(diff, axis=1)))


def mode_cloud_probe(center, scale: float, n: int, seed: int) -> SampleSet:
    """Gaussian probe cloud around a point, for empirical drift-error scans."""
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if n < 1:
        raise ValueError("need n >= 1")
    if not (scale >= 0):
        raise ValueError("scale must be nonnegative")
    rng = np.random.default_rng(seed)
    pts = center + scale * rng.standard_normal((n, center.size))
    return SampleSet(points=pts, label="mode-cloud", seed=seed)
