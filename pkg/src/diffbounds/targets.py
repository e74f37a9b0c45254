"""Target density families with hand-coded gradients and analytic structure.

Three families cover the experiments: isotropic Gaussians, symmetric
two-component Gaussian mixtures, and GLM posteriors (a smooth prior plus
a sum of scalar link functions of inner products with data vectors).
Densities are unnormalized throughout; nothing here ever needs a
normalizing constant.

Evaluation is vectorized: log densities and gradients accept a single
point of shape (d,) or a batch of shape (m, d).  Hessians are pointwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import expit

from .bounds import glm_constants, GLMConstants
from .metrics import SampleSet

__all__ = [
    "Gaussian",
    "GaussianMixture2",
    "LinkFunction",
    "logistic_link",
    "GLMPosterior",
    "grad_log_density",
    "strong_concavity_constant",
    "find_mode",
    "sample_exact",
    "model_from_config",
]


def _as_batch(x, dim: int) -> tuple[np.ndarray, bool]:
    """Coerce to (m, d), remembering whether the input was a single point."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got shape {np.shape(x)}")
    return arr, single


class Gaussian:
    """Isotropic Gaussian N(mean, sigma2 * I) with log density -||x-mean||^2/(2 sigma2)."""

    name = "gaussian"

    def __init__(self, dim: int, mean=0.0, sigma2: float = 1.0):
        if dim < 1:
            raise ValueError("dim must be at least 1")
        if not (sigma2 > 0):
            raise ValueError(f"sigma2 must be positive, got {sigma2}")
        self.dim = int(dim)
        self.mean = np.broadcast_to(np.asarray(mean, dtype=float), (self.dim,)).copy()
        self.sigma2 = float(sigma2)
        self.concavity = 1.0 / self.sigma2
        self.lipschitz = 1.0 / self.sigma2
        # gradient is linear, so second derivatives of each gradient entry vanish
        self.third_derivative_bound = 0.0

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * np.sum((x - self.mean) ** 2, axis=-1) / self.sigma2

    def grad_log_density(self, x):
        x = np.asarray(x, dtype=float)
        return -(x - self.mean) / self.sigma2

    def hessian(self, x):
        return -np.eye(self.dim) / self.sigma2

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.mean + math.sqrt(self.sigma2) * rng.standard_normal((n, self.dim))


def _log_cosh(t: np.ndarray) -> np.ndarray:
    # log cosh(t) = |t| + log1p(e^{-2|t|}) - log 2, stable for large |t|
    at = np.abs(t)
    return at + np.log1p(np.exp(-2.0 * at)) - math.log(2.0)


class GaussianMixture2:
    """Even mixture of N(delta/2, I) and N(-delta/2, I).

    Unnormalized log density -||x||^2/2 + log cosh(delta . x / 2); the
    gradient is -x + (delta/2) tanh(delta . x / 2).  Symmetric under
    x -> -x.  The advertised strong-concavity constant is 1 - ||delta||/4
    for ||delta|| < 2 (none past that); it is the constant the bound
    formulas expect, not the sharpest one the Hessian supports.
    """

    name = "mixture2"

    def __init__(self, delta):
        delta = np.atleast_1d(np.asarray(delta, dtype=float))
        if delta.ndim != 1 or delta.size < 1:
            raise ValueError("delta must be a vector")
        if not np.all(np.isfinite(delta)):
            raise ValueError("delta must be finite")
        self.delta = delta
        self.dim = delta.size
        sep = float(np.linalg.norm(delta))
        self.separation = sep
        self.concavity = 1.0 - sep / 4.0 if sep < 2.0 else None
        # Hessian is -I + (delta delta^T / 4) sech^2, eigenvalues in
        # [-1, -1 + sep^2/4]
        self.lipschitz = max(1.0, sep * sep / 4.0 - 1.0)

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        t = x @ (self.delta / 2.0)
        return -0.5 * np.sum(x * x, axis=-1) + _log_cosh(t)

    def grad_log_density(self, x):
        x = np.asarray(x, dtype=float)
        t = x @ (self.delta / 2.0)
        return -x + np.multiply.outer(np.tanh(t), self.delta / 2.0)

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        t = float(x @ (self.delta / 2.0))
        sech2 = 1.0 / np.cosh(t) ** 2
        return -np.eye(self.dim) + 0.25 * sech2 * np.outer(self.delta, self.delta)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        signs = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        centers = np.multiply.outer(signs, self.delta / 2.0)
        return centers + rng.standard_normal((n, self.dim))


# ---------------------------------------------------------------------------
# GLM posteriors

@dataclass(frozen=True)
class LinkFunction:
    """Scalar link phi with derivatives and declared curvature constants.

    concavity bounds -phi'' from below on the reachable argument range,
    curvature_sup bounds |phi''| from above, third_derivative_sup bounds
    |phi'''|.  Any of the three may be None when unknown, which blocks the
    constant assembly but not evaluation.
    """

    value: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Callable[[np.ndarray], np.ndarray] | None = None
    d3: Callable[[np.ndarray], np.ndarray] | None = None
    concavity: float | None = None
    curvature_sup: float | None = None
    third_derivative_sup: float | None = None
    name: str = "link"


def logistic_link(arg_bound: float | None = None) -> LinkFunction:
    """Log-likelihood link phi(t) = -log(1 + e^{-t}) of logistic regression.

    -phi''(t) = sigma(t)(1 - sigma(t)) decays to zero as |t| grows, so the
    concavity constant is positive only on a bounded argument range:
    pass arg_bound = (domain radius) * (max data norm) to declare
    inf over |t| <= arg_bound, attained at the endpoints.  |phi''| <= 1/4
    and |phi'''| <= 1/(6 sqrt(3)) globally.
    """
    if arg_bound is None:
        k_phi = 0.0
    else:
        if arg_bound < 0:
            raise ValueError("arg_bound must be nonnegative")
        s = expit(arg_bound)
        k_phi = float(s * (1.0 - s))

    def d2(t):
        s = expit(t)
        return -s * (1.0 - s)

    def d3(t):
        s = expit(t)
        return -s * (1.0 - s) * (1.0 - 2.0 * s)

    return LinkFunction(
        value=lambda t: -np.logaddexp(0.0, -np.asarray(t, dtype=float)),
        d1=lambda t: expit(-np.asarray(t, dtype=float)),
        d2=d2,
        d3=d3,
        concavity=k_phi,
        curvature_sup=0.25,
        third_derivative_sup=1.0 / (6.0 * math.sqrt(3.0)),
        name="logistic",
    )


class GLMPosterior:
    """Posterior log density log pi_0(x) + sum_i phi(x . y_i).

    prior supplies (log_density, grad, hessian, concavity, lipschitz,
    third_derivative_bound); link is shared across data rows; data is an
    N x d matrix of covariate vectors y_i.
    """

    name = "glm"

    def __init__(self, prior, link: LinkFunction, data):
        data = np.asarray(data, dtype=float)
        if data.ndim != 2:
            raise ValueError(f"data must be an N x d matrix, got shape {data.shape}")
        if data.shape[1] != prior.dim:
            raise ValueError(
                f"data dimension {data.shape[1]} does not match prior dimension {prior.dim}"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("data contains non-finite entries")
        self.prior = prior
        self.link = link
        self.data = data
        self.dim = prior.dim
        self._constants: GLMConstants | None = None

    @property
    def constants(self) -> GLMConstants:
        """Derived (k_N, L_N, M_N, S2, S3, ||A_N||) constants, computed once."""
        if self._constants is None:
            self._constants = glm_constants(self)
        return self._constants

    @property
    def concavity(self) -> float:
        return self.constants.k_N

    @property
    def lipschitz(self) -> float:
        return self.constants.L_N

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        t = x @ self.data.T
        return self.prior.log_density(x) + np.sum(self.link.value(t), axis=-1)

    def grad_log_density(self, x):
        x = np.asarray(x, dtype=float)
        t = x @ self.data.T
        return self.prior.grad_log_density(x) + self.link.d1(t) @ self.data

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValueError("hessian is pointwise; pass a single point")
        if self.data.shape[0] == 0:
            return self.prior.hessian(x)
        if self.link.d2 is None:
            raise ValueError("link function lacks a second derivative")
        w = self.link.d2(self.data @ x)
        return self.prior.hessian(x) + self.data.T @ (w[:, None] * self.data)


# ---------------------------------------------------------------------------
# model-level operations

def grad_log_density(model, x) -> np.ndarray:
    """Validated gradient of log density at x (single point or batch)."""
    arr, single = _as_batch(x, model.dim)
    if not np.all(np.isfinite(arr)):
        raise ValueError("x contains non-finite entries")
    g = model.grad_log_density(arr)
    return g[0] if single else g


def strong_concavity_constant(model) -> float | None:
    """Certified strong log-concavity constant, or None when there is none."""
    return getattr(model, "concavity", None)


def find_mode(model, x0=None, tol: float = 1e-10, max_iter: int = 10_000) -> np.ndarray:
    """Maximize log density by damped Newton ascent to gradient norm <= tol.

    Backtracks on the log density during the global phase, then switches to
    raw Newton steps once the gradient is small (a backtracking test on
    log-density differences of order ||g||^2 would drown in rounding there).
    Falls back to gradient ascent when no Hessian is available.
    """
    x = np.zeros(model.dim) if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if x.shape != (model.dim,):
        raise ValueError(f"x0 must have shape ({model.dim},)")
    hess = getattr(model, "hessian", None)
    grad_norm = math.inf
    for _ in range(max_iter):
        g = model.grad_log_density(x)
        grad_norm = float(np.linalg.norm(g))
        if grad_norm <= tol:
            return x
        step = None
        if hess is not None:
            H = hess(x)
            try:
                step = np.linalg.solve(-H, g)
            except np.linalg.LinAlgError:
                step = None
        if step is None or not np.all(np.isfinite(step)) or float(step @ g) <= 0.0:
            step = g  # ascent fallback
        if grad_norm < 1e-4:
            x = x + step
            continue
        f0 = float(model.log_density(x))
        t = 1.0
        while t >= 1e-12:
            xn = x + t * step
            if float(model.log_density(xn)) > f0:
                break
            t *= 0.5
        else:
            raise RuntimeError(
                f"mode search stalled; gradient norm {grad_norm:.3e} above tolerance {tol:g}"
            )
        x = xn
    raise RuntimeError(
        f"mode search did not converge in {max_iter} iterations; "
        f"final gradient norm {grad_norm:.3e}"
    )


def sample_exact(model, n: int, seed: int) -> SampleSet:
    """n i.i.d. draws from models that admit exact sampling."""
    if n < 1:
        raise ValueError("need n >= 1")
    sampler = getattr(model, "sample", None)
    if sampler is None:
        raise ValueError(f"model {getattr(model, 'name', type(model).__name__)!r} "
                         "has no exact sampler")
    rng = np.random.default_rng(seed)
    return SampleSet(points=sampler(n, rng), label=model.name, seed=seed)


# ---------------------------------------------------------------------------
# config-file construction

def model_from_config(cfg: dict):
    """Build a model from a flat mapping with a 'family' key.

    Families:
      gaussian   -- keys dim, and optionally mean, sigma2
      mixture2   -- key delta (scalar or list)
      glm_logistic -- keys data_path (CSV of covariate rows), and optionally
                      prior_sigma2, arg_bound (link-argument range for the
                      concavity constant)
    """
    try:
        family = cfg["family"]
    except KeyError:
        raise ValueError("model config needs a 'family' key") from None
    if family == "gaussian":
        return Gaussian(dim=int(cfg.get("dim", 1)),
                        mean=cfg.get("mean", 0.0),
                        sigma2=float(cfg.get("sigma2", 1.0)))
    if family == "mixture2":
        if "delta" not in cfg:
            raise ValueError("mixture2 config needs 'delta'")
        return GaussianMixture2(delta=cfg["delta"])
    if family == "glm_logistic":
        if "data_path" not in cfg:
            raise ValueError("glm_logistic config needs 'data_path'")
        data = np.loadtxt(cfg["data_path"], delimiter=",", ndmin=2)
        prior = Gaussian(dim=data.shape[1], sigma2=float(cfg.get("prior_sigma2", 1.0)))
        arg_bound = cfg.get("arg_bound")
        link = logistic_link(None if arg_bound is None else float(arg_bound))
        return GLMPosterior(prior=prior, link=link, data=data)
    raise ValueError(f"unknown model family {family!r}")
