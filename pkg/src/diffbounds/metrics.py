"""Empirical Wasserstein distances, contraction fitting, and generator checks.

The distance estimators work on equal-size empirical measures: the exact
sorted method in one dimension, an exact linear-assignment solve in small
dimension, and a labeled sliced approximation as a fallback for sample
sizes past the assignment cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .bounds import ExponentialContraction

__all__ = [
    "SampleSet",
    "TestFunction",
    "wasserstein_1d",
    "wasserstein_assignment",
    "wasserstein_sliced",
    "ASSIGNMENT_CAP",
    "estimate_contractivity",
    "generator_mean",
    "generator_mean_se",
    "coordinate",
    "coordinate_square",
    "coordinate_sin",
    "distance_record",
]

ASSIGNMENT_CAP = 1024


@dataclass(frozen=True, eq=False)
class SampleSet:
    """An n x d matrix of points treated as an empirical measure.

    label records the source (model or sampler) and seed the RNG seed that
    produced the points, so distance records stay auditable.
    """

    points: np.ndarray
    label: str = ""
    seed: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise ValueError(f"points must be an n x d matrix, got shape {pts.shape}")
        if pts.shape[0] < 1:
            raise ValueError("need at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points contain non-finite entries")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _paired(a: SampleSet, b: SampleSet) -> tuple[np.ndarray, np.ndarray]:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.n != b.n:
        raise ValueError(
            f"sample sizes differ ({a.n} vs {b.n}); unequal-size transport is unsupported"
        )
    return a.points, b.points


def wasserstein_1d(a: SampleSet, b: SampleSet) -> float:
    """Exact order-1 Wasserstein distance between equal-size 1-D empirical measures.

    Sorting both samples pairs order statistics, which is the optimal
    coupling on the line; the distance is the mean absolute difference.
    """
    pa, pb = _paired(a, b)
    if a.dim != 1:
        raise ValueError(f"sorted method needs d = 1, got d = {a.dim}")
    return float(np.mean(np.abs(np.sort(pa[:, 0]) - np.sort(pb[:, 0]))))


def wasserstein_assignment(a: SampleSet, b: SampleSet, cap: int = ASSIGNMENT_CAP) -> float:
    """Exact distance min over pairings of (1/n) sum ||a_i - b_sigma(i)||_2.

    Solved as a linear assignment on the Euclidean cost matrix (an exact
    shortest-augmenting-path solver, not a greedy matching).  Cost is
    O(n^3), hence the size cap; subsample or use wasserstein_sliced past it.
    """
    pa, pb = _paired(a, b)
    if a.n > cap:
        raise ValueError(
            f"n = {a.n} exceeds the assignment cap {cap}; subsample the inputs "
            "or fall back to wasserstein_sliced"
        )
    cost = cdist(pa, pb)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())


def wasserstein_sliced(a: SampleSet, b: SampleSet, n_projections: int = 128,
                       seed: int = 0) -> float:
    """Averaged random-projection approximation for sizes past the assignment cap.

    Projects both clouds on n_projections random unit directions and
    averages the exact 1-D distances.  This is a labeled approximation:
    it does not equal the d-dimensional transport distance.
    """
    pa, pb = _paired(a, b)
    if n_projections < 1:
        raise ValueError("need at least one projection")
    rng = np.random.default_rng(seed)
    total = 0.0
    for _ in range(n_projections):
        u = rng.standard_normal(a.dim)
        u /= np.linalg.norm(u)
        qa = np.sort(pa @ u)
        qb = np.sort(pb @ u)
        total += float(np.mean(np.abs(qa - qb)))
    return total / n_projections


def estimate_contractivity(drift, x0, x0_prime, dt: float, t_end: float,
                           reps: int, seed: int) -> ExponentialContraction:
    """Fit (C, rho) from synchronously coupled pairs driven by the same noise.

    Runs reps Euler-Maruyama pairs started at x0 and x0_prime with shared
    Gaussian increments, then regresses log mean separation on time after
    discarding the first 10% of the horizon as transient.  The fitted
    model is mean separation ~= C ||x0 - x0'|| rho^t.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    x0p = np.atleast_1d(np.asarray(x0_prime, dtype=float))
    if x0.shape != x0p.shape:
        raise ValueError("start points must share a shape")
    gap0 = float(np.linalg.norm(x0 - x0p))
    if gap0 == 0.0:
        raise ValueError("start points coincide; no separation to track")
    if not (dt > 0 and t_end >= dt):
        raise ValueError("need 0 < dt <= t_end")
    if reps < 1:
        raise ValueError("need at least one replication")

    n_steps = int(round(t_end / dt))
    d = x0.size
    rng = np.random.default_rng(seed)
    X = np.tile(x0, (reps, 1))
    Xp = np.tile(x0p, (reps, 1))
    sig = math.sqrt(2.0 * dt)
    seps = np.empty(n_steps + 1)
    seps[0] = gap0
    for k in range(n_steps):
        xi = rng.standard_normal((reps, d))
        X = X + dt * drift(X) + sig * xi
        Xp = Xp + dt * drift(Xp) + sig * xi
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Xp))):
            raise RuntimeError(f"coupled pair diverged at step {k + 1}")
        seps[k + 1] = float(np.mean(np.linalg.norm(X - Xp, axis=1)))

    times = np.arange(n_steps + 1) * dt
    start = int(0.1 * (n_steps + 1))
    y = seps[start:]
    if np.any(y <= 0.0):
        # fully merged trajectories: infinitely fast contraction, nothing to fit
        raise RuntimeError("separation collapsed to zero; horizon too long to fit")
    slope, intercept = np.polyfit(times[start:], np.log(y), 1)
    rho = math.exp(slope)
    if rho >= 1.0:
        raise RuntimeError(f"no contraction detected (fitted rho = {rho:.4g})")
    return ExponentialContraction(C=math.exp(intercept) / gap0, rho=rho,
                                  provenance="fitted")


# ---------------------------------------------------------------------------
# generator mean-zero statistic

@dataclass(frozen=True)
class TestFunction:
    """Scalar test function with hand-coded gradient and Laplacian.

    All three callables take an (n, d) array; value and laplacian return
    (n,), grad returns (n, d).
    """

    value: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]
    laplacian: Callable[[np.ndarray], np.ndarray]
    name: str = ""


def coordinate(j: int = 0) -> TestFunction:
    """phi(x) = x_j."""
    def grad(x):
        g = np.zeros_like(x)
        g[:, j] = 1.0
        return g
    return TestFunction(
        value=lambda x: x[:, j].copy(),
        grad=grad,
        laplacian=lambda x: np.zeros(x.shape[0]),
        name=f"x_{j}",
    )


def coordinate_square(j: int = 0) -> TestFunction:
    """phi(x) = x_j^2."""
    def grad(x):
        g = np.zeros_like(x)
        g[:, j] = 2.0 * x[:, j]
        return g
    return TestFunction(
        value=lambda x: x[:, j] ** 2,
        grad=grad,
        laplacian=lambda x: np.full(x.shape[0], 2.0),
        name=f"x_{j}^2",
    )


def coordinate_sin(j: int = 0) -> TestFunction:
    """phi(x) = sin(x_j)."""
    def grad(x):
        g = np.zeros_like(x)
        g[:, j] = np.cos(x[:, j])
        return g
    return TestFunction(
        value=lambda x: np.sin(x[:, j]),
        grad=grad,
        laplacian=lambda x: -np.sin(x[:, j]),
        name=f"sin(x_{j})",
    )


def _generator_values(model, phi: TestFunction, samples: SampleSet) -> np.ndarray:
    pts = samples.points
    b = model.grad_log_density(pts)
    return np.sum(b * phi.grad(pts), axis=1) + phi.laplacian(pts)


def generator_mean(model, phi: TestFunction, samples: SampleSet) -> float:
    """Monte Carlo mean of the generator b . grad(phi) + lap(phi) over samples.

    Zero in expectation when the samples are stationary for the diffusion
    with drift b = grad log pi, which makes this a drift/sample
    compatibility diagnostic.
    """
    return float(np.mean(_generator_values(model, phi, samples)))


def generator_mean_se(model, phi: TestFunction, samples: SampleSet) -> tuple[float, float]:
    """Generator mean together with its Monte Carlo standard error."""
    vals = _generator_values(model, phi, samples)
    se = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return float(np.mean(vals)), se


def distance_record(method: str, a: SampleSet, b: SampleSet, value: float) -> dict:
    """JSON-ready record of one distance evaluation."""
    return {
        "method": method,
        "value": float(value),
        "n": a.n,
        "dim": a.dim,
        "a_label": a.label,
        "b_label": b.label,
        "a_seed": a.seed,
        "b_seed": b.seed,
    }
