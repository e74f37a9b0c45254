"""Discrete chains and continuous-time processes over drift fields.

Contains the unadjusted Langevin chain (with optional ball projection and
decreasing steps), fixed-step Euler-Maruyama diffusion simulation, the
coupled simulation for stochastic drifts, an exact zig-zag process
simulator based on Poisson thinning, a randomized-refresh Hamiltonian
flow process, and an adaptive random-walk Metropolis reference sampler.

Every sampler takes an explicit integer seed and is bitwise reproducible.
Ensemble variants vectorize many independent chains for Monte Carlo work;
they return terminal states only.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .bounds import StepSchedule
from .metrics import SampleSet

__all__ = [
    "ChainTrace",
    "ZZPState",
    "StepSchedule",
    "DIVERGENCE_NORM",
    "ula_chain",
    "ula_ensemble",
    "project_ball",
    "euler_maruyama",
    "euler_maruyama_ensemble",
    "joint_stochastic_diffusion",
    "joint_stochastic_ensemble",
    "zzp_rate",
    "zzp_simulate",
    "zzp_time_average",
    "zzp_positions",
    "hmc_pdmp_simulate",
    "adaptive_mh",
    "trace_to_csv",
    "trace_from_csv",
    "sampleset_to_csv",
    "sampleset_from_csv",
    "trace_to_npz",
    "trace_from_npz",
]

DIVERGENCE_NORM = 1e8


@dataclass(frozen=True, eq=False)
class ChainTrace:
    """Recorded path of a sampler: states with strictly increasing times.

    velocities carries the momentum/velocity component for processes that
    have one; aux carries auxiliary coordinates (e.g. the driving process
    of a stochastic drift).  meta records the sampler label and the knobs
    needed to rerun it.
    """

    states: np.ndarray
    times: np.ndarray
    seed: int
    meta: dict = dc_field(default_factory=dict)
    velocities: np.ndarray | None = None
    aux: np.ndarray | None = None

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states.reshape(-1, 1)
        times = np.asarray(self.times, dtype=float)
        if states.ndim != 2 or times.ndim != 1 or states.shape[0] != times.size:
            raise ValueError("states must be (n, d) with matching times (n,)")
        if states.shape[0] < 1:
            raise ValueError("trace must contain at least one state")
        if not np.all(np.isfinite(states)):
            raise ValueError("trace contains non-finite states")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "times", times)
        for name in ("velocities", "aux"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float)
                if arr.shape[0] != states.shape[0]:
                    raise ValueError(f"{name} length does not match states")
                object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True, eq=False)
class ZZPState:
    """Zig-zag state: position x and velocity theta in {-1, +1}^d."""

    x: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if x.shape != theta.shape or x.ndim != 1:
            raise ValueError("x and theta must be vectors of equal length")
        if not np.all(np.isfinite(x)):
            raise ValueError("x must be finite")
        if not np.all(np.abs(theta) == 1.0):
            raise ValueError("every theta component must be +1 or -1")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "theta", theta)

    @property
    def dim(self) -> int:
        return self.x.size


def _guard(x: np.ndarray, step) -> None:
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > DIVERGENCE_NORM:
        raise RuntimeError(f"chain diverged at step {step} (non-finite or norm above "
                           f"{DIVERGENCE_NORM:g})")


# ---------------------------------------------------------------------------
# Langevin chains

def project_ball(x, R: float):
    """Project onto the centered Euclidean ball of radius R (row-wise for batches)."""
    if not (R > 0):
        raise ValueError(f"R must be positive, got {R}")
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    scale = np.where(r > R, R / np.where(r > 0.0, r, 1.0), 1.0)
    return x * scale


def ula_chain(drift, schedule: StepSchedule, x0, steps: int, seed: int,
              project_radius: float | None = None) -> ChainTrace:
    """Unadjusted Langevin chain x <- x + gamma_i b(x) + sqrt(2 gamma_i) xi.

    Steps follow the schedule gamma_i = gamma1 i^(-alpha).  With
    project_radius set, the post-noise iterate is projected back onto the
    centered ball each step.  Trace times are step indices.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.size != drift.dim:
        raise ValueError(f"x0 has dimension {x0.size}, drift expects {drift.dim}")
    if steps < 1:
        raise ValueError("need at least one step")
    rng = np.random.default_rng(seed)
    states = np.empty((steps + 1, x0.size))
    states[0] = x0
    x = x0.copy()
    for i in range(1, steps + 1):
        g = schedule.gamma(i)
        x = x + g * drift(x) + math.sqrt(2.0 * g) * rng.standard_normal(x.size)
        if project_radius is not None:
            x = project_ball(x, project_radius)
        _guard(x, i)
        states[i] = x
    meta = {
        "sampler": "ula",
        "gamma1": schedule.gamma1,
        "alpha": schedule.alpha,
        "project_radius": project_radius,
    }
    return ChainTrace(states=states, times=np.arange(steps + 1, dtype=float),
                      seed=seed, meta=meta)


def ula_ensemble(drift, schedule: StepSchedule, x0, steps: int, n_chains: int,
                 seed: int, project_radius: float | None = None) -> SampleSet:
    """Terminal states of n_chains independent ULA chains, vectorized.

    x0 may be a single start point (shared) or an (n_chains, d) array.
    One generator drives the whole block, so the result is deterministic
    in (inputs, seed) but the chains do not match per-chain reruns of
    ula_chain draw for draw.
    """
    if steps < 1 or n_chains < 1:
        raise ValueError("need steps >= 1 and n_chains >= 1")
    x0 = np.asarray(x0, dtype=float)
    X = np.tile(x0, (n_chains, 1)) if x0.ndim == 1 else x0.copy()
    if X.shape != (n_chains, drift.dim):
        raise ValueError(f"x0 must broadcast to ({n_chains}, {drift.dim})")
    rng = np.random.default_rng(seed)
    for i in range(1, steps + 1):
        g = schedule.gamma(i)
        X = X + g * drift(X) + math.sqrt(2.0 * g) * rng.standard_normal(X.shape)
        if project_radius is not None:
            X = project_ball(X, project_radius)
        _guard(X, i)
    return SampleSet(points=X, label="ula-terminal", seed=seed)


# ---------------------------------------------------------------------------
# diffusion simulation

def _n_steps(dt: float, t_end: float) -> int:
    if not (dt > 0):
        raise ValueError(f"dt must be positive, got {dt}")
    if t_end < dt:
        raise ValueError(f"t_end = {t_end} is below one step dt = {dt}")
    return int(round(t_end / dt))


def euler_maruyama(drift, dt: float, t_end: float, x0, seed: int) -> ChainTrace:
    """Fixed-step discretization x <- x + dt b(x) + sqrt(2 dt) xi of the diffusion."""
    n = _n_steps(dt, t_end)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.size != drift.dim:
        raise ValueError(f"x0 has dimension {x0.size}, drift expects {drift.dim}")
    rng = np.random.default_rng(seed)
    states = np.empty((n + 1, x0.size))
    states[0] = x0
    x = x0.copy()
    sig = math.sqrt(2.0 * dt)
    for k in range(1, n + 1):
        x = x + dt * drift(x) + sig * rng.standard_normal(x.size)
        _guard(x, k)
        states[k] = x
    meta = {"sampler": "euler-maruyama", "dt": dt}
    return ChainTrace(states=states, times=np.arange(n + 1) * dt, seed=seed, meta=meta)


def euler_maruyama_ensemble(drift, dt: float, t_end: float, x0, n_chains: int,
                            seed: int) -> SampleSet:
    """Terminal states of n_chains independent diffusion discretizations."""
    n = _n_steps(dt, t_end)
    if n_chains < 1:
        raise ValueError("need n_chains >= 1")
    x0 = np.asarray(x0, dtype=float)
    X = np.tile(x0, (n_chains, 1)) if x0.ndim == 1 else x0.copy()
    if X.shape != (n_chains, drift.dim):
        raise ValueError(f"x0 must broadcast to ({n_chains}, {drift.dim})")
    rng = np.random.default_rng(seed)
    sig = math.sqrt(2.0 * dt)
    for k in range(1, n + 1):
        X = X + dt * drift(X) + sig * rng.standard_normal(X.shape)
        _guard(X, k)
    return SampleSet(points=X, label="em-terminal", seed=seed)


def joint_stochastic_diffusion(spec, dt: float, t_end: float, x0, y0,
                               seed: int) -> ChainTrace:
    """Couple dX = combine(X, Y) dt + sqrt(2) dW with the auxiliary dY = b_aux dt + S dB.

    W and B come from independent child streams of the seed.  The trace
    carries X as states and Y in aux.
    """
    n = _n_steps(dt, t_end)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if x0.size != spec.base.dim or y0.size != spec.aux_dim:
        raise ValueError("x0/y0 dimensions do not match the drift spec")
    rng_x, rng_y = [np.random.default_rng(s)
                    for s in np.random.SeedSequence(seed).spawn(2)]
    S = np.asarray(spec.aux_noise, dtype=float)
    xs = np.empty((n + 1, x0.size))
    ys = np.empty((n + 1, y0.size))
    xs[0], ys[0] = x0, y0
    x, y = x0.copy(), y0.copy()
    sig = math.sqrt(2.0 * dt)
    sqdt = math.sqrt(dt)
    for k in range(1, n + 1):
        x = x + dt * spec.combine(x, y) + sig * rng_x.standard_normal(x.size)
        y = y + dt * spec.aux_drift(y) + sqdt * (S @ rng_y.standard_normal(y.size))
        _guard(x, k)
        _guard(y, k)
        xs[k], ys[k] = x, y
    meta = {"sampler": "joint-stochastic", "dt": dt, "label": spec.label}
    return ChainTrace(states=xs, times=np.arange(n + 1) * dt, seed=seed,
                      meta=meta, aux=ys)


def joint_stochastic_ensemble(spec, dt: float, t_end: float, x0, y0,
                              n_chains: int, seed: int) -> tuple[SampleSet, SampleSet]:
    """Terminal (X, Y) states of n_chains independent coupled simulations."""
    n = _n_steps(dt, t_end)
    if n_chains < 1:
        raise ValueError("need n_chains >= 1")
    x0 = np.asarray(x0, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    X = np.tile(x0, (n_chains, 1)) if x0.ndim == 1 else x0.copy()
    Y = np.tile(y0, (n_chains, 1)) if y0.ndim == 1 else y0.copy()
    if X.shape != (n_chains, spec.base.dim) or Y.shape != (n_chains, spec.aux_dim):
        raise ValueError("x0/y0 must broadcast to (n_chains, dim)")
    rng_x, rng_y = [np.random.default_rng(s)
                    for s in np.random.SeedSequence(seed).spawn(2)]
    St = np.asarray(spec.aux_noise, dtype=float).T
    sig = math.sqrt(2.0 * dt)
    sqdt = math.sqrt(dt)
    for k in range(1, n + 1):
        X = X + dt * spec.combine(X, Y) + sig * rng_x.standard_normal(X.shape)
        Y = Y + dt * spec.aux_drift(Y) + sqdt * (rng_y.standard_normal(Y.shape) @ St)
        _guard(X, k)
        _guard(Y, k)
    return (SampleSet(points=X, label="joint-x-terminal", seed=seed),
            SampleSet(points=Y, label="joint-y-terminal", seed=seed))


# ---------------------------------------------------------------------------
# zig-zag process

def _refresh_vector(refresh, d: int) -> np.ndarray:
    if refresh is None:
        return np.zeros(d)
    arr = np.atleast_1d(np.asarray(refresh, dtype=float))
    if arr.size == 1:
        arr = np.full(d, float(arr[0]))
    if arr.shape != (d,):
        raise ValueError(f"refresh must be a scalar or length-{d} vector")
    if np.any(arr < 0.0):
        raise ValueError("refresh rates must be nonnegative")
    return arr


def zzp_rate(model, refresh, s: ZZPState) -> np.ndarray:
    """Switching rates lambda_i = (-theta_i d_i log pi(x))^+ + gamma_i.

    refresh may be None (zero), a scalar, a vector, or a callable
    (x, theta) -> vector; refresh symmetry gamma_i(x, theta) =
    gamma_i(x, flip_i theta) is the caller's responsibility.
    """
    if s.dim != model.dim:
        raise ValueError(f"state dimension {s.dim} does not match model ({model.dim})")
    if callable(refresh):
        gam = np.atleast_1d(np.asarray(refresh(s.x, s.theta), dtype=float))
        if gam.shape != (s.dim,):
            raise ValueError(f"refresh callable must return a length-{s.dim} vector")
        if np.any(gam < 0.0):
            raise ValueError("refresh rates must be nonnegative")
    else:
        gam = _refresh_vector(refresh, s.dim)
    grad = model.grad_log_density(s.x)
    return np.maximum(0.0, -s.theta * grad) + gam


def zzp_simulate(model, refresh, s0: ZZPState, t_end: float, seed: int,
                 lipschitz: float | None = None) -> ChainTrace:
    """Exact zig-zag simulation by Poisson thinning with affine envelopes.

    Between velocity flips the position moves linearly, x(s) = x + theta s.
    Along such a flight the rate of component i satisfies

        lambda_i(x + theta s, theta) <= lambda_i(x, theta) + L sqrt(d) s

    because the gradient is L-Lipschitz, the flight speed is sqrt(d), and
    the positive part is 1-Lipschitz.  Each round draws one exponential
    per component, inverts the affine envelope's cumulative hazard
    a s + c s^2/2 for a candidate time, moves to the earliest candidate,
    and accepts the flip there with probability true/envelope.  Envelopes
    restart from the current point after every proposal (accepted or not),
    which keeps the scheme exact by the memorylessness of the rejected
    envelope processes.

    refresh must be state-independent here (None, scalar, or vector);
    state-dependent refresh would break the envelope.  The trace records
    flips only (plus the initial and terminal states), so segments between
    records are exactly linear.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if callable(refresh):
        raise ValueError("zzp_simulate needs a state-independent refresh "
                         "(None, scalar, or vector); callables would escape the envelope")
    d = s0.dim
    if d != model.dim:
        raise ValueError(f"state dimension {d} does not match model ({model.dim})")
    L = model.lipschitz if lipschitz is None else lipschitz
    if L is None or not (L > 0):
        raise ValueError("need a positive Lipschitz constant for the gradient "
                         "(model.lipschitz or the lipschitz argument)")
    gam = _refresh_vector(refresh, d)
    c = L * math.sqrt(d)

    rng = np.random.default_rng(seed)
    x = s0.x.copy()
    theta = s0.theta.copy()
    t = 0.0
    times = [0.0]
    xs = [x.copy()]
    thetas = [theta.copy()]
    n_proposals = 0
    n_flips = 0

    def rates(xc, th):
        return np.maximum(0.0, -th * model.grad_log_density(xc)) + gam

    lam = rates(x, theta)
    while True:
        E = rng.exponential(size=d)
        # smallest root of a s + c s^2/2 = E per component
        s_cand = (np.sqrt(lam * lam + 2.0 * c * E) - lam) / c
        i = int(np.argmin(s_cand))
        s = float(s_cand[i])
        if t + s >= t_end:
            x = x + theta * (t_end - t)
            _guard(x, "zzp-final")
            times.append(t_end)
            xs.append(x.copy())
            thetas.append(theta.copy())
            break
        t += s
        x = x + theta * s
        _guard(x, f"zzp t={t:.4g}")
        n_proposals += 1
        lam_new = rates(x, theta)
        envelope = lam[i] + c * s
        true_rate = float(lam_new[i])
        if true_rate > envelope * (1.0 + 1e-9) + 1e-12:
            raise RuntimeError(
                f"thinning envelope violated at t={t:.6g} (true rate {true_rate:.6g} "
                f"> envelope {envelope:.6g}); the Lipschitz constant is too small"
            )
        if envelope > 0.0 and rng.random() * envelope < true_rate:
            theta = theta.copy()
            theta[i] = -theta[i]
            n_flips += 1
            times.append(t)
            xs.append(x.copy())
            thetas.append(theta.copy())
            lam = rates(x, theta)
        else:
            lam = lam_new

    meta = {
        "sampler": "zzp",
        "t_end": t_end,
        "lipschitz": float(L),
        "flips": n_flips,
        "proposals": n_proposals,
    }
    return ChainTrace(states=np.array(xs), times=np.array(times), seed=seed,
                      meta=meta, velocities=np.array(thetas))


def zzp_time_average(trace: ChainTrace, burn_in: float = 0.0):
    """Exact time averages (mean, variance, +1 occupancy) over the linear segments.

    On a segment of length s starting at x with velocity theta the
    integrals are closed form: int x dt = x s + theta s^2/2 and
    int x^2 dt = x^2 s + x theta s^2 + s^3/3 per coordinate.  burn_in
    drops that fraction of the horizon from the front (segments are split
    at the cut).
    """
    if trace.velocities is None:
        raise ValueError("trace has no velocities; not a zig-zag trace")
    if not (0.0 <= burn_in < 1.0):
        raise ValueError("burn_in must lie in [0, 1)")
    t0 = trace.times[0] + burn_in * (trace.times[-1] - trace.times[0])
    times, xs, th = trace.times, trace.states, trace.velocities
    if trace.n < 2:
        raise ValueError("need at least two records to average over time")
    # clip every segment to [t0, end]
    starts = np.maximum(times[:-1], t0)
    lengths = times[1:] - starts
    keep = lengths > 0.0
    starts, lengths = starts[keep], lengths[keep]
    x_seg = xs[:-1][keep] + th[:-1][keep] * (starts - times[:-1][keep])[:, None]
    th_seg = th[:-1][keep]
    s = lengths[:, None]
    total = float(np.sum(lengths))
    if total <= 0.0:
        raise ValueError("burn_in leaves no time to average over")
    ix = np.sum(x_seg * s + th_seg * s * s / 2.0, axis=0)
    ix2 = np.sum(x_seg * x_seg * s + x_seg * th_seg * s * s + s ** 3 / 3.0, axis=0)
    occ = np.sum(np.where(th_seg > 0.0, lengths[:, None], 0.0), axis=0)
    mean = ix / total
    var = ix2 / total - mean ** 2
    return mean, var, occ / total


def zzp_positions(trace: ChainTrace, n: int, burn_in: float = 0.0) -> SampleSet:
    """Positions at n uniformly spaced times (after burn-in), by exact interpolation."""
    if trace.velocities is None:
        raise ValueError("trace has no velocities; not a zig-zag trace")
    if n < 1:
        raise ValueError("need n >= 1")
    if not (0.0 <= burn_in < 1.0):
        raise ValueError("burn_in must lie in [0, 1)")
    t0 = trace.times[0] + burn_in * (trace.times[-1] - trace.times[0])
    grid = np.linspace(t0, trace.times[-1], n)
    idx = np.clip(np.searchsorted(trace.times, grid, side="right") - 1, 0, trace.n - 2)
    dtg = (grid - trace.times[idx])[:, None]
    pts = trace.states[idx] + trace.velocities[idx] * dtg
    return SampleSet(points=pts, label="zzp-positions", seed=trace.seed)


# ---------------------------------------------------------------------------
# Hamiltonian flow with randomized momentum refreshment

def hmc_pdmp_simulate(model, lambda_refresh: float, mass, s0, t_end: float,
                      dt_flow: float | None = None, seed: int = 0,
                      record_stride: int = 1) -> ChainTrace:
    """Hamiltonian flow of H = -log pi(x) + p' M^{-1} p / 2 with Exp(lambda) refreshes.

    Between refresh epochs the flow dX = M^{-1} P dt, dP = grad log pi(X) dt
    is integrated by leapfrog; at each epoch the momentum is replaced by a
    fresh N(0, M) draw (replacement is the jump that leaves
    pi x N(0, M) stationary).  dt_flow defaults to min(0.01, 0.1/lambda)
    and each flight is integrated with a step at or below it; the
    discretization error is the only deviation from the idealized process.
    """
    if not (lambda_refresh > 0):
        raise ValueError("lambda_refresh must be positive")
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if record_stride < 1:
        raise ValueError("record_stride must be at least 1")
    M = np.asarray(mass, dtype=float)
    d = model.dim
    if M.shape != (d, d):
        raise ValueError(f"mass must be {d} x {d}, got {M.shape}")
    try:
        chol = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise ValueError("mass matrix is not positive definite") from None
    M_inv = np.linalg.inv(M)
    if dt_flow is None:
        dt_flow = min(0.01, 0.1 / lambda_refresh)
    if not (dt_flow > 0):
        raise ValueError("dt_flow must be positive")

    x0, p0 = s0
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    p = np.atleast_1d(np.asarray(p0, dtype=float)).copy()
    if x.shape != (d,) or p.shape != (d,):
        raise ValueError(f"s0 must be a pair of length-{d} vectors")

    rng = np.random.default_rng(seed)
    times = [0.0]
    xs = [x.copy()]
    ps = [p.copy()]
    t = 0.0
    n_refresh = 0
    step_count = 0
    while t < t_end:
        flight = float(rng.exponential(1.0 / lambda_refresh))
        flight = min(flight, t_end - t)
        if flight > 0.0:
            n_sub = max(1, int(math.ceil(flight / dt_flow)))
            h = flight / n_sub
            g = model.grad_log_density(x)
            for _ in range(n_sub):
                p = p + 0.5 * h * g
                x = x + h * (M_inv @ p)
                g = model.grad_log_density(x)
                p = p + 0.5 * h * g
                t += h
                step_count += 1
                _guard(x, step_count)
                if step_count % record_stride == 0:
                    times.append(t)
                    xs.append(x.copy())
                    ps.append(p.copy())
        if t >= t_end:
            break
        p = chol @ rng.standard_normal(d)
        n_refresh += 1

    if times[-1] < t_end:
        # close the record at the exact horizon
        times.append(t_end)
        xs.append(x.copy())
        ps.append(p.copy())
    meta = {
        "sampler": "hmc-pdmp",
        "lambda_refresh": lambda_refresh,
        "dt_flow": dt_flow,
        "refreshes": n_refresh,
    }
    return ChainTrace(states=np.array(xs), times=np.array(times), seed=seed,
                      meta=meta, velocities=np.array(ps))


# ---------------------------------------------------------------------------
# adaptive Metropolis reference

def adaptive_mh(model, iters: int, seed: int, x0=None,
                support_radius: float | None = None,
                target_accept: float = 0.234,
                burn_in_frac: float = 0.2,
                return_diagnostics: bool = False):
    """Random-walk Metropolis with covariance adapted from the trajectory.

    The proposal is N(0, lam * (Cov_hist + 1e-10 I)) with Cov_hist the
    running sample covariance, lam initialized at 2.38^2/d and tuned on a
    decaying log scale toward the target acceptance rate.  Adaptation
    starts after 100 iterations.  With support_radius set, proposals
    outside the centered ball are rejected outright (the target is the
    density restricted to the ball).  Returns the post-burn-in states.
    """
    d = model.dim
    if iters < 10:
        raise ValueError("need at least 10 iterations")
    if not (0.0 < burn_in_frac < 1.0):
        raise ValueError("burn_in_frac must lie in (0, 1)")
    x = np.zeros(d) if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if x.shape != (d,):
        raise ValueError(f"x0 must have shape ({d},)")
    if support_radius is not None and np.linalg.norm(x) > support_radius:
        raise ValueError("x0 lies outside the support ball")

    rng = np.random.default_rng(seed)
    logp = float(np.atleast_1d(model.log_density(x))[0])
    chain = np.empty((iters, d))
    log_lam = math.log(2.38 ** 2 / d)
    mean = x.copy()
    m2 = np.zeros((d, d))  # sum of outer products of deviations
    accepts = 0
    accepts_post_adapt = 0
    post_adapt = 0
    reject_run = 0
    max_reject_run = max(500, iters // 20)
    adapt_start = 100

    base_chol = np.eye(d)
    for i in range(iters):
        if i >= adapt_start and i % 20 == 0:
            cov = m2 / max(i, 1) + 1e-10 * np.eye(d)
            try:
                base_chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                base_chol = np.eye(d) * math.sqrt(1e-10)
        step = math.exp(0.5 * log_lam) * (base_chol @ rng.standard_normal(d))
        prop = x + step
        inside = support_radius is None or np.linalg.norm(prop) <= support_radius
        if inside:
            logp_prop = float(np.atleast_1d(model.log_density(prop))[0])
            log_alpha = logp_prop - logp
            accept = math.log(rng.random()) < log_alpha
            alpha = min(1.0, math.exp(min(log_alpha, 0.0)))
        else:
            accept = False
            alpha = 0.0
        if accept:
            x, logp = prop, logp_prop
            accepts += 1
            reject_run = 0
        else:
            reject_run += 1
            if reject_run >= max_reject_run:
                raise RuntimeError(
                    f"no acceptance in {reject_run} consecutive proposals; "
                    "the proposal is badly scaled for this target"
                )
        if i >= adapt_start:
            log_lam += (alpha - target_accept) / (i - adapt_start + 1) ** 0.6
            post_adapt += 1
            accepts_post_adapt += int(accept)
        chain[i] = x
        delta = x - mean
        mean += delta / (i + 1)
        m2 += np.outer(delta, x - mean)

    burn = int(burn_in_frac * iters)
    out = SampleSet(points=chain[burn:], label="adaptive-mh", seed=seed)
    if return_diagnostics:
        diag = {
            "accept_rate": accepts / iters,
            "accept_rate_post_adapt": (accepts_post_adapt / post_adapt
                                       if post_adapt else float("nan")),
            "final_scale": math.exp(log_lam),
            "burn_in": burn,
        }
        return out, diag
    return out


# ---------------------------------------------------------------------------
# trace and sample I/O

def _float_cell(v: float) -> str:
    return repr(float(v))


def trace_to_csv(trace: ChainTrace, path) -> None:
    """One row per state: time, coordinates, then velocities/aux when present."""
    d = trace.dim
    header = ["time"] + [f"x{j}" for j in range(d)]
    blocks = [trace.states]
    if trace.velocities is not None:
        header += [f"v{j}" for j in range(trace.velocities.shape[1])]
        blocks.append(trace.velocities)
    if trace.aux is not None:
        header += [f"aux{j}" for j in range(trace.aux.shape[1])]
        blocks.append(trace.aux)
    body = np.hstack([trace.times[:, None]] + blocks)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in body:
            w.writerow([_float_cell(v) for v in row])


def trace_from_csv(path, seed: int = 0, meta: dict | None = None) -> ChainTrace:
    """Rebuild a trace from trace_to_csv output."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = np.array([[float(v) for v in row] for row in r])
    if rows.size == 0:
        raise ValueError(f"{path} contains no states")
    xcols = [i for i, h in enumerate(header) if h.startswith("x")]
    vcols = [i for i, h in enumerate(header) if h.startswith("v")]
    acols = [i for i, h in enumerate(header) if h.startswith("aux")]
    return ChainTrace(
        states=rows[:, xcols],
        times=rows[:, 0],
        seed=seed,
        meta=meta or {},
        velocities=rows[:, vcols] if vcols else None,
        aux=rows[:, acols] if acols else None,
    )


def sampleset_to_csv(sset: SampleSet, path) -> None:
    """One row per point, columns x0..x{d-1}."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j}" for j in range(sset.dim)])
        for row in sset.points:
            w.writerow([_float_cell(v) for v in row])


def sampleset_from_csv(path, label: str = "", seed: int | None = None) -> SampleSet:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        next(r)  # header
        pts = np.array([[float(v) for v in row] for row in r])
    if pts.size == 0:
        raise ValueError(f"{path} contains no points")
    return SampleSet(points=pts, label=label, seed=seed)


def trace_to_npz(trace: ChainTrace, path) -> None:
    """Compact binary dump, loadable by trace_from_npz for reruns."""
    payload = {
        "states": trace.states,
        "times": trace.times,
        "seed": np.int64(trace.seed),
        "meta_json": np.frombuffer(json.dumps(trace.meta, sort_keys=True).encode(),
                                   dtype=np.uint8),
    }
    if trace.velocities is not None:
        payload["velocities"] = trace.velocities
    if trace.aux is not None:
        payload["aux"] = trace.aux
    np.savez_compressed(path, **payload)


def trace_from_npz(path) -> ChainTrace:
    with np.load(path) as z:
        meta = json.loads(bytes(z["meta_json"]).decode()) if "meta_json" in z else {}
        return ChainTrace(
            states=z["states"],
            times=z["times"],
            seed=int(z["seed"]),
            meta=meta,
            velocities=z["velocities"] if "velocities" in z else None,
            aux=z["aux"] if "aux" in z else None,
        )
