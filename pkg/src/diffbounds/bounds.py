"""Closed-form Wasserstein bounds, contractivity certificates, and sampler constants.

Everything in this module is an explicit formula:

* stationary-distance bounds for diffusions with perturbed drifts under
  exponential or polynomial contractivity,
* certificates built from strong log-concavity, or from log-concavity in
  the tails (piecewise curvature profile),
* the decreasing step schedule for ULA with its finite-sample bound,
* compute-budget matching between an exact chain and a cheaper
  approximate chain,
* curvature/smoothness constants of GLM posteriors.

No simulation happens here; empirical counterparts live in `metrics`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .targets import GLMPosterior

__all__ = [
    "ExponentialContraction",
    "PolynomialContraction",
    "KappaProfile",
    "StepSchedule",
    "BudgetModel",
    "GLMConstants",
    "bound_exponential",
    "bound_stochastic",
    "bound_polynomial",
    "bound_zzp",
    "bound_pdmp",
    "cert_from_strong_concavity",
    "cert_from_kappa_profile",
    "ula_step_schedule",
    "ula_finite_sample_bound",
    "matched_budget_steps",
    "budget_model",
    "spectral_norm",
    "glm_constants",
    "audit_record",
]


# ---------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class ExponentialContraction:
    """Certificate that d_W(law_x(t), law_x'(t)) <= C ||x - x'|| rho^t.

    provenance records where the constants came from: "strong-concavity",
    "kappa-profile", "fitted", or "asserted".
    """

    C: float
    rho: float
    provenance: str = "asserted"
    kind: str = field(default="exponential", init=False)

    def __post_init__(self):
        if not (self.C > 0):
            raise ValueError(f"C must be positive, got {self.C}")
        if not (0.0 < self.rho < 1.0):
            raise ValueError(f"rho must lie in (0,1), got {self.rho}")

    @property
    def log_rate(self) -> float:
        """log(1/rho), the exponential decay rate."""
        return -math.log(self.rho)


@dataclass(frozen=True)
class PolynomialContraction:
    """Certificate that d_W(law_x(t), law_x'(t)) <= C ||x - x'|| (t + beta)^(-alpha)."""

    C: float
    alpha: float
    beta: float
    provenance: str = "asserted"
    kind: str = field(default="polynomial", init=False)

    def __post_init__(self):
        if not (self.C > 0):
            raise ValueError(f"C must be positive, got {self.C}")
        if not (self.alpha > 1):
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        if not (self.beta > 0):
            raise ValueError(f"beta must be positive, got {self.beta}")


def _check_exponential(cert) -> None:
    if getattr(cert, "kind", None) != "exponential":
        raise TypeError("expected an exponential contraction certificate")
    if not (0.0 < cert.rho < 1.0):
        raise ValueError(f"rho must lie in (0,1), got {cert.rho}")


def _check_polynomial(cert) -> None:
    if getattr(cert, "kind", None) != "polynomial":
        raise TypeError("expected a polynomial contraction certificate")
    if not (cert.alpha > 1):
        raise ValueError(f"alpha must exceed 1, got {cert.alpha} (tail integral diverges)")
    if not (cert.beta > 0):
        raise ValueError(f"beta must be positive, got {cert.beta}")


# ---------------------------------------------------------------------------
# stationary-distance bounds

def bound_exponential(cert: ExponentialContraction, eps: float) -> float:
    """Bound d_W(pi, pi~) <= C eps / log(1/rho) for a drift error ||b - b~|| <= eps.

    Uses -log(rho) directly so that certificates built as rho = e^{-k}
    reproduce C*eps/k without rounding detours.
    """
    _check_exponential(cert)
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    return cert.C * eps / cert.log_rate


def bound_stochastic(cert: ExponentialContraction, expected_eps: float) -> float:
    """Same formula with eps replaced by the stationary mean of the conditional bias.

    For a stochastic drift b~(x, y), expected_eps estimates the stationary
    expectation of eps(x) >= ||b(x) - E[b~(X,Y) | X = x]||.
    """
    _check_exponential(cert)
    if expected_eps < 0:
        raise ValueError(f"expected_eps must be nonnegative, got {expected_eps}")
    return cert.C * expected_eps / cert.log_rate


def bound_polynomial(cert: PolynomialContraction, eps: float) -> float:
    """Bound d_W(pi, pi~) <= C eps / ((alpha - 1) beta^(alpha - 1))."""
    _check_polynomial(cert)
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    return cert.C * eps / ((cert.alpha - 1.0) * cert.beta ** (cert.alpha - 1.0))


def bound_zzp(cert: PolynomialContraction, eps_l1: float) -> float:
    """Zig-zag stationary bound for an l1 switching-rate error.

    eps_l1 bounds ||lambda - lambda~||_1 pointwise; for rates of the form
    (-theta_i d_i log pi)^+ + gamma_i, an l1 gradient error
    ||grad log pi - grad log pi~||_1 <= eps suffices because the positive
    part is 1-Lipschitz componentwise.
    """
    return bound_polynomial(cert, eps_l1)


def bound_pdmp(C_F: float, eps_F: float, C_A: float, eps_A: float,
               alpha: float, beta: float) -> float:
    """Stationary bound (C_F eps_F + C_A eps_A) / ((alpha-1) beta^(alpha-1)).

    The flow error eps_F and the jump (rate/kernel) error eps_A enter with
    their own contraction constants; a zero error is taken with a zero
    constant, so an eps_F = 0 call reduces to the rate-error-only bound.
    """
    if not (alpha > 1):
        raise ValueError(f"alpha must exceed 1, got {alpha} (tail integral diverges)")
    if not (beta > 0):
        raise ValueError(f"beta must be positive, got {beta}")
    for name, val in (("C_F", C_F), ("eps_F", eps_F), ("C_A", C_A), ("eps_A", eps_A)):
        if val < 0:
            raise ValueError(f"{name} must be nonnegative, got {val}")
    # convention: a vanishing error contributes nothing regardless of its constant
    cf = 0.0 if eps_F == 0 else C_F
    ca = 0.0 if eps_A == 0 else C_A
    return (cf * eps_F + ca * eps_A) / ((alpha - 1.0) * beta ** (alpha - 1.0))


# ---------------------------------------------------------------------------
# certificate constructors

def cert_from_strong_concavity(k: float) -> ExponentialContraction:
    """Certificate (C = 1, rho = e^{-k}) for a k-strongly log-concave target."""
    if not (k > 0):
        raise ValueError(f"strong concavity constant must be positive, got {k}")
    return ExponentialContraction(C=1.0, rho=math.exp(-k), provenance="strong-concavity")


@dataclass(frozen=True)
class KappaProfile:
    """Piecewise-constant lower envelope for the pairwise curvature kappa(r).

    kappa(r) >= -ell for r <= R and kappa(r) >= k for r > R, with R0 the
    radius past which kappa is nonnegative (so R0 <= R whenever ell > 0).
    """

    R: float
    ell: float
    k: float
    R0: float

    def __post_init__(self):
        if not (self.k > 0):
            raise ValueError(f"tail curvature k must be positive, got {self.k}")
        if self.R < 0 or self.ell < 0 or self.R0 < 0:
            raise ValueError("R, ell, R0 must be nonnegative")
        if self.R0 > self.R:
            raise ValueError(
                f"R0 = {self.R0} exceeds R = {self.R}; curvature is already "
                "positive past R, so the sign change must happen at or before it"
            )


def cert_from_kappa_profile(profile: KappaProfile) -> ExponentialContraction:
    """Exponential certificate for targets that are log-concave only in the tails.

    C = exp((1/4) * integral_0^R0 of r * kappa(r)^- dr), evaluated on the
    piecewise-constant envelope in closed form (kappa^- = ell below R0), so
    C = exp(ell R0^2 / 8) >= 1.  The decay rate comes from the two-case
    estimate

        1/log(1/rho) <= (3e/2) max(R^2, 8/k)                if ell R0^2 <= 8
        1/log(1/rho) <= 8 sqrt(2 pi) e^{ell R^2/8} (1/ell + 1/k) / (R sqrt(ell))
                        + 32 / (R^2 k^2)                    otherwise

    and we store rho = exp(-1/bound), the slowest rate the estimate allows.
    """
    R, ell, k, R0 = profile.R, profile.ell, profile.k, profile.R0
    C = math.exp(ell * R0 * R0 / 8.0)
    if ell * R0 * R0 <= 8.0:
        inv_log = (3.0 * math.e / 2.0) * max(R * R, 8.0 / k)
    else:
        # here ell > 0 and R >= R0 > 0, so every divisor is positive
        inv_log = (
            8.0 * math.sqrt(2.0 * math.pi) / (R * math.sqrt(ell))
            * (1.0 / ell + 1.0 / k) * math.exp(ell * R * R / 8.0)
            + 32.0 / (R * R * k * k)
        )
    return ExponentialContraction(C=C, rho=math.exp(-1.0 / inv_log), provenance="kappa-profile")


# ---------------------------------------------------------------------------
# ULA step schedules and finite-sample bound

@dataclass(frozen=True)
class StepSchedule:
    """Step sizes gamma_i = gamma1 * i^(-alpha) for i = 1, 2, ...

    alpha = 0 gives a constant schedule; the decreasing-step theory uses
    alpha in (0, 1).  gamma1_ok records, when curvature constants were
    available, whether gamma1 < 1/(k + L) held (required by the
    finite-sample bound; the sampler itself runs either way).
    """

    gamma1: float
    alpha: float = 0.0
    gamma1_ok: bool | None = None

    def __post_init__(self):
        if not (self.gamma1 > 0):
            raise ValueError(f"gamma1 must be positive, got {self.gamma1}")
        if not (0.0 <= self.alpha < 1.0):
            raise ValueError(f"alpha must lie in [0,1), got {self.alpha}")

    def gamma(self, i: int) -> float:
        """Step used for the i-th update, i >= 1."""
        if i < 1:
            raise ValueError(f"step index starts at 1, got {i}")
        return self.gamma1 * float(i) ** (-self.alpha)

    def gammas(self, n: int) -> np.ndarray:
        """The first n steps as a vector."""
        return self.gamma1 * np.arange(1, n + 1, dtype=float) ** (-self.alpha)


def kappa_f(k_f: float, L_f: float) -> float:
    """Harmonic-style curvature constant 2 k L / (k + L)."""
    if not (k_f > 0 and L_f > 0):
        raise ValueError("k_f and L_f must be positive")
    return 2.0 * k_f * L_f / (k_f + L_f)


def ula_step_schedule(kappa: float, T: int, alpha: float,
                      k_f: float | None = None,
                      L_f: float | None = None) -> StepSchedule:
    """Decreasing schedule gamma1 = 2(1-alpha) kappa^{-1} (2/T)^{1-alpha} log(kappa T / (2(1-alpha))).

    kappa is the constant 2 k L/(k + L) of the target.  When k_f and L_f
    are supplied the result records whether gamma1 < 1/(k_f + L_f), the
    validity condition of the companion finite-sample bound.
    """
    if not (kappa > 0):
        raise ValueError(f"kappa must be positive, got {kappa}")
    if T < 2:
        raise ValueError(f"need at least T = 2 steps, got {T}")
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0,1), got {alpha}")
    log_arg = kappa * T / (2.0 * (1.0 - alpha))
    if log_arg <= 1.0:
        raise ValueError(
            f"schedule undefined: kappa*T/(2(1-alpha)) = {log_arg} <= 1 "
            "(increase T or kappa)"
        )
    gamma1 = 2.0 * (1.0 - alpha) / kappa * (2.0 / T) ** (1.0 - alpha) * math.log(log_arg)
    ok = None
    if k_f is not None and L_f is not None:
        ok = bool(gamma1 < 1.0 / (k_f + L_f))
    return StepSchedule(gamma1=gamma1, alpha=alpha, gamma1_ok=ok)


def ula_finite_sample_bound(k_f: float, L_f: float, d: int, T: int, alpha: float) -> float:
    """Squared-Wasserstein bound 16(1-alpha) L^2 kappa^{-3} d T^{-1} log(kappa T / (2(1-alpha))).

    Valid for the schedule from ula_step_schedule when gamma1 < 1/(k + L);
    callers comparing against empirical distances take the square root.
    """
    if not (k_f > 0 and L_f > 0):
        raise ValueError("k_f and L_f must be positive")
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0,1), got {alpha}")
    if d < 1 or T < 2:
        raise ValueError("need d >= 1 and T >= 2")
    kap = kappa_f(k_f, L_f)
    sched = ula_step_schedule(kap, T, alpha, k_f=k_f, L_f=L_f)
    if not sched.gamma1_ok:
        raise ValueError(
            f"gamma1 = {sched.gamma1:.6g} is not below 1/(k+L) = {1.0 / (k_f + L_f):.6g}; "
            "the finite-sample bound needs a larger T"
        )
    log_arg = kap * T / (2.0 * (1.0 - alpha))
    return 16.0 * (1.0 - alpha) * L_f ** 2 / kap ** 3 * d / T * math.log(log_arg)


# ---------------------------------------------------------------------------
# compute-budget matching

@dataclass(frozen=True)
class BudgetModel:
    """Inner-product cost accounting for an exact vs. approximate chain pair.

    The exact chain costs N d-dimensional inner products per step; the
    approximate chain costs d (a precomputed d x d matrix-vector product)
    plus a one-off N d setup.  Matching total cost gives
    T_tilde = N (T/d - 1), floored.
    """

    N: int
    d: int
    T: int
    T_tilde: int

    @property
    def cost_exact(self) -> int:
        return self.T * self.N

    @property
    def cost_approx(self) -> int:
        return (self.T_tilde + self.N) * self.d

    @property
    def residual(self) -> int:
        """Cost mismatch from flooring; always below d inner products."""
        return self.cost_exact - self.cost_approx


def matched_budget_steps(N: int, T: int, d: int) -> int:
    """Approximate-chain step count T_tilde = floor(N (T/d - 1))."""
    if N < 1 or d < 1:
        raise ValueError("need N >= 1 and d >= 1")
    if T <= d:
        raise ValueError(f"budget matching needs T > d, got T = {T}, d = {d}")
    return int(math.floor(N * (T / d - 1.0)))


def budget_model(N: int, T: int, d: int) -> BudgetModel:
    """Matched budget with the residual mismatch exposed."""
    return BudgetModel(N=N, d=d, T=T, T_tilde=matched_budget_steps(N, T, d))


# ---------------------------------------------------------------------------
# GLM posterior constants

def spectral_norm(A: np.ndarray, tol: float = 1e-8, max_iter: int = 100_000) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Iterates v <- Av/||Av|| until the Rayleigh quotient moves by less than
    tol in relative terms.  Deterministic start at the normalized all-ones
    vector with a fallback perturbation if that lands in the kernel.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    v = np.ones(n) / math.sqrt(n)
    w = A @ v
    if np.linalg.norm(w) == 0.0:
        # all-ones landed in the kernel; retry from a fixed full-support vector
        v = np.random.default_rng(0).standard_normal(n)
        v /= np.linalg.norm(v)
        w = A @ v
        if np.linalg.norm(w) == 0.0:
            return 0.0
    lam = float(v @ w)
    for _ in range(max_iter):
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        w = A @ v
        lam_new = float(v @ w)
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-300):
            return lam_new
        lam = lam_new
    raise RuntimeError(f"power iteration did not converge in {max_iter} iterations")


@dataclass(frozen=True)
class GLMConstants:
    """Curvature and smoothness constants of a GLM posterior.

    k_N = k_0 + k_phi ||A_N||_2 with A_N = sum_i y_i y_i^T,
    L_N = L_0 + L_phi S_2, M_N = M_0 + M_phi S_3, S_p = sum_i ||y_i||^p.
    """

    k_N: float
    L_N: float
    M_N: float
    S2: float
    S3: float
    A_norm: float


def glm_constants(model: "GLMPosterior") -> GLMConstants:
    """Assemble (k_N, L_N, M_N) from prior and link constants and the data."""
    prior = model.prior
    link = model.link
    missing = [name for name, val in (
        ("prior.concavity", prior.concavity),
        ("prior.lipschitz", prior.lipschitz),
        ("prior.third_derivative_bound", getattr(prior, "third_derivative_bound", None)),
        ("link.concavity", link.concavity),
        ("link.curvature_sup", link.curvature_sup),
        ("link.third_derivative_sup", link.third_derivative_sup),
    ) if val is None]
    if missing:
        raise ValueError("undeclared constants: " + ", ".join(missing))
    Y = model.data
    if Y.shape[0] == 0:
        s2 = s3 = a_norm = 0.0
    else:
        norms = np.linalg.norm(Y, axis=1)
        s2 = float(np.sum(norms ** 2))
        s3 = float(np.sum(norms ** 3))
        a_norm = spectral_norm(Y.T @ Y)
    return GLMConstants(
        k_N=prior.concavity + link.concavity * a_norm,
        L_N=prior.lipschitz + link.curvature_sup * s2,
        M_N=prior.third_derivative_bound + link.third_derivative_sup * s3,
        S2=s2,
        S3=s3,
        A_norm=a_norm,
    )


# ---------------------------------------------------------------------------
# audit records

def audit_record(formula: str, inputs: dict, value: float, provenance: str) -> dict:
    """JSON-ready record of a bound evaluation for experiment audit logs."""
    return {
        "formula": formula,
        "inputs": {k: (float(v) if isinstance(v, (int, float, np.floating)) else v)
                   for k, v in inputs.items()},
        "value": float(value),
        "provenance": provenance,
    }
