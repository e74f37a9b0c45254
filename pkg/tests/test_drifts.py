"""Drift constructions: exact score fields, controlled perturbations,
second-order surrogates, tail regularization, auxiliary-noise drifts."""

import math

import numpy as np
import pytest

from diffbounds.bounds import glm_constants
from diffbounds.drifts import (
    DriftField,
    drift_error_sup,
    exact_drift,
    mode_cloud_probe,
    offset_drift,
    ou_stochastic_drift,
    tail_regularized_drift,
    taylor2_drift,
    taylor_remainder_bound,
)
from diffbounds.metrics import SampleSet
from diffbounds.targets import (
    GLMPosterior,
    Gaussian,
    GaussianMixture2,
    LinkFunction,
    find_mode,
    logistic_link,
)


def make_glm(seed=0, n=8, d=3, arg_bound=5.0):
    rng = np.random.default_rng(seed)
    ys = rng.standard_normal((n, d)) * 0.7
    return GLMPosterior(prior=Gaussian(dim=d), link=logistic_link(arg_bound), data=ys)


def probe(dim, n=64, scale=2.0, seed=0):
    rng = np.random.default_rng(seed)
    return SampleSet(rng.standard_normal((n, dim)) * scale)


# ---------------------------------------------------------------------------
# exact drift

def test_exact_drift_hand_values():
    b = exact_drift(Gaussian(dim=2))
    x = np.array([[1.5, -0.5]])
    assert np.allclose(b(x), -x)
    mix = exact_drift(GaussianMixture2(delta=np.array([1.0])))
    assert np.allclose(mix(np.zeros((1, 1))), 0.0)


def test_exact_drift_vanishes_at_glm_mode():
    model = make_glm(seed=1)
    x_star = find_mode(model)
    b = exact_drift(model)
    assert np.linalg.norm(b(x_star[None, :])) <= 1e-9


def test_exact_drift_carries_lipschitz():
    assert exact_drift(Gaussian(dim=1)).lipschitz == 1.0
    assert exact_drift(GaussianMixture2(delta=np.array([4.0]))).lipschitz == 3.0


# ---------------------------------------------------------------------------
# offset drift

def test_offset_drift_hand_values():
    base = exact_drift(Gaussian(dim=1))
    same = offset_drift(base, 0.0)
    shifted = offset_drift(base, 0.25)
    x = np.linspace(-2, 2, 9)[:, None]
    assert np.array_equal(same(x), base(x))
    assert np.allclose(shifted(x), -x + 0.25)


def test_offset_drift_is_shifted_gaussian_score():
    # adding sigma^-2 (mu~ - mu) to a Gaussian score gives exactly the score
    # of the Gaussian with the new mean
    sigma2 = 2.0
    mu, mu_t = np.array([0.5, -1.0]), np.array([1.0, 0.0])
    b = exact_drift(Gaussian(dim=2, mean=mu, sigma2=sigma2))
    b_t = exact_drift(Gaussian(dim=2, mean=mu_t, sigma2=sigma2))
    shifted = offset_drift(b, (mu_t - mu) / sigma2)
    pts = probe(2).points
    assert np.max(np.abs(shifted(pts) - b_t(pts))) < 1e-12


def test_offset_error_is_exact():
    base = exact_drift(Gaussian(dim=3))
    e = np.array([0.06, -0.08, 0.0])
    tilted = offset_drift(base, e)
    for seed in range(5):
        p = probe(3, seed=seed)
        assert drift_error_sup(base, tilted, p) == pytest.approx(0.1, rel=1e-12)


# ---------------------------------------------------------------------------
# second-order surrogate

def test_taylor2_of_gaussian_is_exact():
    model = GLMPosterior(prior=Gaussian(dim=2), link=logistic_link(3.0),
                         data=np.zeros((0, 2)))
    b = exact_drift(model)
    b_lin = taylor2_drift(model)
    pts = probe(2).points
    assert np.max(np.abs(b(pts) - b_lin(pts))) < 1e-9


def test_taylor2_exact_for_quadratic_link():
    quad = LinkFunction(value=lambda t: -t * t / 2.0, d1=lambda t: -t,
                        d2=lambda t: -np.ones_like(t),
                        d3=lambda t: np.zeros_like(t),
                        concavity=1.0, curvature_sup=1.0,
                        third_derivative_sup=0.0, name="quadratic")
    rng = np.random.default_rng(2)
    model = GLMPosterior(prior=Gaussian(dim=3), link=quad,
                         data=rng.standard_normal((6, 3)))
    b = exact_drift(model)
    b_lin = taylor2_drift(model)
    pts = probe(3, seed=3).points
    assert np.max(np.abs(b(pts) - b_lin(pts))) < 1e-8


def test_taylor2_remainder_bound():
    model = make_glm(seed=4, n=10, d=3)
    x_star = find_mode(model)
    b = exact_drift(model)
    b_lin = taylor2_drift(model, x_star=x_star)
    c = glm_constants(model)
    rng = np.random.default_rng(5)
    for radius in (0.2, 0.5, 1.0, 2.0):
        cap = taylor_remainder_bound(model, radius)
        assert cap == pytest.approx(math.sqrt(3) * radius ** 2 * c.M_N, rel=1e-12)
        for _ in range(50):
            u = rng.standard_normal(3)
            u *= rng.uniform(0, radius) / np.linalg.norm(u)
            x = (x_star + u)[None, :]
            assert np.linalg.norm(b(x) - b_lin(x)) <= cap + 1e-12


def test_taylor2_linearity_invariant():
    model = make_glm(seed=6)
    x_star = find_mode(model)
    b_lin = taylor2_drift(model, x_star=x_star)
    assert np.linalg.norm(b_lin(x_star[None, :])) < 1e-9
    rng = np.random.default_rng(7)
    for _ in range(20):
        u = rng.standard_normal(3)
        one = b_lin((x_star + u)[None, :])
        two = b_lin((x_star + 2 * u)[None, :])
        assert np.max(np.abs(two - 2 * one)) < 1e-9


def test_taylor2_keeps_strong_concavity():
    # the surrogate's curvature is the mode Hessian, whose spectrum stays
    # within the certified window up to the Gram eigenvalue spread
    model = make_glm(seed=8, n=12, d=3, arg_bound=4.0)
    c = glm_constants(model)
    A = model.data.T @ model.data
    evals = np.linalg.eigvalsh(A)
    slack = model.link.concavity * float(evals[-1] - evals[0])
    x_star = find_mode(model)
    b_lin = taylor2_drift(model, x_star=x_star)
    rng = np.random.default_rng(9)
    for _ in range(200):
        x, xp = rng.standard_normal((2, 3))
        lhs = float(np.dot((b_lin(x[None, :]) - b_lin(xp[None, :]))[0], x - xp))
        assert lhs <= -(c.k_N - slack) * float(np.sum((x - xp) ** 2)) + 1e-9


# ---------------------------------------------------------------------------
# tail regularization

def test_tail_regularized_geometry():
    base = exact_drift(Gaussian(dim=2))
    eps, R = 0.2, 3.0
    reg = tail_regularized_drift(base, eps=eps, R=R)
    rng = np.random.default_rng(10)
    for _ in range(200):
        u = rng.standard_normal(2)
        u /= np.linalg.norm(u)
        r = float(rng.uniform(0.01, 3 * R))
        x = (r * u)[None, :]
        tilt = (reg(x) - base(x))[0]
        mag = np.linalg.norm(tilt)
        if r < R / 2:
            assert mag == 0.0
        elif r >= R:
            assert abs(mag - eps / 2) < 1e-12
        assert mag <= eps / 2 + 1e-12
        # perturbation points inward: x . (b - b_R) >= 0
        assert float(np.dot(x[0], -tilt)) >= -1e-12


def test_tail_regularized_is_continuous_at_knots():
    base = exact_drift(Gaussian(dim=1))
    reg = tail_regularized_drift(base, eps=0.4, R=2.0)
    for knot in (1.0, 2.0):
        lo = reg(np.array([[knot - 1e-9]]))
        hi = reg(np.array([[knot + 1e-9]]))
        assert abs(lo - hi) < 1e-6


def test_tail_regularized_tilt_is_conservative():
    # a gradient field has a symmetric Jacobian; check by finite differences
    base = DriftField(dim=3, fn=lambda x: np.zeros_like(x))
    reg = tail_regularized_drift(base, eps=0.3, R=2.0)
    rng = np.random.default_rng(11)
    h = 1e-6
    for _ in range(20):
        x = rng.standard_normal(3)
        x *= rng.uniform(1.2, 3.0) / np.linalg.norm(x)
        J = np.zeros((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            J[:, j] = (reg((x + e)[None, :])[0] - reg((x - e)[None, :])[0]) / (2 * h)
        assert np.max(np.abs(J - J.T)) < 1e-6


def test_tail_regularized_validation():
    base = exact_drift(Gaussian(dim=1))
    with pytest.raises(ValueError):
        tail_regularized_drift(base, eps=0.0, R=1.0)
    with pytest.raises(ValueError):
        tail_regularized_drift(base, eps=0.1, R=-1.0)


# ---------------------------------------------------------------------------
# auxiliary-noise drift

def test_ou_stochastic_drift_structure():
    base = exact_drift(Gaussian(dim=1))
    spec = ou_stochastic_drift(base, alpha=1.0, v=1.0)
    assert spec.aux_dim == 1
    y = np.array([[0.7]])
    assert np.allclose(spec.aux_drift(y), -0.7)
    assert np.allclose(spec.aux_noise @ spec.aux_noise.T, 2.0)
    x = np.array([[1.3]])
    assert np.array_equal(spec.combine(x, np.zeros((1, 1))), base(x))


def test_ou_stochastic_drift_unbiased_over_stationary_aux():
    base = exact_drift(Gaussian(dim=1))
    alpha, v = 2.0, 3.0
    spec = ou_stochastic_drift(base, alpha=alpha, v=v)
    rng = np.random.default_rng(12)
    n = 100000
    ys = rng.standard_normal((n, 1)) * math.sqrt(v / alpha)
    x = np.full((n, 1), 0.8)
    vals = spec.combine(x, ys)
    mc_se = float(np.std(vals) / math.sqrt(n))
    assert abs(float(np.mean(vals)) - float(base(x[:1])[0, 0])) < 5 * mc_se


def test_ou_stochastic_drift_validation():
    base = exact_drift(Gaussian(dim=1))
    with pytest.raises(ValueError):
        ou_stochastic_drift(base, alpha=0.0, v=1.0)
    with pytest.raises(ValueError):
        ou_stochastic_drift(base, alpha=1.0, v=-1.0)


# ---------------------------------------------------------------------------
# sup-error estimation

def test_drift_error_sup_zero_on_same_field():
    b = exact_drift(GaussianMixture2(delta=np.array([1.0])))
    assert drift_error_sup(b, b, probe(1)) == 0.0


def test_drift_error_sup_taylor_within_remainder():
    model = make_glm(seed=13)
    x_star = find_mode(model)
    b = exact_drift(model)
    b_lin = taylor2_drift(model, x_star=x_star)
    cloud = mode_cloud_probe(x_star, scale=0.5, n=256, seed=14)
    radii = np.linalg.norm(cloud.points - x_star, axis=1)
    sup = drift_error_sup(b, b_lin, cloud)
    assert sup <= taylor_remainder_bound(model, float(np.max(radii))) + 1e-12


def test_drift_error_sup_dimension_mismatch():
    with pytest.raises(ValueError):
        drift_error_sup(exact_drift(Gaussian(dim=1)), exact_drift(Gaussian(dim=2)),
                        probe(1))
    with pytest.raises(ValueError):
        drift_error_sup(exact_drift(Gaussian(dim=2)), exact_drift(Gaussian(dim=2)),
                        probe(3))


def test_mode_cloud_probe():
    center = np.array([1.0, -1.0])
    cloud = mode_cloud_probe(center, scale=0.3, n=500, seed=15)
    assert cloud.points.shape == (500, 2)
    assert np.allclose(np.mean(cloud.points, axis=0), center, atol=0.06)


def test_drift_field_call_passthrough():
    f = DriftField(dim=2, fn=lambda x: -x, lipschitz=1.0, label="linear")
    single = f([1.0, 2.0])
    batch = f(np.array([[1.0, 2.0], [0.0, -1.0]]))
    assert np.allclose(single, [-1.0, -2.0])
    assert batch.shape == (2, 2)
    assert f.lipschitz == 1.0 and f.label == "linear"
