"""Target families: gradients against finite differences, concavity
constants, mode finding against a bisection oracle, exact samplers."""

import math

import numpy as np
import pytest

from diffbounds.targets import (
    GLMPosterior,
    Gaussian,
    GaussianMixture2,
    LinkFunction,
    find_mode,
    grad_log_density,
    logistic_link,
    model_from_config,
    sample_exact,
    strong_concavity_constant,
)


def fd_grad(model, x, h=1e-6):
    """Central-difference gradient of log density at a single point."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        fp = model.log_density((x + e)[None, :])[0]
        fm = model.log_density((x - e)[None, :])[0]
        g[j] = (fp - fm) / (2 * h)
    return g


def make_glm(seed=0, n=8, d=3, arg_bound=5.0):
    rng = np.random.default_rng(seed)
    ys = rng.standard_normal((n, d)) * 0.7
    return GLMPosterior(prior=Gaussian(dim=d), link=logistic_link(arg_bound), data=ys)


# ---------------------------------------------------------------------------
# gradients

def test_gradient_hand_values():
    mix = GaussianMixture2(delta=np.array([1.0]))
    assert np.allclose(mix.grad_log_density(np.zeros((1, 1))), 0.0)
    g = Gaussian(dim=2)
    assert np.allclose(g.grad_log_density(np.array([[2.0, -1.0]])), [[-2.0, 1.0]])


def test_gradient_fd_spot_check():
    mix = GaussianMixture2(delta=np.array([1.0]))
    x = np.array([0.5])
    got = mix.grad_log_density(x[None, :])[0]
    assert np.linalg.norm(got - fd_grad(mix, x)) < 1e-5


def test_gradient_matches_finite_differences_everywhere():
    models = [
        Gaussian(dim=3, mean=np.array([0.5, -1.0, 2.0]), sigma2=1.7),
        GaussianMixture2(delta=np.array([1.0, 0.0])),
        GaussianMixture2(delta=np.array([0.5])),
        make_glm(seed=1),
    ]
    rng = np.random.default_rng(2)
    for model in models:
        pts = rng.standard_normal((100, model.dim)) * 1.5
        grads = model.grad_log_density(pts)
        for x, g in zip(pts, grads):
            ref = fd_grad(model, x)
            scale = max(np.linalg.norm(ref), 1.0)
            assert np.linalg.norm(g - ref) / scale < 1e-5


def test_grad_log_density_helper():
    model = Gaussian(dim=2)
    pts = np.array([[1.0, 2.0], [0.0, -1.0]])
    assert np.array_equal(grad_log_density(model, pts), model.grad_log_density(pts))


# ---------------------------------------------------------------------------
# concavity constants

def test_concavity_hand_values():
    assert GaussianMixture2(delta=np.array([1.0])).concavity == 0.75
    assert Gaussian(dim=1).concavity == 1.0
    assert GaussianMixture2(delta=np.array([2.5])).concavity is None
    assert strong_concavity_constant(Gaussian(dim=3, sigma2=4.0)) == 0.25


def test_mixture_lipschitz():
    assert GaussianMixture2(delta=np.array([1.0])).lipschitz == 1.0
    # wide separation inflates the gradient Lipschitz constant
    assert GaussianMixture2(delta=np.array([4.0])).lipschitz == 3.0


def test_concavity_inequality_on_random_pairs():
    # models reporting k > 0 must satisfy the monotonicity inequality
    # (b(x) - b(x'), x - x') <= -k |x - x'|^2 on sampled pairs
    models = [
        Gaussian(dim=2, sigma2=2.0),
        GaussianMixture2(delta=np.array([1.0])),
        GaussianMixture2(delta=np.array([0.5, 0.0])),
    ]
    rng = np.random.default_rng(3)
    for model in models:
        k = strong_concavity_constant(model)
        assert k is not None and k > 0
        for _ in range(1000):
            x = rng.standard_normal(model.dim) * 2
            xp = rng.standard_normal(model.dim) * 2
            if np.allclose(x, xp):
                continue
            gx = model.grad_log_density(x[None, :])[0]
            gxp = model.grad_log_density(xp[None, :])[0]
            lhs = float(np.dot(gx - gxp, x - xp))
            assert lhs <= -k * float(np.sum((x - xp) ** 2)) + 1e-9


def test_glm_concavity_inequality_inside_argument_ball():
    # the GLM constant uses the spectral norm of the data Gram matrix, which
    # overstates the curvature floor off the top eigenvector by at most
    # k_phi (lmax - lmin); allow exactly that slack
    model = make_glm(seed=4, n=10, d=3, arg_bound=4.0)
    from diffbounds.bounds import glm_constants
    c = glm_constants(model)
    A = model.data.T @ model.data
    evals = np.linalg.eigvalsh(A)
    slack = model.link.concavity * float(evals[-1] - evals[0])
    rng = np.random.default_rng(5)
    radius = 4.0 / max(float(np.linalg.norm(model.data, axis=1).max()), 1e-12)
    for _ in range(500):
        x = rng.standard_normal(3)
        x *= rng.uniform(0, radius) / max(np.linalg.norm(x), 1e-12)
        xp = rng.standard_normal(3)
        xp *= rng.uniform(0, radius) / max(np.linalg.norm(xp), 1e-12)
        if np.allclose(x, xp):
            continue
        gx = model.grad_log_density(x[None, :])[0]
        gxp = model.grad_log_density(xp[None, :])[0]
        lhs = float(np.dot(gx - gxp, x - xp))
        assert lhs <= -(c.k_N - slack) * float(np.sum((x - xp) ** 2)) + 1e-9


def test_hessian_matches_gradient_fd():
    models = [Gaussian(dim=2, sigma2=1.5), GaussianMixture2(delta=np.array([0.8])),
              make_glm(seed=6)]
    rng = np.random.default_rng(7)
    for model in models:
        x = rng.standard_normal(model.dim)
        H = model.hessian(x)
        assert np.allclose(H, H.T)
        h = 1e-6
        for j in range(model.dim):
            e = np.zeros(model.dim)
            e[j] = h
            col = (model.grad_log_density((x + e)[None, :])[0]
                   - model.grad_log_density((x - e)[None, :])[0]) / (2 * h)
            assert np.linalg.norm(H[:, j] - col) < 1e-4


# ---------------------------------------------------------------------------
# mixture structure

def test_mixture_density_is_symmetric():
    mix = GaussianMixture2(delta=np.array([1.2, -0.4]))
    rng = np.random.default_rng(8)
    pts = rng.standard_normal((50, 2))
    assert np.allclose(mix.log_density(pts), mix.log_density(-pts))


def test_mixture_matches_two_component_form():
    delta = np.array([0.9])
    mix = GaussianMixture2(delta=delta)
    pts = np.linspace(-3, 3, 41)[:, None]
    direct = np.logaddexp(
        -0.5 * np.sum((pts - delta / 2) ** 2, axis=1),
        -0.5 * np.sum((pts + delta / 2) ** 2, axis=1))
    diff = mix.log_density(pts) - direct
    assert np.ptp(diff) < 1e-12  # equal up to one normalising constant


def test_mixture_variance_formula():
    # component means at +-delta/2 give marginal variance 1 + delta^2/4
    delta = np.array([4.0])
    mix = GaussianMixture2(delta=delta)
    s = sample_exact(mix, 200000, seed=9)
    assert abs(np.var(s.points) - 5.0) < 0.1


# ---------------------------------------------------------------------------
# mode finding

def test_find_mode_prior_only():
    model = GLMPosterior(prior=Gaussian(dim=3), link=logistic_link(3.0),
                         data=np.zeros((0, 3)))
    assert np.allclose(find_mode(model), 0.0, atol=1e-10)
    assert np.allclose(find_mode(Gaussian(dim=2, mean=np.array([1.0, -2.0]))),
                       [1.0, -2.0], atol=1e-10)


def test_find_mode_single_logistic_datum():
    model = GLMPosterior(prior=Gaussian(dim=1), link=logistic_link(3.0),
                         data=np.array([[1.0]]))
    x_star = find_mode(model)
    # bisection oracle for the stationarity condition x = sigma(-x)
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid - 1.0 / (1.0 + math.exp(mid)) < 0:
            lo = mid
        else:
            hi = mid
    assert abs(x_star[0] - lo) < 1e-8
    assert abs(x_star[0] - 0.4011) < 5e-4


def test_find_mode_gradient_postcondition():
    for seed in range(5):
        model = make_glm(seed=seed, n=12, d=4)
        x_star = find_mode(model)
        g = model.grad_log_density(x_star[None, :])[0]
        assert np.linalg.norm(g) <= 1e-10


def test_find_mode_non_convergence_error():
    model = make_glm(seed=0)
    with pytest.raises(RuntimeError, match="did not converge"):
        find_mode(model, max_iter=1)


# ---------------------------------------------------------------------------
# exact samplers

def test_sample_exact_gaussian_moments():
    s = sample_exact(Gaussian(dim=1), 100000, seed=10)
    assert abs(np.mean(s.points)) < 0.02
    assert abs(np.var(s.points) - 1.0) < 0.03


def test_sample_exact_deterministic():
    a = sample_exact(GaussianMixture2(delta=np.array([1.0])), 100, seed=11)
    b = sample_exact(GaussianMixture2(delta=np.array([1.0])), 100, seed=11)
    assert np.array_equal(a.points, b.points)
    c = sample_exact(GaussianMixture2(delta=np.array([1.0])), 100, seed=12)
    assert not np.array_equal(a.points, c.points)


def test_sample_exact_records_seed():
    s = sample_exact(Gaussian(dim=1), 10, seed=13)
    assert s.seed == 13


def test_sample_exact_unavailable_for_glm():
    with pytest.raises(ValueError, match="exact sampl"):
        sample_exact(make_glm(), 10, seed=0)


# ---------------------------------------------------------------------------
# link functions

def test_logistic_link_derivative_ladder():
    link = logistic_link(3.0)
    ts = np.linspace(-4, 4, 33)
    h = 1e-6
    d1_fd = (link.value(ts + h) - link.value(ts - h)) / (2 * h)
    d2_fd = (link.d1(ts + h) - link.d1(ts - h)) / (2 * h)
    d3_fd = (link.d2(ts + h) - link.d2(ts - h)) / (2 * h)
    assert np.max(np.abs(link.d1(ts) - d1_fd)) < 1e-8
    assert np.max(np.abs(link.d2(ts) - d2_fd)) < 1e-8
    assert np.max(np.abs(link.d3(ts) - d3_fd)) < 1e-6


def test_logistic_link_constants():
    link = logistic_link(2.0)
    ts = np.linspace(-2, 2, 20001)
    assert abs(link.concavity - np.min(-link.d2(ts))) < 1e-9
    # global suprema, independent of the argument bound
    assert link.curvature_sup == 0.25
    assert abs(link.third_derivative_sup - 1.0 / (6 * math.sqrt(3.0))) < 1e-12
    tg = np.linspace(-10, 10, 200001)
    assert np.max(-link.d2(tg)) <= link.curvature_sup + 1e-12
    assert np.max(np.abs(link.d3(tg))) <= link.third_derivative_sup + 1e-12


def test_logistic_link_without_bound_has_no_concavity_floor():
    # over the whole line the logistic curvature infimum is zero
    link = logistic_link(None)
    assert link.concavity == 0.0


def test_link_function_optional_fields():
    bare = LinkFunction(value=lambda t: -t * t / 2.0, d1=lambda t: -t)
    assert bare.d2 is None and bare.concavity is None


# ---------------------------------------------------------------------------
# config construction

def test_model_from_config_families(tmp_path):
    g = model_from_config({"family": "gaussian", "dim": 3, "sigma2": 2.0})
    assert isinstance(g, Gaussian) and g.dim == 3 and g.sigma2 == 2.0
    m = model_from_config({"family": "mixture2", "delta": [1.0, 0.0]})
    assert isinstance(m, GaussianMixture2) and m.dim == 2
    path = tmp_path / "covariates.csv"
    np.savetxt(path, np.ones((4, 2)), delimiter=",")
    glm = model_from_config({"family": "glm_logistic", "data_path": str(path),
                             "arg_bound": 3.0})
    assert isinstance(glm, GLMPosterior) and glm.dim == 2
    assert glm.data.shape == (4, 2)


def test_model_from_config_errors():
    with pytest.raises(ValueError, match="family"):
        model_from_config({})
    with pytest.raises(ValueError, match="unknown model family"):
        model_from_config({"family": "cauchy"})
    with pytest.raises(ValueError, match="delta"):
        model_from_config({"family": "mixture2"})
