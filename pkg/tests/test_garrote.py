import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from structured_garrote.constraints import build, check_support
from structured_garrote.garrote import (
    FitError, InitialEstimate, build_problem, default_grid, fit_initial, fit_lagrange, fit_path,
    model_error,
)
from structured_garrote.ingest import Dataset, center
from structured_garrote.terms import dependence_sets, expand_quadratic

from _oracles import ols


def _problem(seed, n=60, q=3, noise=1.0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, q))
    y = 3 * x[:, 0] + 2 * x[:, 1] + 1.5 * x[:, 0] * x[:, 1] + noise * rng.normal(size=n)
    cd = center(Dataset(x, y))
    ts = expand_quadratic(cd)
    return ts, cd.y_c


def test_default_grid():
    np.testing.assert_allclose(default_grid(9)[[0, 1, -1]], [0.0, 0.09, 9.0])
    assert default_grid(9).size == 101
    np.testing.assert_array_equal(default_grid(9, 1), [0.0])


def test_orthonormal_projection_init():
    from structured_garrote.terms import TermSet, Term
    q_mat, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(20, 3)))
    ts = TermSet(tuple(Term("main", (), f"x{j}") for j in range(3)), q_mat, 3, np.zeros(3), np.zeros(3))
    init = fit_initial(ts, q_mat[:, 0])
    np.testing.assert_allclose(init.beta_init, [1, 0, 0], atol=1e-12)


def test_identity_scaling_problem():
    ts, y = _problem(1)
    prob = build_problem(ts, y, InitialEstimate(np.ones(ts.p), "least-squares"),
                         build(dependence_sets(ts), "none"))
    np.testing.assert_allclose(prob.q_mat, ts.design.T @ ts.design)
    np.testing.assert_allclose(prob.c, -ts.design.T @ y)


def test_endpoints():
    ts, y = _problem(2)
    init = fit_initial(ts, y)
    for mode in ("none", "weak", "strong"):
        path = fit_path(ts, y, init, build(dependence_sets(ts), mode))
        np.testing.assert_array_equal(path.fits[0].beta, 0.0)
        assert path.fits[0].support == ()
        np.testing.assert_allclose(path.fits[-1].beta, ols(ts.design, y), atol=1e-8)


def test_ls_requires_n_greater_than_p():
    rng = np.random.default_rng(3)
    cd = center(Dataset(rng.normal(size=(8, 3)), rng.normal(size=8)))
    ts = expand_quadratic(cd)
    with pytest.raises(FitError, match="ridge"):
        fit_initial(ts, cd.y_c, "ls")
    init = fit_initial(ts, cd.y_c, "ridge")
    assert init.ridge_lambda > 0
    path = fit_path(ts, cd.y_c, init, build(dependence_sets(ts), "strong"))
    assert all(check_support(s, dependence_sets(ts), "strong") for s in path.supports)


def test_ridge_small_penalty_matches_ls():
    ts, y = _problem(4)
    init = fit_initial(ts, y, "ridge", lambda_grid=[1e-10])
    np.testing.assert_allclose(init.beta_init, ols(ts.design, y), atol=1e-6)


def test_zero_initial_coefficient_rejected():
    ts, y = _problem(5)
    beta = np.ones(ts.p)
    beta[2] = 0.0
    with pytest.raises(FitError, match="zero"):
        build_problem(ts, y, InitialEstimate(beta, "least-squares"), build(dependence_sets(ts), "none"))


def test_one_predictor_unbudgeted_theta_is_one():
    from structured_garrote.terms import TermSet, Term
    x = np.array([[1.0], [-1.0], [2.0], [-2.0]])
    y = 1.7 * x[:, 0] + np.array([0.1, 0.1, -0.05, -0.05])
    ts = TermSet((Term("main", (), "x"),), x, 1, np.zeros(1), np.zeros(1))
    init = fit_initial(ts, y)
    path = fit_path(ts, y, init, build(dependence_sets(ts), "none"), [0.0, 0.5, 1.0, 2.0])
    assert path.fits[-1].theta[0] == pytest.approx(1.0, abs=1e-12)
    assert path.fits[1].theta[0] == pytest.approx(0.5, abs=1e-12)


def test_lagrange_zero_penalty_is_least_squares():
    ts, y = _problem(6)
    init = fit_initial(ts, y)
    fit = fit_lagrange(ts, y, init, build(dependence_sets(ts), "strong"), 0.0)
    np.testing.assert_allclose(fit.beta, init.beta_init, atol=1e-8)


def test_lagrange_matches_budget_form():
    ts, y = _problem(7)
    init = fit_initial(ts, y)
    cs = build(dependence_sets(ts), "weak")
    lag = fit_lagrange(ts, y, init, cs, 20.0)
    path = fit_path(ts, y, init, cs, [lag.m])
    np.testing.assert_allclose(path.fits[0].theta, lag.theta, atol=1e-7)


def test_model_error_examples():
    assert model_error(np.ones(3), np.ones(3), np.eye(3)) == 0.0
    assert model_error(np.zeros(3), np.array([1.0, 0, 0]), np.eye(3)) == 1.0


def test_model_one_recovers_truth_support():
    ts, y = _problem(8, n=200, noise=1.0)
    init = fit_initial(ts, y)
    path = fit_path(ts, y, init, build(dependence_sets(ts), "strong"))
    assert any(set(s) == {0, 1, 6} for s in path.supports)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_heredity_and_nesting(seed):
    ts, y = _problem(seed, n=40, noise=3.0)
    init = fit_initial(ts, y)
    g = dependence_sets(ts)
    rss = {}
    for mode in ("none", "weak", "strong"):
        path = fit_path(ts, y, init, build(g, mode))
        assert all(check_support(s, g, mode) for s in path.supports)
        rss[mode] = np.array([f.rss for f in path.fits])
    assert np.all(rss["strong"] >= rss["weak"] - 1e-10)
    assert np.all(rss["weak"] >= rss["none"] - 1e-10)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6), k=st.floats(0.1, 50.0))
def test_scale_consistency(seed, k):
    ts, y = _problem(seed, n=40)
    cs = build(dependence_sets(ts), "strong")
    a = fit_path(ts, y, fit_initial(ts, y), cs)
    b = fit_path(ts, k * y, fit_initial(ts, k * y), cs)
    np.testing.assert_allclose(b.thetas, a.thetas, atol=1e-9)
    np.testing.assert_allclose(b.betas, k * a.betas, atol=1e-9 * k * max(1.0, np.abs(a.betas).max()))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_objective_monotone_along_grid(seed):
    ts, y = _problem(seed, n=40, noise=2.0)
    path = fit_path(ts, y, fit_initial(ts, y), build(dependence_sets(ts), "weak"))
    obj = np.array([f.objective for f in path.fits])
    assert np.all(np.diff(obj) <= 1e-9 * max(1.0, np.abs(obj).max()))


def test_ridge_gcv_interior_when_p_exceeds_n():
    # q = 10 gives p = 65 > n = 50; GCV must not run off to the smallest penalty
    rng = np.random.default_rng(11)
    x = rng.normal(size=(50, 10))
    y = 3 * x[:, 0] + 2 * x[:, 1] + 4 * x[:, 0] * x[:, 1] + 3 * rng.normal(size=50)
    cd = center(Dataset(x, y))
    ts = expand_quadratic(cd)
    init = fit_initial(ts, cd.y_c, "ridge")
    base = np.trace(ts.design.T @ ts.design) / ts.p
    assert 1e-5 * base < init.ridge_lambda < 1e5 * base
