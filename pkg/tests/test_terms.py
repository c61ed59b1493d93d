import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from structured_garrote.ingest import DataError, Dataset, center
from structured_garrote.terms import (
    Term, dependence_sets, expand_quadratic, main_effects, quadratic_terms, raw_coefficients,
    term_count,
)


def _data(n=30, q=3, seed=0, binary=()):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, q))
    for j in binary:
        x[:, j] = rng.integers(0, 2, n)
    return Dataset(x, rng.normal(size=n), tuple(f"x{j + 1}" for j in range(q)))


def test_three_continuous_give_nine_terms():
    ts = expand_quadratic(center(_data()))
    assert ts.p == 9
    assert ts.labels == ["x1", "x2", "x3", "x1^2", "x2^2", "x3^2", "x1:x2", "x1:x3", "x2:x3"]


@pytest.mark.parametrize("q,n_bin,p", [(13, 1, 103), (10, 1, 64), (9, 0, 54), (8, 0, 44),
                                       (6, 0, 27), (9, 1, 53), (8, 0, 44)])
def test_term_counts(q, n_bin, p):
    assert term_count(q, n_bin) == p
    assert len(quadratic_terms([f"v{j}" for j in range(q)], [j < n_bin for j in range(q)])) == p


def test_binary_square_dropped():
    ts = expand_quadratic(center(_data(q=3, binary=(1,))))
    assert "x2^2" not in ts.labels
    assert ts.p == 8


def test_dependence_sets():
    ts = expand_quadratic(center(_data()))
    g = dependence_sets(ts)
    idx = {lb: k for k, lb in enumerate(ts.labels)}
    assert g[idx["x1:x2"]] == {idx["x1"], idx["x2"]}
    assert g[idx["x1"]] == frozenset()
    assert g[idx["x1^2"]] == {idx["x1"]}
    assert all(all(g[j] == frozenset() for j in g[i]) for i in range(g.p))


def test_columns_mean_zero_and_products_of_centered_mains():
    d = _data(seed=2)
    cd = center(d)
    ts = expand_quadratic(cd)
    np.testing.assert_allclose(ts.design.mean(axis=0), 0.0, atol=1e-13)
    prod = cd.x_c[:, 0] * cd.x_c[:, 1]
    np.testing.assert_allclose(ts.design[:, ts.labels.index("x1:x2")], prod - prod.mean(), atol=1e-13)


def test_duplicate_predictors_make_constant_square_difference():
    x = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, -1.0], [3.0, -2.0]])
    # x2 = 1 - x1 so x1*x2 centered is a multiple of x1^2, not constant; a truly
    # constant derived column needs a two-point binary pair
    d = Dataset(np.array([[0.0, 1.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]), np.arange(4.0))
    with pytest.raises(DataError):
        expand_quadratic(center(d))
    expand_quadratic(center(Dataset(x, np.arange(4.0))))


def test_transform_reproduces_training_design():
    d = _data(seed=3)
    ts = expand_quadratic(center(d))
    np.testing.assert_allclose(ts.transform(d.x), ts.design, atol=1e-12)


def test_term_invariants():
    with pytest.raises(ValueError):
        Term("interaction", (1, 1), "x:x")
    with pytest.raises(ValueError):
        Term("square", (), "x^2")


def test_main_effects_only():
    ts = main_effects(center(_data()))
    assert ts.p == 3 and dependence_sets(ts).children() == []


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), q=st.integers(2, 4))
def test_raw_coefficients_reproduce_fitted_surface(seed, q):
    d = _data(n=25, q=q, seed=seed)
    ts = expand_quadratic(center(d))
    rng = np.random.default_rng(seed + 7)
    beta, b0 = rng.normal(size=ts.p), float(rng.normal())
    x_new = rng.normal(size=(10, q)) * 2
    fitted = b0 + ts.transform(x_new) @ beta
    raw, raw0 = raw_coefficients(ts, beta, b0)
    raw_cols = np.column_stack([
        x_new[:, t.parents[0]] ** 2 if t.kind == "square"
        else x_new[:, t.parents[0]] * x_new[:, t.parents[1]] if t.kind == "interaction"
        else x_new[:, k]
        for k, t in enumerate(ts.terms)])
    np.testing.assert_allclose(raw0 + raw_cols @ raw, fitted, atol=1e-9)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6), perm_seed=st.integers(0, 100))
def test_permutation_equivariance(seed, perm_seed):
    d = _data(seed=seed, q=4)
    perm = np.random.default_rng(perm_seed).permutation(4)
    dp = Dataset(d.x[:, perm], d.y, tuple(d.names[j] for j in perm))
    a = expand_quadratic(center(d))
    b = expand_quadratic(center(dp))

    def canon(lb):
        return ":".join(sorted(lb.split(":")))

    cols_a = {canon(lb): a.design[:, k] for k, lb in enumerate(a.labels)}
    for k, lb in enumerate(b.labels):
        np.testing.assert_allclose(b.design[:, k], cols_a[canon(lb)], atol=1e-12)
