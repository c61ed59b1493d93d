import numpy as np
import pytest

from structured_garrote import simlab
from structured_garrote.constraints import check_support
from structured_garrote.simlab import (
    SimConfig, SimError, gen_mvn, gen_response, run_consistency, run_elect_mode, run_table,
    term_covariance, toeplitz_cov, true_beta, true_support,
)
from structured_garrote.terms import DependenceGraph, quadratic_terms


def _graph(q):
    terms = quadratic_terms([f"X{j + 1}" for j in range(q)], [False] * q)
    return DependenceGraph(tuple(frozenset(t.parents) for t in terms))


def test_toeplitz_row():
    np.testing.assert_allclose(toeplitz_cov(3, 0.5)[0], [1.0, 0.5, 0.25])


def test_gen_mvn_uncorrelated_at_rho_zero():
    x = gen_mvn(3, 0.0, 10_000, np.random.default_rng(0))
    r = np.corrcoef(x.T)
    assert np.abs(r[np.triu_indices(3, 1)]).max() < 0.05


def test_gen_mvn_univariate():
    x = gen_mvn(1, 0.3, 5000, np.random.default_rng(1))
    assert x.shape == (5000, 1)
    assert abs(x.std() - 1) < 0.05


def test_gen_mvn_rejects_bad_rho():
    with pytest.raises(SimError):
        gen_mvn(3, 1.0, 10, np.random.default_rng(0))


def test_model_one_noiseless():
    rng = np.random.default_rng(2)
    x = gen_mvn(3, 0.0, 20, rng)
    y, beta = gen_response(x, "model-I", rng, sigma=0.0)
    np.testing.assert_allclose(y, 3 * x[:, 0] + 2 * x[:, 1] + 1.5 * x[:, 0] * x[:, 1])
    assert true_support("model-I", 3) == (0, 1, 6)
    assert check_support(true_support("model-I", 3), _graph(3), "strong")


def test_model_two_violates_strong():
    sup = true_support("model-II", 3)
    assert not check_support(sup, _graph(3), "strong")
    assert check_support(sup, _graph(3), "weak")


def test_effect_size_coefficients():
    beta = true_beta("effect-size", 4, alpha=4.0)
    labels = [t.label for t in quadratic_terms([f"X{j + 1}" for j in range(4)], [False] * 4)]
    got = {labels[j]: beta[j] for j in np.flatnonzero(beta)}
    assert got == {"X1": 3, "X2": 2, "X3": 1.5, "X1:X2": 4.0, "X1:X3": -4.0}


def test_incompatible_q():
    with pytest.raises(SimError):
        SimConfig(q=3, model="effect-size")
    with pytest.raises(SimError):
        SimConfig(q=1)


def test_config_validation():
    with pytest.raises(SimError):
        SimConfig(rho=1.5)
    with pytest.raises(SimError):
        SimConfig(sigma=1.0, snr=3.0)
    with pytest.raises(SimError):
        SimConfig(reps=0)


def test_term_covariance_known_moments():
    # rho = 0: Var(X1) = 1, Var(X1^2) = 2, Var(X1 X2) = 1, cov(X1, X1^2) = 0
    cov = term_covariance(3, 0.0)
    assert cov[0, 0] == pytest.approx(1.0, abs=0.01)
    assert cov[3, 3] == pytest.approx(2.0, abs=0.02)
    assert cov[6, 6] == pytest.approx(1.0, abs=0.01)
    assert abs(cov[0, 3]) < 0.01


def test_snr_calibration():
    cfg = SimConfig(q=4, model="effect-size", sigma=None, snr=3.0, alpha=2.0)
    sd = cfg.noise_sd()
    rng = np.random.default_rng(9)
    x = gen_mvn(4, 0.0, 1_000_000, rng)
    signal = simlab.raw_terms(x) @ true_beta("effect-size", 4, 2.0)
    assert signal.var() / sd ** 2 == pytest.approx(3.0, rel=0.02)


def test_run_table_deterministic():
    cfg = SimConfig(reps=2, seed=5, grid_points=21)
    a = run_table(cfg)
    b = run_table(cfg)
    assert a.to_json() == b.to_json()
    assert a.failures == 0
    for m in simlab.METHODS:
        assert 0.0 <= a.freq_correct[m] <= 1.0


def test_model_two_strong_never_correct():
    res = run_table(SimConfig(model="model-II", reps=5, seed=1, grid_points=21), ("strong",))
    assert res.freq_correct["strong"] == 0.0


def test_parallel_matches_serial():
    cfg = SimConfig(reps=3, seed=2, grid_points=11)
    a = run_table(cfg, workers=1)
    b = run_table(cfg, workers=2)
    assert a.mean_me == b.mean_me


def test_elect_mode_fractions():
    out = run_elect_mode(SimConfig(model="no-heredity", reps=3, seed=0, grid_points=21))
    assert sum(out["elected"].values()) == pytest.approx(1.0)


def test_consistency_zero_penalty_is_least_squares():
    out = run_consistency(n_list=(50,), lambda_exponent=0.0, reps=5, seed=0)
    row = out["rows"][0]
    assert row["lam"] == 0.0
    # with no penalty every term survives, so the true support is never matched exactly
    assert row["false_selection"] == 1.0


def test_consistency_rejects_non_heredity_model():
    with pytest.raises(SimError):
        run_consistency(model="model-II", heredity="strong", reps=1)
