"""Monte-Carlo harness for the simulation experiments.

Predictors are Gaussian with ``cov(X_i, X_j) = rho^|i-j|``. Responses follow
one of the quadratic generators below, expressed in the term order of
:func:`~structured_garrote.terms.quadratic_terms` on raw (uncentered)
products. Model error is ``d' Cov(t) d`` with ``t`` the raw term vector and
``d`` the coefficient difference in raw-product coordinates, so an intercept
shift never counts against a fit. ``Cov(t)`` and the signal variance used
for SNR calibration come from a seeded Monte-Carlo of the generator.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import stats

from .constraints import build, check_support
from .garrote import fit_initial, fit_lagrange, fit_path, default_grid
from .ingest import Dataset, center
from .terms import DependenceGraph, dependence_sets, expand_quadratic, quadratic_terms, raw_coefficients
from .tuning import cv_paths, make_folds, select

MODELS = ("model-I", "model-II", "effect-size", "no-heredity")
METHODS = ("none", "weak", "strong")
MC_DRAWS = 1_000_000
MC_SEED = 20240601


class SimError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    q: int = 3
    rho: float = 0.0
    model: str = "model-I"
    n: int = 50
    sigma: Optional[float] = 3.0
    snr: Optional[float] = None
    reps: int = 200
    seed: int = 0
    alpha: float = 4.0
    v: int = 10
    grid_points: int = 101
    init_kind: str = "least-squares"
    rule: str = "min"

    def __post_init__(self):
        if not abs(self.rho) < 1:
            raise SimError(f"|rho| must be < 1, got {self.rho}")
        if self.n < 2:
            raise SimError("n must be at least 2")
        if self.reps < 1:
            raise SimError("reps must be at least 1")
        if (self.sigma is None) == (self.snr is None):
            raise SimError("set exactly one of sigma and snr")
        if self.model not in MODELS:
            raise SimError(f"model must be one of {MODELS}, got {self.model!r}")
        need = 4 if self.model == "effect-size" else 2
        if self.q < need:
            raise SimError(f"{self.model} needs q >= {need}, got q={self.q}")

    def noise_sd(self) -> float:
        if self.sigma is not None:
            return float(self.sigma)
        beta = true_beta(self.model, self.q, self.alpha)
        var_signal = float(beta @ term_covariance(self.q, self.rho) @ beta)
        return float(np.sqrt(var_signal / self.snr))


@dataclass
class SimResult:
    config: dict
    methods: tuple
    mean_me: dict
    se_me: dict
    freq_correct: dict
    failures: int
    records: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table_rows(self) -> list:
        rows = [["method", "mean_me", "se_me", "freq_correct"]]
        for m in self.methods:
            rows.append([m, repr(self.mean_me[m]), repr(self.se_me[m]), repr(self.freq_correct[m])])
        return rows


def toeplitz_cov(q: int, rho: float) -> np.ndarray:
    idx = np.arange(q)
    return rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)


def gen_mvn(q: int, rho: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n x q`` Gaussian draws with ``cov(X_i, X_j) = rho^|i-j|``."""
    if not abs(rho) < 1:
        raise SimError(f"|rho| must be < 1, got {rho}")
    chol = np.linalg.cholesky(toeplitz_cov(q, rho))
    return rng.standard_normal((n, q)) @ chol.T


def _names(q):
    return [f"X{j + 1}" for j in range(q)]


def _term_index(q):
    terms = quadratic_terms(_names(q), [False] * q)
    return {t.label: k for k, t in enumerate(terms)}, terms


def true_beta(model: str, q: int, alpha: float = 4.0) -> np.ndarray:
    """True coefficients in quadratic term order (raw products, no intercept)."""
    idx, terms = _term_index(q)
    beta = np.zeros(len(terms))
    if model == "model-I":
        coefs = {"X1": 3, "X2": 2, "X1:X2": 1.5}
    elif model == "model-II":
        coefs = {"X1": 3, "X1^2": 2, "X1:X2": 1.5}
    elif model == "no-heredity":
        coefs = {"X1": 3, "X1^2": 2, "X2^2": 1.5}
    elif model == "effect-size":
        if q < 4:
            raise SimError("effect-size needs q >= 4")
        coefs = {"X1": 3, "X2": 2, "X3": 1.5, "X1:X2": alpha, "X1:X3": -alpha}
    else:
        raise SimError(f"model must be one of {MODELS}, got {model!r}")
    if q < 2:
        raise SimError(f"{model} needs q >= 2")
    for label, val in coefs.items():
        beta[idx[label]] = val
    return beta


def true_support(model: str, q: int, alpha: float = 4.0) -> tuple:
    return tuple(int(j) for j in np.flatnonzero(true_beta(model, q, alpha)))


def raw_terms(x: np.ndarray) -> np.ndarray:
    q = x.shape[1]
    _, terms = _term_index(q)
    cols = []
    for t in terms:
        if t.kind == "main":
            cols.append(x[:, len(cols)])
        elif t.kind == "square":
            cols.append(x[:, t.parents[0]] ** 2)
        else:
            cols.append(x[:, t.parents[0]] * x[:, t.parents[1]])
    return np.column_stack(cols)


@lru_cache(maxsize=32)
def _term_covariance(q: int, rho: float, draws: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    chunk = max(1, min(draws, 2_000_000 // max(q * q, 1)))
    total = 0
    s1 = None
    s2 = None
    while total < draws:
        k = min(chunk, draws - total)
        t = raw_terms(gen_mvn(q, rho, k, rng))
        s1 = t.sum(axis=0) if s1 is None else s1 + t.sum(axis=0)
        s2 = t.T @ t if s2 is None else s2 + t.T @ t
        total += k
    mean = s1 / total
    cov = (s2 - total * np.outer(mean, mean)) / (total - 1)
    return 0.5 * (cov + cov.T)


def term_covariance(q: int, rho: float, draws: int = MC_DRAWS, seed: int = MC_SEED) -> np.ndarray:
    """Monte-Carlo covariance of the raw quadratic term vector (cached)."""
    cov = _term_covariance(int(q), float(rho), int(draws), int(seed))
    cov.setflags(write=False)
    return cov


def gen_response(x: np.ndarray, model: str, rng: np.random.Generator, sigma: Optional[float] = None,
                 snr: Optional[float] = None, alpha: float = 4.0, rho: float = 0.0):
    """Return ``(y, beta_true)``; ``snr`` calibrates the noise on the generator."""
    q = x.shape[1]
    beta = true_beta(model, q, alpha)
    signal = raw_terms(x) @ beta
    if (sigma is None) == (snr is None):
        raise SimError("set exactly one of sigma and snr")
    if sigma is None:
        sigma = float(np.sqrt(beta @ term_covariance(q, rho) @ beta / snr))
    return signal + sigma * rng.standard_normal(x.shape[0]), beta


def model_error_raw(ts, beta_fit, beta_true, cov) -> float:
    b_raw, _ = raw_coefficients(ts, beta_fit)
    d = b_raw - beta_true
    return float(d @ cov @ d)


def _draw(cfg: SimConfig, rng):
    x = gen_mvn(cfg.q, cfg.rho, cfg.n, rng)
    y, beta = gen_response(x, cfg.model, rng, sigma=cfg.noise_sd(), alpha=cfg.alpha)
    return Dataset(x, y, tuple(_names(cfg.q))), beta


def _replicate(cfg: SimConfig, methods, seed_seq) -> dict:
    rng = np.random.default_rng(seed_seq)
    data, beta_true = _draw(cfg, rng)
    fold_seed = int(rng.integers(2**31))
    cov = term_covariance(cfg.q, cfg.rho)
    cd = center(data)
    ts = expand_quadratic(cd)
    grid = default_grid(ts.p, cfg.grid_points)
    reports = cv_paths(data, methods, cfg.init_kind, grid, make_folds(data.n, cfg.v, fold_seed))
    init = fit_initial(ts, cd.y_c, cfg.init_kind)
    graph = dependence_sets(ts)
    truth = set(true_support(cfg.model, cfg.q, cfg.alpha))
    rec = {"fold_seed": fold_seed, "me": {}, "m": {}, "correct": {}, "cv_min": {}}
    for mode in methods:
        path = fit_path(ts, cd.y_c, init, build(graph, mode), grid)
        m = select(reports[mode], cfg.rule)
        fit = path.fit_at(m)
        rec["m"][mode] = m
        rec["me"][mode] = model_error_raw(ts, fit.beta, beta_true, cov)
        rec["correct"][mode] = any(set(s) == truth for s in path.supports)
        rec["cv_min"][mode] = float(reports[mode].pe.min())
    return rec


def _run_chunk(args):
    cfg, methods, seqs = args
    out = []
    for i, ss in seqs:
        try:
            out.append((i, _replicate(cfg, methods, ss), None))
        except Exception as exc:  # noqa: BLE001 - failures are counted, not fatal
            out.append((i, None, f"{type(exc).__name__}: {exc}"))
    return out


def _run_replicates(cfg: SimConfig, methods, workers: int = 1):
    seqs = list(enumerate(np.random.SeedSequence(cfg.seed).spawn(cfg.reps)))
    if workers <= 1:
        results = _run_chunk((cfg, methods, seqs))
    else:
        chunks = [seqs[k::workers] for k in range(workers)]
        results = []
        with ProcessPoolExecutor(workers) as pool:
            for part in pool.map(_run_chunk, [(cfg, methods, c) for c in chunks]):
                results.extend(part)
        results.sort(key=lambda r: r[0])
    return results


def run_table(cfg: SimConfig, methods=METHODS, workers: int = 1) -> SimResult:
    """Replicate, CV-tune every method on shared folds, and tabulate ME and selection."""
    for m in methods:
        if m not in METHODS:
            raise SimError(f"unknown method {m!r}")
    results = _run_replicates(cfg, tuple(methods), workers)
    records, failures = [], 0
    for i, rec, err in results:
        if rec is None:
            failures += 1
            records.append({"rep": i, "error": err})
        else:
            records.append({"rep": i, **rec})
    ok = [r for r in records if "error" not in r]
    mean_me, se_me, freq = {}, {}, {}
    for m in methods:
        me = np.array([r["me"][m] for r in ok])
        mean_me[m] = float(me.mean()) if me.size else float("nan")
        se_me[m] = float(me.std(ddof=1) / np.sqrt(me.size)) if me.size > 1 else float("nan")
        freq[m] = float(np.mean([r["correct"][m] for r in ok])) if ok else float("nan")
    return SimResult(asdict(cfg), tuple(methods), mean_me, se_me, freq, failures, records)


def run_elect_mode(cfg: SimConfig, workers: int = 1) -> dict:
    """Fraction of replicates in which each mode has the smallest CV minimum."""
    res = run_table(cfg, METHODS, workers)
    ok = [r for r in res.records if "error" not in r]
    counts = {m: 0 for m in METHODS}
    for r in ok:
        # ties go to the more structured mode
        best = min(reversed(METHODS), key=lambda m: r["cv_min"][m])
        counts[best] += 1
    total = max(len(ok), 1)
    return {"config": res.config, "elected": {m: counts[m] / total for m in METHODS},
            "failures": res.failures, "reps": len(ok)}


@dataclass
class ConsistencyRow:
    n: int
    lam: float
    false_selection: float
    mean_scaled_error: float
    median_scaled_error: float
    reps: int
    failures: int


def _consistency_rep(cfg: SimConfig, mode: str, lam_exp: float, seed_seq):
    rng = np.random.default_rng(seed_seq)
    data, beta_true = _draw(cfg, rng)
    cd = center(data)
    ts = expand_quadratic(cd)
    init = fit_initial(ts, cd.y_c, cfg.init_kind)
    lam = cfg.n ** lam_exp if lam_exp > 0 else 0.0
    fit = fit_lagrange(ts, cd.y_c, init, build(dependence_sets(ts), mode), lam)
    truth = true_support(cfg.model, cfg.q, cfg.alpha)
    b_raw, _ = raw_coefficients(ts, fit.beta)
    idx = list(truth)
    err = float(np.sqrt(cfg.n) * np.linalg.norm(b_raw[idx] - beta_true[idx]))
    return tuple(fit.support) != truth, err


def run_consistency(model: str = "model-I", heredity: str = "strong", n_list=(50, 200, 800),
                    lambda_exponent: float = 1.0 / 3.0, reps: int = 200, seed: int = 0,
                    rho: float = 0.0, sigma: float = 3.0, q: int = 3) -> dict:
    """Lagrange-form fits with ``lambda_n = n^lambda_exponent`` over growing ``n``.

    Reports the false-selection rate (support differs from the truth) and
    ``sqrt(n) * ||b - beta||`` on the true support, plus an OLS fit of the
    log error on ``log n`` with a 95% slope interval.
    """
    if not 0 <= lambda_exponent < 0.5:
        raise SimError("lambda exponent must lie in [0, 0.5)")
    truth = true_support(model, q)
    terms = quadratic_terms(_names(q), [False] * q)
    g = DependenceGraph(tuple(frozenset(t.parents) for t in terms))
    if not check_support(truth, g, heredity):
        raise SimError(f"{model} does not obey {heredity} heredity")
    rows, log_n, log_err = [], [], []
    for k, n in enumerate(n_list):
        cfg = SimConfig(q=q, rho=rho, model=model, n=int(n), sigma=sigma, reps=reps, seed=seed)
        fs, errs, failures = [], [], 0
        for ss in np.random.SeedSequence([seed, k]).spawn(reps):
            try:
                f, e = _consistency_rep(cfg, heredity, lambda_exponent, ss)
            except Exception:  # noqa: BLE001
                failures += 1
                continue
            fs.append(f)
            errs.append(e)
        errs = np.array(errs)
        rows.append(ConsistencyRow(int(n), float(n ** lambda_exponent) if lambda_exponent > 0 else 0.0,
                                   float(np.mean(fs)), float(errs.mean()), float(np.median(errs)),
                                   len(errs), failures))
        log_n += [np.log(n)] * errs.size
        log_err += list(np.log(np.maximum(errs, 1e-300)))
    slope, ci = None, None
    if len(set(log_n)) > 1:
        fit = stats.linregress(log_n, log_err)
        half = stats.t.ppf(0.975, len(log_n) - 2) * fit.stderr
        slope, ci = float(fit.slope), [float(fit.slope - half), float(fit.slope + half)]
    return {"rows": [asdict(r) for r in rows], "slope": slope, "slope_ci": ci,
            "model": model, "heredity": heredity, "lambda_exponent": lambda_exponent,
            "reps": reps, "seed": seed}
