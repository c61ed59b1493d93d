"""Structured nonnegative garrote for linear regression.

The garrote rescales an initial estimate ``beta_init`` by shrinkage factors
``theta >= 0``. With ``Z = X diag(beta_init)`` the factors minimise
``0.5 * ||y - Z theta||^2`` subject to ``sum(theta) <= M`` and the heredity
rows ``H theta >= 0``. Only ``X'X`` and ``X'y`` enter the problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import qpsolver
from .constraints import ConstraintSet, check_support
from .terms import TermSet, dependence_sets

INIT_KINDS = ("least-squares", "ridge-gcv")
_ALIASES = {"ls": "least-squares", "ols": "least-squares", "ridge": "ridge-gcv"}


class FitError(RuntimeError):
    pass


class HeredityViolation(RuntimeError):
    pass


def normalize_init_kind(kind: str) -> str:
    kind = _ALIASES.get(kind, kind)
    if kind not in INIT_KINDS:
        raise ValueError(f"initial estimator must be one of {INIT_KINDS}, got {kind!r}")
    return kind


@dataclass(frozen=True)
class InitialEstimate:
    beta_init: np.ndarray
    kind: str
    sigma2_hat: Optional[float] = None
    ridge_lambda: Optional[float] = None
    intercept: float = 0.0
    information: Optional[np.ndarray] = None


@dataclass(frozen=True)
class GarroteFit:
    m: float
    theta: np.ndarray
    beta: np.ndarray
    support: tuple
    rss: float
    objective: float = float("nan")


@dataclass(frozen=True)
class SolutionPath:
    grid: np.ndarray
    fits: tuple
    mode: str
    init_kind: str
    labels: tuple = ()

    @property
    def thetas(self) -> np.ndarray:
        return np.array([f.theta for f in self.fits])

    @property
    def betas(self) -> np.ndarray:
        return np.array([f.beta for f in self.fits])

    @property
    def supports(self) -> list:
        return [f.support for f in self.fits]

    def fit_at(self, m: float) -> GarroteFit:
        k = int(np.argmin(np.abs(self.grid - m)))
        return self.fits[k]


def ls_sigma2(x: np.ndarray, y: np.ndarray) -> Optional[float]:
    """Full-model OLS noise variance RSS / (n - p), or None when n <= p."""
    n, p = x.shape
    if n <= p:
        return None
    beta, *_ = np.linalg.lstsq(x, y, rcond=None)
    r = y - x @ beta
    return float(r @ r / (n - p))


def _ridge_gcv(x, y, lambda_grid=None):
    n, p = x.shape
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    uty = u.T @ y
    resid_perp = float(y @ y - uty @ uty)
    if lambda_grid is None:
        base = float(np.trace(x.T @ x)) / p
        lambda_grid = np.logspace(-6, 6, 50) * base
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    if lambda_grid.size == 0:
        raise FitError("empty ridge penalty grid")
    s2 = s ** 2
    # a centered design carries an implicit intercept: its hat matrix adds 11'/n,
    # without which GCV falls to zero as lam -> 0 once p >= n - 1
    centered = np.abs(x.mean(axis=0)).max() <= 1e-10 * max(np.abs(x).max(), 1.0)
    best = (np.inf, None)
    for lam in lambda_grid:
        shrink = s2 / (s2 + lam)
        df = shrink.sum() + centered
        rss = float(np.sum(((1 - shrink) * uty) ** 2)) + max(resid_perp, 0.0)
        gcv = (rss / n) / (1.0 - df / n) ** 2
        if gcv < best[0]:
            best = (gcv, lam)
    lam = best[1]
    beta = vt.T @ (s / (s2 + lam) * uty)
    return beta, float(lam)


def fit_initial(ts: TermSet, y, kind: str = "least-squares", lambda_grid=None) -> InitialEstimate:
    """Least-squares or GCV-tuned ridge estimate on the (centered) design.

    Least squares needs ``n > p`` and ``cond(X'X) < 1e12``; ridge works for
    any ``p``. The penalty grid defaults to 50 log-spaced values in
    ``[1e-6, 1e6] * trace(X'X) / p``.
    """
    kind = normalize_init_kind(kind)
    x = ts.design
    y = np.asarray(y, dtype=float)
    n, p = x.shape
    well_posed = n > p and np.linalg.cond(x) ** 2 < 1e12
    if kind == "least-squares":
        if n <= p:
            raise FitError(f"least squares needs n > p (n={n}, p={p}); use ridge-gcv")
        if not well_posed:
            raise FitError("X'X is singular or ill-conditioned (condition >= 1e12)")
        beta, *_ = np.linalg.lstsq(x, y, rcond=None)
        r = y - x @ beta
        return InitialEstimate(beta, kind, float(r @ r / (n - p)))
    beta, lam = _ridge_gcv(x, y, lambda_grid)
    sigma2 = ls_sigma2(x, y) if well_posed else None
    return InitialEstimate(beta, kind, sigma2, lam)


def _check_init(beta_init) -> np.ndarray:
    b = np.asarray(beta_init, dtype=float)
    zero = np.flatnonzero(np.abs(b) < 1e-12)
    if zero.size:
        raise FitError(f"initial coefficient {zero[0]} is zero; its garrote column vanishes")
    return b


def garrote_rows(cs: ConstraintSet, p: int, offset: int = 0):
    """Rows ``[theta >= 0; H theta >= 0]``, optionally after ``offset`` free columns."""
    a = np.vstack([np.eye(p), cs.dense().reshape(cs.m, p)])
    if offset:
        a = np.hstack([np.zeros((a.shape[0], offset)), a])
    return a, np.zeros(a.shape[0])


def build_problem(ts: TermSet, y, init: InitialEstimate, cs: ConstraintSet) -> qpsolver.QpProblem:
    """QP without the budget row: ``Q = B X'X B``, ``c = -B X'y``."""
    b = _check_init(init.beta_init)
    x = ts.design
    if cs.p != x.shape[1]:
        raise ValueError("constraint set and design disagree on p")
    gram = x.T @ x
    xty = x.T @ np.asarray(y, dtype=float)
    a, rhs = garrote_rows(cs, ts.p)
    return qpsolver.QpProblem(gram * np.outer(b, b), -b * xty, a, rhs)


def default_grid(p: int, points: int = 101) -> np.ndarray:
    if points < 1:
        raise ValueError("grid needs at least one point")
    if points == 1:
        return np.zeros(1)
    return np.linspace(0.0, float(p), points)


def _make_fit(ts, y, init, theta, m, graph, mode, objective) -> GarroteFit:
    beta = theta * init.beta_init
    support = tuple(int(j) for j in np.flatnonzero(theta > 0))
    if not check_support(support, graph, mode):
        raise HeredityViolation(f"support {support} violates {mode} heredity at M={m}")
    r = np.asarray(y, dtype=float) - ts.design @ beta
    return GarroteFit(float(m), theta, beta, support, float(r @ r), objective)


def fit_path(ts: TermSet, y, init: InitialEstimate, cs: ConstraintSet, grid=None) -> SolutionPath:
    """Garrote fits for every budget in ``grid`` (default: 101 points on [0, p])."""
    grid = default_grid(ts.p) if grid is None else np.asarray(grid, dtype=float)
    problem = build_problem(ts, y, init, cs)
    sols = qpsolver.solve_path(problem, grid)
    graph = dependence_sets(ts)
    fits = tuple(_make_fit(ts, y, init, s.theta, m, graph, cs.mode, s.objective)
                 for m, s in zip(grid, sols))
    return SolutionPath(grid, fits, cs.mode, init.kind, tuple(ts.labels))


def fit_lagrange(ts: TermSet, y, init: InitialEstimate, cs: ConstraintSet, lam: float) -> GarroteFit:
    """Penalised form ``||y - Z theta||^2 + lam * sum(theta)`` under the same rows."""
    if lam < 0:
        raise ValueError("penalty must be nonnegative")
    base = build_problem(ts, y, init, cs)
    prob = qpsolver.QpProblem(base.q_mat, base.c + 0.5 * lam, base.a, base.b)
    sol = qpsolver.solve(prob)
    return _make_fit(ts, y, init, sol.theta, float(sol.theta.sum()), dependence_sets(ts),
                     cs.mode, sol.objective)


def model_error(beta_hat, beta_true, gram_expect) -> float:
    """``(beta - beta_hat)' E(X'X) (beta - beta_hat)`` with per-row second moments."""
    d = np.asarray(beta_true, dtype=float) - np.asarray(beta_hat, dtype=float)
    g = np.asarray(gram_expect, dtype=float)
    if g.shape != (d.size, d.size):
        raise ValueError("gram_expect has the wrong shape")
    return float(d @ g @ d)
