"""Structured garrote for generalized regression.

Losses are per-observation negative log-likelihoods ``l(y, eta)`` with
derivatives taken in ``eta``. A loss plugged in here is expected to be
strictly convex in ``eta`` (``d2 > 0``); the maximum-likelihood fit it
produces is used as the initial estimate, and its scaled information matrix
is returned for inspection.

The shrinkage stage minimises ``sum_i l(y_i, b0 + theta0 + z_i theta)`` with
``z_ij = x_ij * beta_mle_j`` and ``b0`` the MLE intercept, so ``theta0`` is a
free intercept correction (zero at ``theta = 1``). Each outer iteration
solves the second-order expansion of the loss as a QP in
``(theta0, theta)``; ``theta0`` is excluded from the nonnegativity, heredity
and budget rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit

from . import qpsolver
from .constraints import ConstraintSet, check_support
from .garrote import FitError, HeredityViolation, InitialEstimate, _check_init, default_grid, garrote_rows
from .terms import TermSet, dependence_sets


@dataclass(frozen=True)
class LossSpec:
    name: str
    value: Callable
    d1: Callable
    d2: Callable

    def total(self, y, eta) -> float:
        return float(np.sum(self.value(y, eta)))


def gaussian_loss() -> LossSpec:
    return LossSpec(
        "gaussian",
        lambda y, eta: 0.5 * (np.asarray(y) - eta) ** 2,
        lambda y, eta: eta - np.asarray(y),
        lambda y, eta: np.ones_like(np.asarray(eta, dtype=float)),
    )


def _logistic_d2(y, eta):
    s = expit(eta)
    return s * (1.0 - s)


def logistic_loss() -> LossSpec:
    """``l(y, eta) = log(1 + e^eta) - y * eta`` for ``y in {0, 1}``."""
    return LossSpec(
        "logistic",
        lambda y, eta: np.logaddexp(0.0, eta) - np.asarray(y) * eta,
        lambda y, eta: expit(eta) - np.asarray(y),
        _logistic_d2,
    )


def get_loss(name: str) -> LossSpec:
    losses = {"gaussian": gaussian_loss, "logistic": logistic_loss}
    if name not in losses:
        raise ValueError(f"family must be one of {sorted(losses)}, got {name!r}")
    return losses[name]()


def _newton_1d_offset(y, offset, loss: LossSpec, tol=1e-12, max_iter=100) -> float:
    """Minimise ``sum l(y, offset + t)`` over scalar ``t``."""
    t = 0.0
    cur = loss.total(y, offset + t)
    for _ in range(max_iter):
        g = float(np.sum(loss.d1(y, offset + t)))
        h = float(np.sum(loss.d2(y, offset + t)))
        if h <= 0:
            raise FitError("intercept-only fit has zero curvature")
        step = -g / h
        for _ in range(30):
            new = loss.total(y, offset + t + step)
            if new <= cur:
                break
            step *= 0.5
        t += step
        if abs(cur - new) <= tol * (1.0 + abs(cur)) and abs(step) <= 1e-12 * (1 + abs(t)):
            break
        cur = new
    return t


def intercept_only(y, loss: LossSpec) -> float:
    return _newton_1d_offset(np.asarray(y, dtype=float), np.zeros(len(y)), loss)


def fit_mle(ts: TermSet, y, loss: LossSpec, max_iter: int = 100, tol: float = 1e-8) -> InitialEstimate:
    """Damped Newton-Raphson for ``(beta0, beta)``.

    Stops when the gradient max-norm is below ``tol`` (or cannot be reduced
    further in floating point). The returned ``information`` is the scaled
    observed information ``X~' W X~ / n`` at the optimum.
    """
    x = ts.design
    y = np.asarray(y, dtype=float)
    n, p = x.shape
    if n <= p + 1:
        raise FitError(f"maximum likelihood needs n > p + 1 (n={n}, p={p})")
    xt = np.hstack([np.ones((n, 1)), x])
    coef = np.zeros(p + 1)
    coef[0] = intercept_only(y, loss)
    cur = loss.total(y, xt @ coef)
    for it in range(max_iter):
        eta = xt @ coef
        grad = xt.T @ loss.d1(y, eta)
        if np.abs(grad).max() <= tol:
            break
        info = xt.T @ (loss.d2(y, eta)[:, None] * xt)
        if np.linalg.cond(info) > 1e14:
            raise FitError("information matrix is singular (separation or collinearity)")
        step = np.linalg.solve(info, -grad)
        t = 1.0
        for _ in range(30):
            new = loss.total(y, xt @ (coef + t * step))
            if new <= cur:
                break
            t *= 0.5
        else:
            break  # no decrease possible: at the floating-point floor
        coef = coef + t * step
        if np.abs(coef).max() > 1e6:
            raise FitError("Newton iterates diverge (|beta| > 1e6); data may be separable")
        if cur - new <= 1e-15 * (1.0 + abs(cur)) and np.abs(t * step).max() <= 1e-12 * (1 + np.abs(coef).max()):
            cur = new
            break
        cur = new
    else:
        raise FitError(f"maximum likelihood did not converge in {max_iter} iterations")
    eta = xt @ coef
    if loss.name == "logistic" and np.all(np.abs(expit(eta) - y) < 1e-6):
        raise FitError("classes are completely separated; the MLE does not exist")
    info = xt.T @ (loss.d2(y, eta)[:, None] * xt) / n
    return InitialEstimate(coef[1:], f"mle-{loss.name}", None, None, float(coef[0]), info)


@dataclass(frozen=True)
class GlmFit:
    m: float
    theta0: float
    theta: np.ndarray
    beta: np.ndarray
    beta0: float
    deviance: float  # total loss sum_i l(y_i, eta_i)
    iterations: int
    support: tuple = ()
    loss_history: tuple = field(default=(), repr=False)


def _glm_point(zt, y, offset, loss, prob_rows, budget, phi, qsol, tol, max_outer, max_halvings):
    a, b = prob_rows
    cur = loss.total(y, offset + zt @ phi)
    history = [cur]
    it = 0
    for it in range(1, max_outer + 1):
        eta = offset + zt @ phi
        w = loss.d2(y, eta)
        g = loss.d1(y, eta)
        q = zt.T @ (w[:, None] * zt)
        c = zt.T @ g - q @ phi
        prob = qpsolver.QpProblem(q, c, a, b)
        warm = qpsolver.QpSolution(phi, qsol.active if qsol else (), np.zeros(0), 0, 0.0, 0.0)
        qsol = qpsolver.solve(prob, warm)
        target = qsol.theta
        t = 1.0
        for _ in range(max_halvings + 1):
            cand = phi + t * (target - phi)
            new = loss.total(y, offset + zt @ cand)
            if new <= cur:
                break
            t *= 0.5
        else:
            history.append(cur)
            break
        if t == 1.0:
            cand = target
        else:
            cand = np.where(np.abs(cand) <= qpsolver.ZERO_TOL, 0.0, cand)
        phi = cand
        change = cur - new
        cur = new
        history.append(cur)
        if abs(change) < tol * (1.0 + abs(cur)):
            break
    else:
        raise FitError(f"outer iteration did not converge at M={budget} in {max_outer} steps")
    return phi, qsol, cur, it, history


def fit_glm_path(ts: TermSet, y, loss: LossSpec, init: InitialEstimate, cs: ConstraintSet,
                 grid=None, *, tol: float = 1e-8, max_outer: int = 100,
                 max_halvings: int = 20) -> list:
    """Constrained garrote path for a general loss (one :class:`GlmFit` per M)."""
    b_init = _check_init(init.beta_init)
    y = np.asarray(y, dtype=float)
    grid = default_grid(ts.p) if grid is None else np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing and nonnegative")
    z = ts.design * b_init
    n, p = z.shape
    zt = np.hstack([np.ones((n, 1)), z])
    offset = np.full(n, init.intercept)
    a, b = garrote_rows(cs, p, offset=1)
    mask = np.r_[0.0, np.ones(p)]
    a = np.vstack([a, -mask])
    b = np.append(b, 0.0)
    graph = dependence_sets(ts)

    phi = np.zeros(p + 1)
    phi[0] = _newton_1d_offset(y, offset, loss)
    qsol = None
    fits = []
    for budget in grid:
        bm = b.copy()
        bm[-1] = -budget
        phi, qsol, dev, iters, hist = _glm_point(zt, y, offset, loss, (a, bm), budget, phi,
                                                 qsol, tol, max_outer, max_halvings)
        theta = phi[1:].copy()
        support = tuple(int(j) for j in np.flatnonzero(theta > 0))
        if not check_support(support, graph, cs.mode):
            raise HeredityViolation(f"support {support} violates {cs.mode} heredity at M={budget}")
        fits.append(GlmFit(float(budget), float(phi[0]), theta, theta * b_init,
                           float(init.intercept + phi[0]), dev, iters, support, tuple(hist)))
    return fits
