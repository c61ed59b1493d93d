"""Primal active-set solver for small dense convex quadratic programs.

Solves

    minimize    0.5 * x' Q x + c' x
    subject to  A x >= b

with Q symmetric positive semidefinite. Every garrote fit (linear, logistic
inner step, Lagrange form) is funnelled through :func:`solve`; paths over a
budget grid go through :func:`solve_path`, which warm-starts each point from
the previous one.

Equality-constrained subproblems are solved through the symmetric indefinite
KKT system (LAPACK ``?sytrf``, Bunch-Kaufman LDL'). Constraint selection uses
the smallest-index rule on both entering and leaving rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import lapack

# Entries with |x_j| below this are reported as exact zeros.
ZERO_TOL = 1e-10
FEAS_TOL = 1e-9


class QpError(RuntimeError):
    """Base class for solver failures."""


class InfeasibleStartError(QpError):
    pass


class MaxIterationsError(QpError):
    pass


class IndefiniteHessianError(QpError):
    pass


@dataclass(frozen=True)
class QpProblem:
    """Dense QP ``min 0.5 x'Qx + c'x  s.t.  A x >= b``.

    Parameters
    ----------
    q_mat : (p, p) ndarray
        Symmetric PSD Hessian.
    c : (p,) ndarray
        Linear term.
    a : (m, p) ndarray
        Inequality rows.
    b : (m,) ndarray
        Right-hand sides.
    """

    q_mat: np.ndarray
    c: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q_mat, dtype=float)
        c = np.asarray(self.c, dtype=float).ravel()
        p = c.shape[0]
        a = np.asarray(self.a, dtype=float).reshape(-1, p)
        b = np.asarray(self.b, dtype=float).ravel()
        if q.shape != (p, p):
            raise ValueError(f"q_mat has shape {q.shape}, expected {(p, p)}")
        if a.shape[0] != b.shape[0]:
            raise ValueError("a and b disagree on the number of rows")
        asym = np.max(np.abs(q - q.T)) if p else 0.0
        if asym > 1e-10 * max(1.0, np.max(np.abs(q)) if p else 1.0):
            raise ValueError(f"q_mat is not symmetric (max asymmetry {asym:.3g})")
        object.__setattr__(self, "q_mat", 0.5 * (q + q.T))
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def p(self) -> int:
        return self.c.shape[0]

    @property
    def m(self) -> int:
        return self.b.shape[0]

    @classmethod
    def _trusted(cls, q, c, a, b) -> "QpProblem":
        # skips validation; callers pass arrays taken from a validated problem
        obj = object.__new__(cls)
        for name, val in (("q_mat", q), ("c", c), ("a", a), ("b", b)):
            object.__setattr__(obj, name, val)
        return obj

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.q_mat @ x + self.c @ x)

    def with_rows(self, a_extra, b_extra) -> "QpProblem":
        a_extra = np.atleast_2d(np.asarray(a_extra, dtype=float))
        b_extra = np.atleast_1d(np.asarray(b_extra, dtype=float))
        return QpProblem(self.q_mat, self.c, np.vstack([self.a, a_extra]),
                         np.concatenate([self.b, b_extra]))

    def with_budget(self, budget: float, mask=None) -> "QpProblem":
        """Append the row ``-sum_{j in mask} x_j >= -budget``."""
        row = -np.ones(self.p) if mask is None else -np.asarray(mask, dtype=float)
        return self.with_rows(row, -float(budget))


@dataclass(frozen=True)
class QpSolution:
    theta: np.ndarray
    active: tuple
    multipliers: np.ndarray
    iterations: int
    kkt_residual: float
    objective: float
    residuals: dict = field(default_factory=dict)


def kkt_residuals(problem: QpProblem, x, active: Sequence[int], mu) -> dict:
    """Post-hoc KKT certificate (all entries are max-norms)."""
    x = np.asarray(x, dtype=float)
    active = list(active)
    mu = np.asarray(mu, dtype=float)
    slack = problem.a @ x - problem.b
    grad = problem.q_mat @ x + problem.c
    if active:
        grad = grad - problem.a[active].T @ mu
    return {
        "primal": float(max(0.0, -slack.min())) if problem.m else 0.0,
        "dual": float(max(0.0, -mu.min())) if active else 0.0,
        "stationarity": float(np.max(np.abs(grad))) if problem.p else 0.0,
        "complementarity": float(np.max(np.abs(mu * slack[active]))) if active else 0.0,
    }


def _check_psd(q: np.ndarray) -> float:
    """Raise on negative curvature; return the KKT primal shift (0 when Q is PD)."""
    if q.shape[0] == 0:
        return 0.0
    ev = np.linalg.eigvalsh(q)
    if ev[0] < -1e-8 * max(1.0, np.max(np.abs(q))):
        raise IndefiniteHessianError(f"q_mat has negative curvature {ev[0]:.3g}")
    if ev[0] > 1e-9 * max(ev[-1], 1e-300):
        return 0.0
    return 1e-10 * max(1.0, np.trace(q) / q.shape[0])


def _independent_subset(a: np.ndarray, rows: Sequence[int]) -> list:
    rows = sorted(rows)
    if not rows or np.linalg.matrix_rank(a[rows]) == len(rows):
        return rows
    keep: list = []
    for r in rows:
        trial = keep + [r]
        if np.linalg.matrix_rank(a[trial]) == len(trial):
            keep = trial
    return keep


def _kkt_solve(q, reg, a_w, g):
    p = q.shape[0]
    k = a_w.shape[0]
    kmat = np.zeros((p + k, p + k))
    kmat[:p, :p] = q
    if k:
        kmat[:p, p:] = a_w.T
        kmat[p:, :p] = a_w
    rhs = np.zeros(p + k)
    rhs[:p] = -g
    info = 1
    if reg == 0.0:
        _, _, sol, info = lapack.dsysv(kmat, rhs)
    if info != 0:
        # Q only semidefinite: factor with a small primal shift and refine
        # against the exact matrix.
        reg = reg or 1e-10 * max(1.0, np.trace(q) / p)
        kreg = kmat.copy()
        kreg[np.arange(p), np.arange(p)] += reg
        lu, piv, info = lapack.dsytrf(kreg)
        if info != 0:
            sol = np.linalg.lstsq(kmat, rhs, rcond=None)[0]
        else:
            sol, _ = lapack.dsytrs(lu, piv, rhs)
            for _ in range(2):
                corr, _ = lapack.dsytrs(lu, piv, rhs - kmat @ sol)
                sol = sol + corr
    return sol[:p], -sol[p:]


def _in_span(a_w, rows, tol=1e-9):
    """Mask of ``rows`` lying in the row space of ``a_w``.

    Such rows have ``a'p = 0`` exactly on any step that keeps ``a_w`` tight,
    so a slightly negative computed product is roundoff, not a block.
    """
    u, s, _ = np.linalg.svd(a_w.T, full_matrices=False)
    basis = u[:, s > 1e-12 * max(s[0], 1e-300)] if s.size else u[:, :0]
    resid = rows - (rows @ basis) @ basis.T
    return np.linalg.norm(resid, axis=1) <= tol * np.maximum(np.linalg.norm(rows, axis=1), 1e-300)


def _active_set(q, c, a, b, x, working, max_iter, reg):
    """Core loop. ``x`` must be feasible and ``a[working]`` independent."""
    m = b.shape[0]
    in_w = np.zeros(m, dtype=bool)
    in_w[working] = True
    row_scale = np.abs(a).max(axis=1) if m else np.zeros(0)
    lam = np.zeros(0)
    for it in range(1, max_iter + 1):
        g = q @ x + c
        step, lam = _kkt_solve(q, reg, a[working], g)
        if len(working) >= q.shape[0]:
            step[:] = 0.0  # a vertex: the exact step is zero, the computed one roundoff
        smax = np.abs(step).max()
        if smax > 1e-12 * (1.0 + np.abs(x).max()):
            ap = a @ step
            # rows nearly parallel to the face (|a'p| ~ roundoff) are not
            # blocking; admitting them would make the working set dependent
            cand = np.flatnonzero((ap < -1e-11 * smax * row_scale) & ~in_w)
            if smax < 1e-8 * (1.0 + np.abs(x).max()):
                near = cand
            else:
                near = cand[ap[cand] > -1e-8 * smax * row_scale[cand]]
            if near.size and working:
                cand = np.setdiff1d(cand, near[_in_span(a[working], a[near])])
            block = -1
            if cand.size:
                ratios = np.maximum(a[cand] @ x - b[cand], 0.0) / -ap[cand]
                rmin = ratios.min()
                if rmin < 1.0:
                    block = int(cand[ratios <= rmin + 1e-15 * max(1.0, rmin)][0])
                    x = x + max(rmin, 0.0) * step
                    working.append(block)
                    in_w[block] = True
                    continue
        x = x + step
        # x minimizes over the current face; lam are its multipliers.
        if working:
            dual_tol = 1e-11 * max(1.0, np.abs(g).max())
            neg = [w for w, l in zip(working, lam) if l < -dual_tol]
            if neg:
                leave = min(neg)
                working.remove(leave)
                in_w[leave] = False
                continue
        return x, working, lam, it
    raise MaxIterationsError(
        f"active-set method did not converge in {max_iter} iterations "
        f"(p={q.shape[0]}, m={m}, working set={sorted(working)})")


def _warm_point(a, b, warm, p, feas_tol, trusted=False):
    if warm is None or np.shape(warm.theta) != (p,):
        return None, []
    xw = np.asarray(warm.theta, dtype=float)
    if b.shape[0] == 0:
        return xw.copy(), []
    slack = a @ xw - b
    if slack.min() < -feas_tol:
        return None, []
    tight = [r for r in warm.active if r < b.shape[0] and abs(slack[r]) <= feas_tol]
    return xw.copy(), (sorted(tight) if trusted else _independent_subset(a, tight))


def _solve(problem, warm, max_iter, reg, trusted=False):
    q, c, a, b = problem.q_mat, problem.c, problem.a, problem.b
    p, m = problem.p, problem.m
    if max_iter is None:
        max_iter = 50 * (p + m)
    feas_tol = FEAS_TOL * max(1.0, np.abs(b).max()) if m else FEAS_TOL
    x, working = _warm_point(a, b, warm, p, feas_tol, trusted)
    if x is None:
        x = np.zeros(p)
        if m and b.max() > feas_tol:
            raise InfeasibleStartError(
                f"origin violates rows {np.flatnonzero(b > feas_tol).tolist()}")
    x, working, lam, it = _active_set(q, c, a, b, x, working, max_iter, reg)
    x[np.abs(x) <= ZERO_TOL] = 0.0
    order = np.argsort(working)
    active = tuple(int(working[i]) for i in order)
    mu = np.maximum(lam[order], 0.0) if working else np.zeros(0)
    res = kkt_residuals(problem, x, active, mu)
    scale = max(1.0, np.abs(q).max() * max(1.0, np.abs(x).max()), np.abs(c).max())
    if max(res.values()) > 1e-6 * scale:
        raise QpError(f"KKT certificate failed: {res}")
    return QpSolution(theta=x, active=active, multipliers=mu, iterations=it,
                      kkt_residual=max(res.values()), objective=problem.objective(x),
                      residuals=res)


def solve(problem: QpProblem, warm: Optional[QpSolution] = None, *,
          max_iter: Optional[int] = None, check_psd: bool = True) -> QpSolution:
    """Solve a convex QP by the primal active-set method.

    The start point is ``warm.theta`` when it is feasible for ``problem``
    (its tight active rows seed the working set), otherwise the origin.

    Raises
    ------
    InfeasibleStartError
        Neither the warm point nor the origin is feasible.
    MaxIterationsError
        No convergence within ``max_iter`` (default ``50 * (p + m)``).
    IndefiniteHessianError
        ``q_mat`` has an eigenvalue below ``-1e-8`` (relative).
    """
    if check_psd:
        reg = _check_psd(problem.q_mat)
    else:
        reg = 1e-10 * max(1.0, np.trace(problem.q_mat) / max(problem.p, 1))
    return _solve(problem, warm, max_iter, reg)


def solve_path(base: QpProblem, m_grid, *, mask=None, max_iter=None) -> list:
    """Solve ``base`` plus a budget row for every value in ``m_grid``.

    Each solve is warm-started from the previous solution rescaled onto the
    new budget, which keeps all homogeneous rows tight and usually leaves the
    optimal face unchanged.
    """
    grid = np.asarray(m_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("m_grid must be a non-empty 1-d sequence")
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("m_grid must be strictly increasing and nonnegative")
    reg = _check_psd(base.q_mat)
    maskv = np.ones(base.p) if mask is None else np.asarray(mask, dtype=float)
    full = base.with_budget(0.0, maskv)
    budget_row = base.m
    out: list = []
    prev = None
    prev_budget = None
    for budget in grid:
        b = full.b.copy()
        b[budget_row] = -budget
        prob = QpProblem._trusted(full.q_mat, full.c, full.a, b)
        warm = prev
        if prev is not None:
            used = float(maskv @ prev.theta)
            if prev_budget > 0 and budget_row in prev.active and used > 0:
                scaled = np.where(maskv != 0, prev.theta * (budget / used), prev.theta)
                warm = QpSolution(scaled, prev.active, prev.multipliers, 0, 0.0, 0.0)
        # active sets produced by the solver are independent already
        sol = _solve(prob, warm, max_iter, reg, trusted=True)
        out.append(sol)
        prev, prev_budget = sol, budget
    return out
