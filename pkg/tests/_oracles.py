"""Independent reference computations used by the test suite.

None of these call into the package solver: the QP oracles work on the
dual (projected gradient on mu >= 0) or by brute-force grid search, and the
least-squares reference is a plain normal-equations solve.
"""

import itertools

import numpy as np


def random_rows(rng, p, mode):
    """Heredity-style rows ``[I; H; -1]`` with random parent sets."""
    n_main = max(1, p // 2)
    rows = []
    for child in range(n_main, p):
        k = int(rng.integers(1, min(2, n_main) + 1))
        parents = rng.choice(n_main, size=k, replace=False)
        if mode == "strong":
            for j in parents:
                r = np.zeros(p)
                r[j], r[child] = 1.0, -1.0
                rows.append(r)
        elif mode == "weak":
            r = np.zeros(p)
            r[parents] = 1.0
            r[child] = -1.0
            rows.append(r)
    h = np.array(rows).reshape(-1, p)
    return h


def random_qp(rng, p, mode, psd_rank=None, ridge=0.05):
    g = rng.normal(size=(psd_rank or p + 2, p))
    q = g.T @ g / g.shape[0] + (ridge * np.eye(p) if psd_rank is None else 0.0)
    c = rng.normal(size=p) * 2.0
    h = random_rows(rng, p, mode)
    budget = float(rng.uniform(0.05, p))
    a = np.vstack([np.eye(p), h, -np.ones((1, p))])
    b = np.concatenate([np.zeros(p + h.shape[0]), [-budget]])
    return q, c, a, b


def objective(q, c, x):
    return 0.5 * x @ q @ x + c @ x


def dual_projected_gradient(q, c, a, b, target=None, tol=1e-7, max_iter=200_000):
    """Lower bound on the QP optimum from accelerated projected dual ascent.

    Maximises ``d(mu) = b'mu - 0.5 (A'mu - c)' Q^-1 (A'mu - c)`` over
    ``mu >= 0`` (Q must be positive definite). Returns the best dual value
    found; stops early once it is within ``tol`` of ``target``.
    """
    qi = np.linalg.inv(q)
    lip = np.linalg.eigvalsh(a @ qi @ a.T)[-1]
    mu = np.zeros(a.shape[0])
    y = mu.copy()
    t = 1.0
    best = -np.inf

    def dual(m):
        r = a.T @ m - c
        return b @ m - 0.5 * r @ qi @ r

    for k in range(max_iter):
        x = qi @ (a.T @ y - c)
        grad = b - a @ x
        mu_new = np.maximum(y + grad / lip, 0.0)
        t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
        y = mu_new + (t - 1) / t_new * (mu_new - mu)
        if dual(mu_new) < dual(mu):  # adaptive restart
            y, t_new = mu_new.copy(), 1.0
        mu, t = mu_new, t_new
        if k % 50 == 0:
            best = max(best, dual(mu))
            if target is not None and target - best <= tol:
                break
    return max(best, dual(mu))


def grid_search(q, c, a, b, budget, points=31, refine=6):
    """Brute-force minimum over a feasible lattice in ``[0, budget]^p``, refined locally."""
    p = q.shape[0]
    lo, hi = np.zeros(p), np.full(p, budget)
    best_x, best_f = None, np.inf
    for _ in range(refine + 1):
        axes = [np.linspace(lo[j], hi[j], points) for j in range(p)]
        pts = np.array(list(itertools.product(*axes)))
        feas = np.all(pts @ a.T - b >= -1e-12, axis=1)
        pts = pts[feas]
        if pts.size:
            f = 0.5 * np.einsum("ij,jk,ik->i", pts, q, pts) + pts @ c
            k = int(np.argmin(f))
            if f[k] < best_f:
                best_f, best_x = float(f[k]), pts[k]
        span = (hi - lo) / (points - 1) * 3
        lo = np.maximum(best_x - span, 0.0)
        hi = np.minimum(best_x + span, budget)
    return best_x, best_f


def ols(x, y):
    return np.linalg.solve(x.T @ x, x.T @ y)
