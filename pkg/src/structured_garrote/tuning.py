"""V-fold cross-validation over the budget grid and final-model selection.

Every training fold is re-centered, re-expanded and re-fitted from scratch
(initial estimator included); only the budget grid is shared. Held-out rows
are mapped into the fold's term space with the fold's own means.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .constraints import build
from .garrote import default_grid, fit_initial, fit_path, ls_sigma2, normalize_init_kind
from .glm import fit_glm_path, fit_mle, get_loss
from .ingest import Dataset, center
from .terms import dependence_sets, expand_quadratic, main_effects

RULES = ("min", "one-se")


class CvError(RuntimeError):
    pass


@dataclass(frozen=True)
class FoldPlan:
    v: int
    assignment: np.ndarray
    seed: int

    def test_rows(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == k)

    def train_rows(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.assignment != k)


def make_folds(n: int, v: int = 10, seed: int = 0) -> FoldPlan:
    """Random split into ``v`` folds whose sizes differ by at most one."""
    if not 2 <= v <= n:
        raise ValueError(f"fold count must satisfy 2 <= v <= n (v={v}, n={n})")
    perm = np.random.default_rng(seed).permutation(n)
    assignment = np.empty(n, dtype=int)
    assignment[perm] = np.arange(n) % v
    return FoldPlan(v, assignment, seed)


@dataclass
class CvReport:
    grid: np.ndarray
    pe: np.ndarray
    se: np.ndarray
    fold_pe: np.ndarray
    m_min: float
    m_1se: float
    sigma2_hat: Optional[float]
    me_est: Optional[np.ndarray]
    mode: str = "none"
    family: str = "gaussian"
    n: int = 0
    v: int = 10
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, val in d.items():
            if isinstance(val, np.ndarray):
                d[k] = val.tolist()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "CvReport":
        d = dict(d)
        for k in ("grid", "pe", "se", "fold_pe", "me_est"):
            if d.get(k) is not None:
                d[k] = np.asarray(d[k], dtype=float)
        return cls(**d)

    def csv_rows(self) -> list:
        rows = [["M", "pe", "se"] + (["me_est"] if self.me_est is not None else [])]
        for i, m in enumerate(self.grid):
            row = [repr(float(m)), repr(float(self.pe[i])), repr(float(self.se[i]))]
            if self.me_est is not None:
                row.append(repr(float(self.me_est[i])))
            rows.append(row)
        return rows


def select(report: CvReport, rule: str = "min") -> float:
    if rule not in RULES:
        raise ValueError(f"rule must be one of {RULES}, got {rule!r}")
    return report.m_min if rule == "min" else report.m_1se


def _summarise(grid, fold_pe):
    v = fold_pe.shape[0]
    pe = fold_pe.sum(axis=0)
    se = fold_pe.std(axis=0, ddof=1) / np.sqrt(v) if v > 1 else np.zeros_like(pe)
    k = int(np.argmin(pe))
    within = np.flatnonzero(pe <= pe[k] + se[k])
    return pe, se, float(grid[k]), float(grid[within[0]])


def _expand(cd, flags, expansion):
    if expansion == "quadratic":
        return expand_quadratic(cd, binary_flags=flags)
    if expansion == "linear":
        return main_effects(cd)
    raise ValueError(f"unknown expansion {expansion!r}")


def fit_dataset(data: Dataset, mode: str = "strong", init_kind: str = "least-squares",
                grid=None, family: str = "gaussian", expansion: str = "quadratic",
                binary_flags=None):
    """Full-data fit: returns ``(term_set, centered, init, fits)``.

    ``fits`` is a :class:`SolutionPath` for the gaussian family and a list of
    :class:`~structured_garrote.glm.GlmFit` otherwise.
    """
    gaussian = family == "gaussian"
    cd = center(data, center_response=gaussian)
    ts = _expand(cd, data.binary_flags if binary_flags is None else binary_flags, expansion)
    grid = default_grid(ts.p) if grid is None else np.asarray(grid, dtype=float)
    cs = build(dependence_sets(ts), mode)
    if gaussian:
        init = fit_initial(ts, cd.y_c, init_kind)
        return ts, cd, init, fit_path(ts, cd.y_c, init, cs, grid)
    loss = get_loss(family)
    init = fit_mle(ts, cd.y_c, loss)
    return ts, cd, init, fit_glm_path(ts, cd.y_c, loss, init, cs, grid)


def _fold_scores(data, rows_train, rows_test, modes, init_kind, grid, family, expansion):
    gaussian = family == "gaussian"
    train = data.subset(rows_train)
    cd = center(train, center_response=gaussian)
    ts = _expand(cd, data.binary_flags, expansion)
    x_test = ts.transform(data.x[rows_test])
    y_test = data.y[rows_test]
    graph = dependence_sets(ts)
    out = {}
    if gaussian:
        init = fit_initial(ts, cd.y_c, init_kind)
        for mode in modes:
            path = fit_path(ts, cd.y_c, init, build(graph, mode), grid)
            pred = x_test @ path.betas.T + cd.y_mean
            out[mode] = ((y_test[:, None] - pred) ** 2).sum(axis=0)
    else:
        loss = get_loss(family)
        init = fit_mle(ts, cd.y_c, loss)
        for mode in modes:
            fits = fit_glm_path(ts, cd.y_c, loss, init, build(graph, mode), grid)
            out[mode] = np.array([loss.total(y_test, x_test @ f.beta + f.beta0) for f in fits])
    return out


def cv_paths(data: Dataset, modes=("none", "weak", "strong"), init_kind: str = "least-squares",
             grid=None, folds: Optional[FoldPlan] = None, family: str = "gaussian",
             expansion: str = "quadratic") -> dict:
    """Cross-validate several heredity modes on shared folds.

    Fold-level work (centering, expansion, initial estimate) is done once
    and reused across modes.
    """
    init_kind = normalize_init_kind(init_kind)
    folds = make_folds(data.n, 10) if folds is None else folds
    if folds.assignment.shape[0] != data.n:
        raise ValueError("fold plan does not match the data")
    if grid is None:
        p = _expand(center(data, family == "gaussian"), data.binary_flags, expansion).p
        grid = default_grid(p)
    grid = np.asarray(grid, dtype=float)
    scores = {mode: np.zeros((folds.v, grid.size)) for mode in modes}
    for k in range(folds.v):
        try:
            res = _fold_scores(data, folds.train_rows(k), folds.test_rows(k), modes,
                               init_kind, grid, family, expansion)
        except Exception as exc:  # noqa: BLE001 - re-raised with fold context
            raise CvError(f"fold {k}: {exc}") from exc
        for mode in modes:
            scores[mode][k] = res[mode]

    sigma2 = None
    if family == "gaussian":
        cd = center(data)
        ts = _expand(cd, data.binary_flags, expansion)
        if data.n > ts.p and np.linalg.cond(ts.design) ** 2 < 1e12:
            sigma2 = ls_sigma2(ts.design, cd.y_c)
    reports = {}
    for mode in modes:
        pe, se, m_min, m_1se = _summarise(grid, scores[mode])
        me = pe / data.n - sigma2 if sigma2 is not None else None
        reports[mode] = CvReport(grid, pe, se, scores[mode], m_min, m_1se, sigma2, me,
                                 mode, family, data.n, folds.v, folds.seed)
    return reports


def cv_path(data: Dataset, mode: str = "strong", init_kind: str = "least-squares", grid=None,
            folds: Optional[FoldPlan] = None, family: str = "gaussian",
            expansion: str = "quadratic") -> CvReport:
    """Cross-validation curve for one heredity mode.

    The score is the summed held-out squared error (gaussian) or the summed
    held-out loss ``sum l(y_i, x_i beta + beta0)`` for other families.
    """
    return cv_paths(data, (mode,), init_kind, grid, folds, family, expansion)[mode]
