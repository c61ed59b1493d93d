"""Quadratic term expansion and parent (dependence) sets.

Term order is fixed: main effects in input order, then squares of the
non-binary mains in input order, then all pairwise interactions ordered
lexicographically by parent pair. Derived columns are products of centered
main effects, re-centered so the no-intercept model stays valid.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .ingest import CenteredDataset, DataError


@dataclass(frozen=True)
class Term:
    kind: str  # "main" | "square" | "interaction"
    parents: tuple
    label: str

    def __post_init__(self):
        expected = {"main": 0, "square": 1, "interaction": 2}
        if self.kind not in expected or len(self.parents) != expected[self.kind]:
            raise ValueError(f"bad term {self.kind} with parents {self.parents}")
        if self.kind == "interaction" and self.parents[0] == self.parents[1]:
            raise ValueError("interaction parents must be distinct")


@dataclass(frozen=True)
class DependenceGraph:
    """Parent sets D_i indexed by term position (empty for main effects)."""

    parents: tuple
    labels: tuple = ()

    @property
    def p(self) -> int:
        return len(self.parents)

    def __getitem__(self, i) -> frozenset:
        return self.parents[i]

    def children(self):
        return [i for i, d in enumerate(self.parents) if d]


@dataclass(frozen=True)
class TermSet:
    terms: tuple
    design: np.ndarray
    q: int
    x_means: np.ndarray
    term_means: np.ndarray

    @property
    def p(self) -> int:
        return len(self.terms)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def labels(self) -> list:
        return [t.label for t in self.terms]

    def transform(self, x_raw) -> np.ndarray:
        """Map raw predictor rows into this term space (training centering)."""
        x_c = np.atleast_2d(np.asarray(x_raw, dtype=float)) - self.x_means
        return _raw_columns(x_c, self.terms) - self.term_means


def _raw_columns(x_c: np.ndarray, terms) -> np.ndarray:
    cols = np.empty((x_c.shape[0], len(terms)))
    for k, t in enumerate(terms):
        if t.kind == "main":
            cols[:, k] = x_c[:, k]
        elif t.kind == "square":
            cols[:, k] = x_c[:, t.parents[0]] ** 2
        else:
            cols[:, k] = x_c[:, t.parents[0]] * x_c[:, t.parents[1]]
    return cols


def quadratic_terms(names, binary_flags) -> tuple:
    """Term list for a full quadratic model; squares of binary mains dropped."""
    q = len(names)
    terms = [Term("main", (), str(names[j])) for j in range(q)]
    terms += [Term("square", (j,), f"{names[j]}^2") for j in range(q) if not binary_flags[j]]
    terms += [Term("interaction", (i, j), f"{names[i]}:{names[j]}")
              for i, j in combinations(range(q), 2)]
    return tuple(terms)


def expand_quadratic(d: CenteredDataset, binary_flags=None) -> TermSet:
    """Full quadratic expansion of ``d``.

    ``binary_flags`` overrides the flags detected on ``d``; cross-validation
    passes the full-data flags so every fold has the same term list.
    """
    if d.q < 1:
        raise DataError("need at least one main effect")
    flags = d.binary_flags if binary_flags is None else tuple(binary_flags)
    terms = quadratic_terms(d.names, flags)
    raw = _raw_columns(d.x_c, terms)
    means = raw.mean(axis=0)
    means[: d.q] = 0.0
    design = raw - means
    scale = np.maximum(np.abs(raw).max(axis=0), 1.0)
    const = np.flatnonzero(np.abs(design).max(axis=0) <= 1e-12 * scale)
    if const.size:
        raise DataError(f"derived column {terms[const[0]].label!r} is constant")
    return TermSet(terms, design, d.q, d.x_means.copy(), means)


def main_effects(d: CenteredDataset) -> TermSet:
    """Linear-only term set (no derived columns)."""
    terms = tuple(Term("main", (), str(nm)) for nm in d.names)
    return TermSet(terms, d.x_c.copy(), d.q, d.x_means.copy(), np.zeros(d.q))


def dependence_sets(ts: TermSet) -> DependenceGraph:
    return DependenceGraph(tuple(frozenset(t.parents) for t in ts.terms), tuple(ts.labels))


def term_count(q: int, n_binary: int) -> int:
    """p = q + (q - #binary) + q(q-1)/2."""
    return q + (q - n_binary) + q * (q - 1) // 2


def raw_coefficients(ts: TermSet, beta, intercept: float = 0.0):
    """Re-express a fitted function in raw-product coordinates.

    The fitted surface ``intercept + sum_k beta_k * (t_k(x - xbar) - m_k)``
    equals ``b0 + sum_k b_k * t_k(x)`` with products of the *raw* predictors;
    returns ``(b, b0)``. Only main-effect coefficients and the intercept move.
    """
    beta = np.asarray(beta, dtype=float)
    xbar = ts.x_means
    out = beta.copy()
    b0 = float(intercept) - float(beta @ ts.term_means)
    for k, t in enumerate(ts.terms):
        if t.kind == "main":
            b0 -= beta[k] * xbar[k]
        elif t.kind == "square":
            i = t.parents[0]
            out[i] -= 2.0 * beta[k] * xbar[i]
            b0 += beta[k] * xbar[i] ** 2
        else:
            i, j = t.parents
            out[i] -= beta[k] * xbar[j]
            out[j] -= beta[k] * xbar[i]
            b0 += beta[k] * xbar[i] * xbar[j]
    return out, b0
