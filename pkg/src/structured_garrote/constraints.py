"""Heredity constraints on garrote shrinkage factors.

Rows are stored as ``H theta >= 0``. Strong heredity gets one row per
(child, parent) pair, ``theta_parent - theta_child >= 0``; weak heredity uses
the convex relaxation ``sum_{parents} theta - theta_child >= 0``, one row per
child.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .terms import DependenceGraph

MODES = ("none", "weak", "strong")


@dataclass(frozen=True)
class ConstraintSet:
    h: sparse.csr_matrix
    mode: str
    row_labels: tuple

    @property
    def m(self) -> int:
        return self.h.shape[0]

    @property
    def p(self) -> int:
        return self.h.shape[1]

    def dense(self) -> np.ndarray:
        return self.h.toarray()

    def satisfied(self, theta, tol: float = 0.0) -> bool:
        if self.m == 0:
            return True
        return bool(np.all(self.h @ np.asarray(theta, dtype=float) >= -tol))

    def to_records(self) -> list:
        rows = []
        coo = self.h.tocoo()
        for r, label in enumerate(self.row_labels):
            sel = coo.row == r
            rows.append({"row": r, "label": label,
                         "entries": {int(c): float(v) for c, v in zip(coo.col[sel], coo.data[sel])}})
        return rows


def _label(g: DependenceGraph, i: int) -> str:
    return g.labels[i] if g.labels else str(i)


def _assemble(entries, m, p, mode, labels) -> ConstraintSet:
    if entries:
        r, c, v = zip(*entries)
    else:
        r, c, v = (), (), ()
    h = sparse.csr_matrix((np.asarray(v, dtype=float), (np.asarray(r, dtype=int),
                                                         np.asarray(c, dtype=int))), shape=(m, p))
    return ConstraintSet(h, mode, tuple(labels))


def build_none(g: DependenceGraph) -> ConstraintSet:
    return _assemble([], 0, g.p, "none", [])


def build_strong(g: DependenceGraph) -> ConstraintSet:
    entries, labels = [], []
    for child in range(g.p):
        for parent in sorted(g[child]):
            r = len(labels)
            entries += [(r, parent, 1.0), (r, child, -1.0)]
            labels.append(f"θ[{_label(g, child)}] ≤ θ[{_label(g, parent)}]")
    return _assemble(entries, len(labels), g.p, "strong", labels)


def build_weak(g: DependenceGraph) -> ConstraintSet:
    entries, labels = [], []
    for child in range(g.p):
        parents = sorted(g[child])
        if not parents:
            continue
        r = len(labels)
        entries += [(r, j, 1.0) for j in parents] + [(r, child, -1.0)]
        rhs = " + ".join(f"θ[{_label(g, j)}]" for j in parents)
        labels.append(f"θ[{_label(g, child)}] ≤ {rhs}")
    return _assemble(entries, len(labels), g.p, "weak", labels)


def build(g: DependenceGraph, mode: str) -> ConstraintSet:
    if mode not in MODES:
        raise ValueError(f"heredity mode must be one of {MODES}, got {mode!r}")
    return {"none": build_none, "weak": build_weak, "strong": build_strong}[mode](g)


def check_support(support, g: DependenceGraph, mode: str) -> bool:
    """Whether an index set obeys the heredity rule exactly.

    strong: every selected term has all of its parents selected;
    weak: every selected term with parents has at least one selected.
    """
    if mode not in MODES:
        raise ValueError(f"heredity mode must be one of {MODES}, got {mode!r}")
    s = set(int(i) for i in support)
    if mode == "none":
        return True
    for i in s:
        parents = g[i]
        if not parents:
            continue
        if mode == "strong" and not parents <= s:
            return False
        if mode == "weak" and not parents & s:
            return False
    return True
