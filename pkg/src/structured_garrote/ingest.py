"""Tabular data loading, binary-column detection and centering."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
import numpy as np
import pandas as pd


class DataError(ValueError):
    """Invalid or unusable input data."""


def _is_binary(col: np.ndarray) -> bool:
    return np.unique(col).size == 2


@dataclass(frozen=True)
class Dataset:
    x: np.ndarray
    y: np.ndarray
    names: tuple = ()
    binary_flags: tuple = ()  # recomputed from x
    response: str = "y"

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape[0] != y.shape[0]:
            raise DataError(f"x has {x.shape[0]} rows but y has {y.shape[0]}")
        if x.shape[0] < 2:
            raise DataError("need at least two observations")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DataError("missing or non-finite values")
        names = tuple(self.names) if self.names else tuple(f"x{j + 1}" for j in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise DataError("names do not match the number of columns")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "binary_flags",
                           tuple(_is_binary(x[:, j]) for j in range(x.shape[1])))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def q(self) -> int:
        return self.x.shape[1]

    def subset(self, rows) -> "Dataset":
        return Dataset(self.x[rows], self.y[rows], self.names, (), self.response)


@dataclass(frozen=True)
class CenteredDataset:
    """Predictors (and, for regression, the response) shifted to mean zero.

    ``col_means`` holds the q predictor means followed by the response mean;
    the last entry is 0 when the response was left untouched.
    """

    x_c: np.ndarray
    y_c: np.ndarray
    col_means: np.ndarray
    names: tuple
    binary_flags: tuple
    center_response: bool = True

    @property
    def n(self) -> int:
        return self.x_c.shape[0]

    @property
    def q(self) -> int:
        return self.x_c.shape[1]

    @property
    def x_means(self) -> np.ndarray:
        return self.col_means[:-1]

    @property
    def y_mean(self) -> float:
        return float(self.col_means[-1])

    def restore(self):
        """Return the uncentered ``(x, y)``."""
        return self.x_c + self.x_means, self.y_c + self.y_mean


def load_csv(path, response: str, na_policy: str = "fail") -> Dataset:
    """Read a headed, comma-separated numeric table.

    Parameters
    ----------
    path : path-like
    response : str
        Name of the response column; every other column is a predictor.
    na_policy : {"fail", "drop-row"}
        What to do with empty or non-numeric cells.
    """
    if na_policy not in ("fail", "drop-row"):
        raise DataError(f"unknown na_policy {na_policy!r}")
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    frame = pd.read_csv(path, sep=",", decimal=".", encoding="utf-8", dtype=str,
                        keep_default_na=False)
    frame.columns = [str(c).strip() for c in frame.columns]
    if response not in frame.columns:
        raise DataError(f"response column {response!r} not in {list(frame.columns)}")
    stripped = frame.apply(lambda s: s.str.strip())
    numeric = stripped.apply(pd.to_numeric, errors="coerce")
    bad = numeric.isna()
    if bad.to_numpy().any():
        if na_policy == "fail":
            r, c = np.argwhere(bad.to_numpy())[0]
            raise DataError(f"non-numeric or missing value {stripped.iat[r, c]!r} "
                            f"in column {frame.columns[c]!r}, data row {r + 1}")
        numeric = numeric.loc[~bad.any(axis=1)]
    if len(numeric) < 2:
        raise DataError(f"only {len(numeric)} usable rows")
    predictors = [c for c in numeric.columns if c != response]
    return Dataset(numeric[predictors].to_numpy(dtype=float),
                   numeric[response].to_numpy(dtype=float),
                   tuple(predictors), (), response)


def binary_response(y) -> np.ndarray:
    """Recode a two-valued response to {0, 1}, larger raw value -> 1."""
    y = np.asarray(y, dtype=float)
    levels = np.unique(y)
    if levels.size != 2:
        raise DataError(f"classification response must take two values, got {levels.size}")
    return (y == levels[1]).astype(float)


def center(d: Dataset, center_response: bool = True) -> CenteredDataset:
    """Subtract sample means; no rescaling.

    With ``center_response=False`` (classification) the response is copied
    unchanged and its stored mean is 0.
    """
    x = d.x
    means = x.mean(axis=0)
    x_c = x - means
    scale = np.maximum(np.abs(x).max(axis=0), 1.0)
    const = np.flatnonzero(np.abs(x_c).max(axis=0) <= 1e-12 * scale)
    if const.size:
        raise DataError(f"constant predictor column {d.names[const[0]]!r}")
    # second pass removes the rounding residue of the first
    resid = x_c.mean(axis=0)
    x_c = x_c - resid
    means = means + resid
    if center_response:
        y_mean = d.y.mean()
        y_c = d.y - y_mean
    else:
        y_mean = 0.0
        y_c = d.y.copy()
    return CenteredDataset(x_c, y_c, np.append(means, y_mean), d.names,
                           d.binary_flags, center_response)
