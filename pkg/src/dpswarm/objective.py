"""Linear-regression fitness, DP score, score sensitivity and RMSE.

Fitness is the mean squared residual ``(1/n) * sum((w @ x_i - y_i) ** 2)``
and the score handed to the exponential mechanism is its negation. With
every ``|x_ik|, |y_i| <= a`` the score of a fixed ``w`` can move by at most
``(a * sum|w_j| + a) ** 2`` when one record is replaced.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Bounds, DomainError, as_position

__all__ = [
    "Dataset",
    "mse_objective",
    "batch_mse",
    "score",
    "sensitivity_bound",
    "rmse",
    "SENSITIVITY_MODES",
]

SENSITIVITY_MODES = ("per-pair", "global")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix ``xs`` (n x d), targets ``ys`` (n,) and attribute bound ``a``."""

    xs: np.ndarray
    ys: np.ndarray
    a: float = 1.0

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float)
        ys = np.array(self.ys, dtype=float).reshape(-1)
        if xs.ndim == 1:
            xs = xs.reshape(-1, 1)
        if xs.ndim != 2 or xs.shape[0] < 1 or xs.shape[1] < 1:
            raise DomainError(f"xs must be a non-empty n x d matrix, got shape {xs.shape}")
        if ys.shape[0] != xs.shape[0]:
            raise DomainError(f"{xs.shape[0]} feature rows but {ys.shape[0]} targets")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise DomainError("dataset contains missing or non-finite values")
        if not self.a > 0:
            raise DomainError(f"attribute bound a must be positive, got {self.a}")
        if np.any(np.abs(xs) > self.a) or np.any(np.abs(ys) > self.a):
            raise DomainError(f"dataset values exceed the attribute bound a={self.a}")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "a", float(self.a))

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def d(self) -> int:
        return self.xs.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(self.xs[rows], self.ys[rows], self.a)


def batch_mse(data: Dataset, weights) -> np.ndarray:
    """Mean squared error of every row of ``weights`` (m x d) on ``data``."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[1] != data.d:
        raise DomainError(f"weights must be m x {data.d}, got shape {w.shape}")
    resid = w @ data.xs.T - data.ys
    return np.mean(resid * resid, axis=1)


def mse_objective(data: Dataset, w) -> float:
    """Mean squared residual of the linear model ``w`` on ``data``."""
    w = as_position(w)
    if w.shape[0] != data.d:
        raise DomainError(f"weight vector has length {w.shape[0]}, dataset has d={data.d}")
    return float(batch_mse(data, w[None, :])[0])


def score(data: Dataset, w) -> float:
    """Exponential-mechanism score; higher is better."""
    return -mse_objective(data, w)


def sensitivity_bound(candidates=None, a: float = 1.0, mode: str = "per-pair",
                      bounds: Bounds | None = None, d_dim: int | None = None) -> float:
    """Upper bound on ``|q(D, w) - q(D', w)|`` over bounded neighbours.

    ``per-pair`` takes the max of ``(a * sum|w_j| + a) ** 2`` over the given
    candidates. ``global`` never looks at candidates and uses the worst
    vector of the box, ``(d_dim * a * w_max + a) ** 2``.
    """
    if not a > 0:
        raise DomainError(f"attribute bound a must be positive, got {a}")
    if mode == "per-pair":
        if candidates is None:
            raise DomainError("per-pair mode needs a candidate set")
        w = np.asarray(candidates, dtype=float)
        if w.ndim == 1:
            w = w[None, :]
        if w.size == 0 or w.shape[0] == 0:
            raise DomainError("empty candidate set")
        if not np.all(np.isfinite(w)):
            raise DomainError("non-finite candidate coordinate")
        per_cand = (a * np.sum(np.abs(w), axis=1) + a) ** 2
        return float(np.max(per_cand))
    if mode == "global":
        if bounds is None or d_dim is None:
            raise DomainError("global mode needs bounds and d_dim")
        if d_dim < 1:
            raise DomainError(f"d_dim must be >= 1, got {d_dim}")
        return float((d_dim * a * bounds.w_max + a) ** 2)
    raise DomainError(f"unknown sensitivity mode {mode!r}; expected one of {SENSITIVITY_MODES}")


def rmse(predicted, actual) -> float:
    """Root mean squared difference of two equal-length sequences."""
    p = np.asarray(predicted, dtype=float).reshape(-1)
    t = np.asarray(actual, dtype=float).reshape(-1)
    if p.shape != t.shape:
        raise DomainError(f"length mismatch: {p.shape[0]} predictions vs {t.shape[0]} targets")
    if p.size == 0:
        raise DomainError("rmse of empty sequences")
    diff = p - t
    return math.sqrt(float(np.mean(diff * diff)))
