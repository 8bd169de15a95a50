"""CSV ingestion, [-1, 1] normalization, repeated k-fold plans and synthetic data."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import ConfigurationError, RngStream, as_position
from .objective import Dataset

__all__ = [
    "LoadError",
    "RawTable",
    "ColumnScale",
    "FoldPlan",
    "load_csv",
    "normalize",
    "denormalize",
    "kfold",
    "synth_linear",
]


class LoadError(ValueError):
    """A CSV file could not be turned into a valid table."""


@dataclass(frozen=True, eq=False)
class RawTable:
    header: list
    rows: np.ndarray
    target_column: int = -1

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1] - 1

    @property
    def target_index(self) -> int:
        return self.target_column % self.rows.shape[1]

    def features(self) -> np.ndarray:
        return np.delete(self.rows, self.target_index, axis=1)

    def target(self) -> np.ndarray:
        return self.rows[:, self.target_index]


def load_csv(path, target: Union[str, int, None] = None) -> RawTable:
    """Read a comma-separated file with one header row.

    ``target`` is a column name or index; the last column by default. Data
    rows are numbered from 1 (the header is not counted) in error messages.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise LoadError(f"{path}: empty file") from None
        rows = []
        for rowno, raw in enumerate(reader, start=1):
            if not raw or all(not c.strip() for c in raw):
                continue
            if len(raw) != len(header):
                raise LoadError(f"{path}: row {rowno} has {len(raw)} cells, header has {len(header)}")
            vals = []
            for col, cell in zip(header, raw):
                try:
                    v = float(cell)
                except ValueError:
                    raise LoadError(f"{path}: row {rowno}, column {col!r}: non-numeric cell {cell!r}") from None
                if not math.isfinite(v):
                    raise LoadError(f"{path}: row {rowno}, column {col!r}: non-finite value {cell!r}")
                vals.append(v)
            rows.append(vals)
    if len(header) < 2:
        raise LoadError(f"{path}: need at least one feature column and a target column")
    if not rows:
        raise LoadError(f"{path}: no data rows")
    if target is None:
        tidx = len(header) - 1
    elif isinstance(target, str):
        if target not in header:
            raise LoadError(f"{path}: target column {target!r} not in header {header}")
        tidx = header.index(target)
    else:
        if not -len(header) <= int(target) < len(header):
            raise LoadError(f"{path}: target column index {target} out of range")
        tidx = int(target) % len(header)
    return RawTable(header, np.array(rows, dtype=float), tidx)


@dataclass(frozen=True)
class ColumnScale:
    lo: float
    hi: float

    def forward(self, v):
        v = np.asarray(v, dtype=float)
        if self.hi == self.lo:
            return np.zeros_like(v)
        return 2.0 * (v - self.lo) / (self.hi - self.lo) - 1.0

    def inverse(self, u):
        u = np.asarray(u, dtype=float)
        return (u + 1.0) / 2.0 * (self.hi - self.lo) + self.lo


def normalize(table: RawTable):
    """Map every column to [-1, 1] by its min and max.

    Returns ``(dataset, feature_scales, target_scale)``. A constant column maps
    to all zeros.
    """
    feats = table.features()
    targ = table.target()
    fscales = [ColumnScale(float(c.min()), float(c.max())) for c in feats.T]
    tscale = ColumnScale(float(targ.min()), float(targ.max()))
    xs = np.column_stack([s.forward(c) for s, c in zip(fscales, feats.T)])
    # guard against a last-ulp excursion outside the box
    xs = np.clip(xs, -1.0, 1.0)
    ys = np.clip(tscale.forward(targ), -1.0, 1.0)
    return Dataset(xs, ys, 1.0), fscales, tscale


def denormalize(values, scale: ColumnScale) -> np.ndarray:
    return scale.inverse(values)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    repeats: int
    n: int
    assignments: tuple  # per repeat: tuple of k index tuples

    def folds(self, repeat: int):
        return self.assignments[repeat]

    def split(self, repeat: int, fold: int):
        """``(train_rows, test_rows)`` for one cell of the plan."""
        test = np.array(self.assignments[repeat][fold], dtype=int)
        train = np.concatenate([np.array(f, dtype=int) for j, f in enumerate(self.assignments[repeat]) if j != fold])
        return train, test

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "repeats": self.repeats, "n": self.n,
                           "assignments": [[list(f) for f in rep] for rep in self.assignments]})

    @classmethod
    def from_json(cls, text: str) -> "FoldPlan":
        obj = json.loads(text)
        assignments = tuple(tuple(tuple(int(i) for i in f) for f in rep) for rep in obj["assignments"])
        plan = cls(int(obj["k"]), int(obj["repeats"]), int(obj["n"]), assignments)
        for rep in plan.assignments:
            flat = sorted(i for f in rep for i in f)
            if len(rep) != plan.k or flat != list(range(plan.n)):
                raise ConfigurationError("fold plan does not partition 0..n-1 into k folds")
        if len(plan.assignments) != plan.repeats:
            raise ConfigurationError("fold plan repeat count mismatch")
        return plan


def kfold(n: int, k: int, repeats: int, rng: RngStream) -> FoldPlan:
    """Shuffle ``0..n-1`` once per repeat and cut into ``k`` near-equal folds.

    Fold sizes differ by at most one; the larger folds come first.
    """
    if k < 2:
        raise ConfigurationError(f"need k >= 2 folds, got {k}")
    if n < k:
        raise ConfigurationError(f"cannot split {n} rows into {k} folds")
    if repeats < 1:
        raise ConfigurationError(f"need repeats >= 1, got {repeats}")
    reps = []
    for _ in range(repeats):
        perm = rng.permutation(n)
        reps.append(tuple(tuple(int(i) for i in part) for part in np.array_split(perm, k)))
    return FoldPlan(k, repeats, n, tuple(reps))


def synth_linear(n: int, d: int, w_true: Sequence[float], noise_sd: float, rng: RngStream) -> Dataset:
    """``x ~ U[-1, 1]^d``, ``y = w_true . x + N(0, noise_sd)`` clipped to [-1, 1].

    Draw order: the n*d feature uniforms (row-major), then n normals.
    """
    w = as_position(w_true)
    if n < 1 or d < 1 or w.shape[0] != d:
        raise ConfigurationError(f"need n >= 1, d >= 1 and len(w_true) == d (n={n}, d={d}, len={w.shape[0]})")
    if not noise_sd >= 0:
        raise ConfigurationError(f"noise_sd must be >= 0, got {noise_sd}")
    xs = 2.0 * rng.uniforms((n, d)) - 1.0
    noise = rng.normals(n, 1.0) * noise_sd
    ys = np.clip(xs @ w + noise, -1.0, 1.0)
    return Dataset(xs, ys, 1.0)
