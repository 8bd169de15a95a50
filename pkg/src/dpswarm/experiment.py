"""Epsilon sweeps with repeated k-fold cross-validation.

For every algorithm, privacy mode and epsilon on the grid, each (repeat, fold)
cell trains a run on the training rows and scores the final Gbest by RMSE on
the held-out rows (normalized units). Non-private runs do not depend on
epsilon, so each is run once per (repeat, fold) and its record repeated for
every grid epsilon.

Run seeds are derived by hashing ``(master seed, algorithm, repeat, fold)``,
never the privacy mode or epsilon, so a private run and its non-private twin
share the dynamics stream.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .behaviors import KINDS, BehaviorSpec
from .core import Bounds, ConfigurationError, DomainError, fork_stream
from .data import kfold, load_csv, normalize, synth_linear
from .objective import SENSITIVITY_MODES, rmse
from .protocol import RunConfig, run

__all__ = [
    "ExperimentConfig",
    "ResultRecord",
    "SummaryRow",
    "CellError",
    "derive_seed",
    "prepare_dataset",
    "run_experiment",
    "summarize",
    "write_records",
    "read_records",
    "write_summary",
    "emit_plot_data",
    "read_plot_data",
]

log = logging.getLogger(__name__)

DEFAULT_EPSILONS = (0.1, 1.0, 10.0, 100.0)


@dataclass
class ExperimentConfig:
    dataset: Optional[str] = None
    synthetic: Optional[tuple] = None  # (n, d, noise_sd)
    target: Optional[str] = None
    subsample: Optional[int] = None
    algorithms: tuple = ("PSO", "GWO", "WOA", "SOA")
    private_modes: tuple = (True, False)
    epsilons: tuple = DEFAULT_EPSILONS
    iterations: int = 100
    population: int = 100
    folds: int = 10
    repeats: int = 10
    seed: int = 0
    w_max: float = 1.0
    sensitivity_mode: str = "per-pair"
    disclosure: str = "faithful"
    results_path: Optional[str] = None
    ledger_dir: Optional[str] = None
    measure_runtime: bool = False
    workers: int = 1

    def __post_init__(self):
        self.algorithms = tuple(str(a).upper() for a in self.algorithms)
        self.private_modes = tuple(bool(p) for p in self.private_modes)
        self.epsilons = tuple(float(e) for e in self.epsilons)
        if self.synthetic is not None:
            self.synthetic = tuple(self.synthetic)
        self.validate()

    def validate(self):
        if (self.dataset is None) == (self.synthetic is None):
            raise ConfigurationError("give exactly one of dataset path or synthetic spec")
        if self.synthetic is not None and len(self.synthetic) != 3:
            raise ConfigurationError("synthetic spec is (n, d, noise_sd)")
        bad = [a for a in self.algorithms if a not in KINDS]
        if bad or not self.algorithms:
            raise ConfigurationError(f"unknown algorithms {bad}; choose from {KINDS}")
        if not self.private_modes:
            raise ConfigurationError("no privacy mode selected")
        if not self.epsilons or any(not e > 0 for e in self.epsilons):
            raise ConfigurationError("epsilon grid must be non-empty and positive")
        if self.sensitivity_mode not in SENSITIVITY_MODES:
            raise ConfigurationError(f"unknown sensitivity mode {self.sensitivity_mode!r}")
        if self.disclosure not in ("faithful", "strict"):
            raise ConfigurationError(f"disclosure must be 'faithful' or 'strict', got {self.disclosure!r}")
        Bounds(self.w_max)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        obj = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys {sorted(unknown)}")
        return cls(**obj)


@dataclass(frozen=True)
class ResultRecord:
    algorithm: str
    private: bool
    epsilon: float
    repeat: int
    fold: int
    rmse: float
    runtime_ms: float
    seed: int

    @property
    def key(self):
        return (self.algorithm, self.private, self.epsilon, self.repeat, self.fold)


@dataclass(frozen=True)
class SummaryRow:
    algorithm: str
    private: bool
    epsilon: float
    mean_rmse: float
    count: int


@dataclass(frozen=True)
class CellError:
    algorithm: str
    private: bool
    epsilon: Optional[float]
    repeat: int
    fold: int
    message: str


def derive_seed(master: int, algorithm: str, repeat: int, fold: int) -> int:
    """64-bit run seed, a pure function of the cell identity (not of privacy or epsilon)."""
    h = hashlib.blake2b(f"{int(master)}|{algorithm}|{repeat}|{fold}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


def prepare_dataset(cfg: ExperimentConfig):
    """Normalized dataset plus the data stream positioned for fold planning."""
    data_rng = fork_stream(cfg.seed, "data")
    if cfg.synthetic is not None:
        n, d, noise = int(cfg.synthetic[0]), int(cfg.synthetic[1]), float(cfg.synthetic[2])
        # |w_true|_1 <= 1 keeps noiseless targets inside [-1, 1] (no clipping)
        w_true = (2.0 * data_rng.uniforms(d) - 1.0) / d
        data = synth_linear(n, d, w_true, noise, data_rng)
    else:
        data, _, _ = normalize(load_csv(cfg.dataset, cfg.target))
    if cfg.subsample is not None and cfg.subsample < data.n:
        rows = np.sort(data_rng.permutation(data.n)[: cfg.subsample])
        data = data.subset(rows)
    return data, data_rng


def _run_cell(job):
    cfg, data, plan, algorithm, private, eps, repeat, fold = job
    seed = derive_seed(cfg.seed, algorithm, repeat, fold)
    train_rows, test_rows = plan.split(repeat, fold)
    if np.intersect1d(train_rows, test_rows).size:
        raise DomainError("train and test rows overlap")
    rc = RunConfig(
        epsilon=eps if private else 1.0,
        iterations=cfg.iterations,
        population_size=cfg.population,
        behavior=BehaviorSpec(algorithm),
        bounds=Bounds(cfg.w_max),
        seed=seed,
        private=private,
        strict_disclosure=cfg.disclosure == "strict",
        sensitivity_mode=cfg.sensitivity_mode,
    )
    t0 = time.perf_counter()
    result = run(rc, data.subset(train_rows))
    elapsed = (time.perf_counter() - t0) * 1000.0 if cfg.measure_runtime else 0.0
    test = data.subset(test_rows)
    score = rmse(test.xs @ result.gbest, test.ys)
    if private and cfg.ledger_dir:
        os.makedirs(cfg.ledger_dir, exist_ok=True)
        result.ledger.to_csv(Path(cfg.ledger_dir) / f"{algorithm}_eps{eps!r}_r{repeat}_f{fold}.csv")
    return score, elapsed, seed


def _jobs(cfg: ExperimentConfig, data, plan, done: set):
    """Yield ``(job, keys)`` in canonical order; keys are the record keys the job fills."""
    for algorithm in cfg.algorithms:
        for private in cfg.private_modes:
            for repeat in range(cfg.repeats):
                for fold in range(cfg.folds):
                    if private:
                        for eps in cfg.epsilons:
                            keys = [(algorithm, True, eps, repeat, fold)]
                            if keys[0] not in done:
                                yield (cfg, data, plan, algorithm, True, eps, repeat, fold), keys
                    else:
                        keys = [(algorithm, False, eps, repeat, fold) for eps in cfg.epsilons]
                        if not all(k in done for k in keys):
                            yield (cfg, data, plan, algorithm, False, None, repeat, fold), keys


def _safe_cell(job):
    try:
        return _run_cell(job), None
    except Exception as exc:  # recorded per cell, the sweep goes on
        return None, f"{type(exc).__name__}: {exc}"


def run_experiment(cfg: ExperimentConfig, errors: list | None = None) -> list:
    """Run the sweep and return every :class:`ResultRecord` in canonical order.

    With ``cfg.results_path`` set, records are appended to that CSV as cells
    finish and cells already present in the file are skipped. Failed cells
    are logged, appended to ``errors`` (as :class:`CellError`) and left out.
    """
    data, data_rng = prepare_dataset(cfg)
    plan = kfold(data.n, cfg.folds, cfg.repeats, data_rng)
    existing = []
    if cfg.results_path and os.path.exists(cfg.results_path):
        existing = read_records(cfg.results_path)
    done = {r.key for r in existing}
    pending = list(_jobs(cfg, data, plan, done))
    new_records = []
    writer_fh = None
    if cfg.results_path:
        fresh = not os.path.exists(cfg.results_path)
        writer_fh = open(cfg.results_path, "a", newline="")
        writer = csv.writer(writer_fh, lineterminator="\n")
        if fresh:
            writer.writerow(_COLUMNS)
    try:
        if cfg.workers > 1:
            pool = ProcessPoolExecutor(cfg.workers)
            outcomes = pool.map(_safe_cell, [job for job, _ in pending])
        else:
            pool = None
            outcomes = (_safe_cell(job) for job, _ in pending)
        for (job, keys), (res, err) in zip(pending, outcomes):
            _, _, _, algorithm, private, eps, repeat, fold = job
            if err is not None:
                log.warning("cell %s private=%s eps=%s repeat=%d fold=%d failed: %s",
                            algorithm, private, eps, repeat, fold, err)
                if errors is not None:
                    errors.append(CellError(algorithm, private, eps, repeat, fold, err))
                continue
            score, elapsed, seed = res
            for key in keys:
                if key in done:
                    continue
                rec = ResultRecord(key[0], key[1], key[2], key[3], key[4], score, elapsed, seed)
                new_records.append(rec)
                if writer_fh is not None:
                    writer.writerow(_row(rec))
            if writer_fh is not None:
                writer_fh.flush()
        if pool is not None:
            pool.shutdown()
    finally:
        if writer_fh is not None:
            writer_fh.close()
    order = {k: i for i, (job, keys) in enumerate(_jobs(cfg, data, plan, set())) for k in keys}
    return sorted(existing + new_records, key=lambda r: order.get(r.key, len(order)))


_COLUMNS = [f.name for f in fields(ResultRecord)]


def _row(rec: ResultRecord):
    return [rec.algorithm, "true" if rec.private else "false", repr(rec.epsilon), rec.repeat,
            rec.fold, repr(rec.rmse), repr(rec.runtime_ms), rec.seed]


def write_records(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_COLUMNS)
        for rec in records:
            w.writerow(_row(rec))


def read_records(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != _COLUMNS:
            raise ConfigurationError(f"{path}: unexpected columns {reader.fieldnames}")
        return [
            ResultRecord(r["algorithm"], r["private"] == "true", float(r["epsilon"]), int(r["repeat"]),
                         int(r["fold"]), float(r["rmse"]), float(r["runtime_ms"]), int(r["seed"]))
            for r in reader
        ]


def summarize(records) -> dict:
    """Mean RMSE per ``(algorithm, private, epsilon)`` over repeats and folds."""
    records = list(records)
    if not records:
        raise DomainError("cannot summarize an empty record list")
    groups: dict = {}
    for rec in records:
        groups.setdefault((rec.algorithm, rec.private, rec.epsilon), []).append(rec.rmse)
    return {
        key: SummaryRow(key[0], key[1], key[2], float(np.mean(vals)), len(vals))
        for key, vals in sorted(groups.items())
    }


def write_summary(summary: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "private", "epsilon", "mean_rmse", "count"])
        for row in summary.values():
            w.writerow([row.algorithm, "true" if row.private else "false", repr(row.epsilon),
                        repr(row.mean_rmse), row.count])


def _series_name(algorithm: str, private: bool) -> str:
    return f"DP{algorithm}" if private else algorithm


def emit_plot_data(summary: dict, directory) -> list:
    """One ``<name>.tsv`` per (algorithm, private) with columns epsilon, mean_rmse.

    Private series are named ``DP<ALGO>``, non-private ones ``<ALGO>``.
    """
    if not summary:
        raise DomainError("empty summary")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    series: dict = {}
    for row in summary.values():
        series.setdefault((row.algorithm, row.private), []).append((row.epsilon, row.mean_rmse))
    paths = []
    for (algorithm, private), pts in sorted(series.items()):
        path = directory / f"{_series_name(algorithm, private)}.tsv"
        with open(path, "w") as fh:
            fh.write("epsilon\tmean_rmse\n")
            for eps, val in sorted(pts):
                fh.write(f"{eps!r}\t{val!r}\n")
        paths.append(path)
    return paths


def read_plot_data(path) -> list:
    """Parse a series file back into ``[(epsilon, mean_rmse), ...]``."""
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header != ["epsilon", "mean_rmse"]:
            raise ConfigurationError(f"{path}: unexpected header {header}")
        return [tuple(float(v) for v in line.rstrip("\n").split("\t")) for line in fh if line.strip()]
