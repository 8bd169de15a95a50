"""Exponential mechanism over two candidates, budget ledger and DP Pbest update.

The total budget ``epsilon`` is split evenly: ``epsilon / r`` per iteration and
``epsilon / r / m`` per individual selection. Each selection picks between an
individual's current position (index 0) and its personal best (index 1) with

    Pr[index 0] = exp(e q0 / 2dq) / (exp(e q0 / 2dq) + exp(e q1 / 2dq))
                = 1 / (1 + exp(e (q1 - q0) / 2dq))

evaluated in logistic form so very large budgets saturate instead of
overflowing. Selection consumes exactly one uniform draw and picks index 0
iff ``u < Pr[index 0]``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .core import Bounds, ConfigurationError, DomainError, RngStream
from .objective import Dataset, batch_mse, sensitivity_bound

__all__ = [
    "BudgetExhaustedError",
    "LedgerEntry",
    "BudgetLedger",
    "SelectionOutcome",
    "allocate",
    "prob_index0",
    "exp_mech_select",
    "dp_update_pbest",
    "greedy_update_pbest",
]


class BudgetExhaustedError(RuntimeError):
    """A selection would spend more than the ledger's total budget."""


def allocate(epsilon: float, r: int, m: int) -> float:
    """Per-selection budget ``epsilon / r / m``."""
    if not (isinstance(epsilon, (int, float)) and math.isfinite(epsilon) and epsilon > 0):
        raise ConfigurationError(f"epsilon must be positive and finite, got {epsilon}")
    if int(r) != r or r < 1:
        raise ConfigurationError(f"iterations must be a positive integer, got {r}")
    if int(m) != m or m < 1:
        raise ConfigurationError(f"population must be a positive integer, got {m}")
    return float(epsilon) / int(r) / int(m)


@dataclass(frozen=True)
class LedgerEntry:
    iteration: int
    individual: int
    epsilon_spent: float
    chosen_index: int


class BudgetLedger:
    """Append-only record of every DP selection in a run.

    Capacity is ``r * m`` selections of ``epsilon / r / m`` each; a charge past
    capacity raises :class:`BudgetExhaustedError` and leaves the log untouched.
    """

    def __init__(self, total_epsilon: float, iterations: int, population: int):
        self.per_selection = allocate(total_epsilon, iterations, population)
        self.total_epsilon = float(total_epsilon)
        self.iterations = int(iterations)
        self.population = int(population)
        self._log: list[LedgerEntry] = []

    @property
    def per_iteration(self) -> float:
        return self.total_epsilon / self.iterations

    @property
    def capacity(self) -> int:
        return self.iterations * self.population

    @property
    def remaining(self) -> int:
        """Selections still affordable."""
        return self.capacity - len(self._log)

    @property
    def log(self) -> tuple[LedgerEntry, ...]:
        return tuple(self._log)

    @property
    def consumed(self) -> float:
        return math.fsum(e.epsilon_spent for e in self._log)

    def __len__(self):
        return len(self._log)

    def require(self, selections: int, amount: float | None = None) -> None:
        """Fail early if ``selections`` more charges (of ``amount`` each) are not allowed."""
        if amount is not None and amount != self.per_selection:
            raise DomainError(
                f"selection budget {amount!r} differs from the allocated {self.per_selection!r}"
            )
        if selections > self.remaining:
            raise BudgetExhaustedError(
                f"{selections} selections requested but only {self.remaining} of "
                f"{self.capacity} remain (epsilon={self.total_epsilon})"
            )

    def charge(self, iteration: int, individual: int, epsilon_spent: float,
               chosen_index: int) -> LedgerEntry:
        self.require(1, epsilon_spent)
        entry = LedgerEntry(int(iteration), int(individual), float(epsilon_spent), int(chosen_index))
        self._log.append(entry)
        return entry

    def to_csv(self, dest=None) -> str:
        """Write the log as CSV (to ``dest`` path or file object) and return the text."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "individual", "epsilon_spent", "chosen_index"])
        for e in self._log:
            w.writerow([e.iteration, e.individual, repr(e.epsilon_spent), e.chosen_index])
        text = buf.getvalue()
        if isinstance(dest, (str, bytes)) or hasattr(dest, "__fspath__"):
            with open(dest, "w", newline="") as fh:
                fh.write(text)
        elif dest is not None:
            dest.write(text)
        return text


@dataclass(frozen=True)
class SelectionOutcome:
    chosen_index: int
    prob_of_index0: float
    delta_q_used: float


def prob_index0(q0: float, q1: float, delta_q: float, eps_m: float) -> float:
    """Probability the mechanism returns candidate 0."""
    z = eps_m * (q0 - q1) / (2.0 * delta_q)
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def exp_mech_select(q0: float, q1: float, delta_q: float, eps_m: float, rng: RngStream,
                    ledger: BudgetLedger | None = None, iteration: int = 0,
                    individual: int = 0) -> SelectionOutcome:
    """Pick index 0 or 1 with exponential-mechanism probabilities.

    :param q0, q1: scores of the two candidates (higher is better).
    :param delta_q: score sensitivity, must be positive.
    :param eps_m: budget spent on this one selection.
    :param rng: the ``"mechanism"`` stream; exactly one uniform is consumed.
    :param ledger: if given, the spend is validated before the draw and logged after it.
    """
    if not (math.isfinite(delta_q) and delta_q > 0):
        raise DomainError(f"sensitivity must be positive and finite, got {delta_q}")
    if not (math.isfinite(q0) and math.isfinite(q1)):
        raise DomainError(f"non-finite score ({q0}, {q1})")
    if not (math.isfinite(eps_m) and eps_m >= 0):
        raise DomainError(f"selection budget must be finite and >= 0, got {eps_m}")
    if ledger is not None:
        ledger.require(1, eps_m)
    p0 = prob_index0(q0, q1, delta_q, eps_m)
    chosen = 0 if rng.uniform() < p0 else 1
    if ledger is not None:
        ledger.charge(iteration, individual, eps_m, chosen)
    return SelectionOutcome(chosen, p0, float(delta_q))


def _check_pair(data: Dataset, population, pbest):
    P = np.asarray(population, dtype=float)
    B = np.asarray(pbest, dtype=float)
    if P.ndim != 2 or B.ndim != 2:
        raise DomainError("population and pbest must be m x d matrices")
    if P.shape[0] != B.shape[0]:
        raise DomainError(f"population has {P.shape[0]} rows, pbest has {B.shape[0]}")
    if P.shape[1] != data.d or B.shape[1] != data.d:
        raise DomainError(f"positions must have d={data.d} columns")
    return P, B


def dp_update_pbest(data: Dataset, population, pbest, eps_r: float, rng: RngStream,
                    ledger: BudgetLedger | None = None, iteration: int = 0,
                    sensitivity_mode: str = "per-pair", bounds: Bounds | None = None,
                    outcomes: list | None = None) -> np.ndarray:
    """Replace each Pbest row with a DP choice between it and the current position.

    Individuals are processed in index order, each spending ``eps_r / m``.
    With a ledger the whole batch of ``m`` selections is pre-checked, so an
    overdraw aborts before the first selection of the call.
    """
    P, B = _check_pair(data, population, pbest)
    m = P.shape[0]
    if not (math.isfinite(eps_r) and eps_r > 0):
        raise DomainError(f"iteration budget must be positive, got {eps_r}")
    eps_m = eps_r / m
    if ledger is not None:
        ledger.require(m, eps_m)
    if sensitivity_mode == "global":
        dq_global = sensitivity_bound(a=data.a, mode="global", bounds=bounds or Bounds(), d_dim=data.d)
    f_pop = batch_mse(data, P)
    f_best = batch_mse(data, B)
    out = B.copy()
    for i in range(m):
        if sensitivity_mode == "global":
            dq = dq_global
        else:
            dq = sensitivity_bound(np.stack([P[i], B[i]]), a=data.a, mode=sensitivity_mode)
        sel = exp_mech_select(-float(f_pop[i]), -float(f_best[i]), dq, eps_m, rng,
                              ledger=ledger, iteration=iteration, individual=i)
        if sel.chosen_index == 0:
            out[i] = P[i]
        if outcomes is not None:
            outcomes.append(sel)
    return out


def greedy_update_pbest(data: Dataset, population, pbest) -> np.ndarray:
    """Non-private update: keep the current position iff its fitness is strictly lower."""
    P, B = _check_pair(data, population, pbest)
    better = batch_mse(data, P) < batch_mse(data, B)
    out = B.copy()
    out[better] = P[better]
    return out
