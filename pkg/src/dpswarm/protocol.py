"""Two-party optimization run: a data-holding user and a swarm-holding outsourcer.

Per iteration the outsourcer sends its population, the user answers with
updated personal bests, the outsourcer refreshes Gbest and moves the swarm.
The dataset lives only inside :class:`UserEndpoint`; :class:`Outsourcer`
is constructed without it and talks to any object with a ``handle`` method.

Wire format (all integers and floats big-endian)::

    header   4s  magic  b"DPSW"
             B   version (1)
             B   kind   (1 = EvaluationRequest, 2 = EvaluationReply)
             I   body length in bytes
    request  I   iteration
             I   m (>= 1)
             I   d (>= 1)
             m*d d  positions, row-major
    reply    I   iteration
             I   m (>= 1)
             I   d (>= 1)
             B   flags: 0x01 fitness present, 0x02 ranking present, 0x04 improved
             m*d d  pbest, row-major
             m d    fitness             (if 0x01)
             I      k, then k * I ranking indices  (if 0x02)

A reply carries exactly one of fitness (faithful disclosure) or ranking
(strict disclosure); ``improved`` is only meaningful with a ranking. NaN or
infinite payloads, unknown flags, trailing or missing bytes are rejected.
"""
from __future__ import annotations

import csv
import io
import math
import struct
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .behaviors import PSO_FAMILY, BehaviorSpec, SwarmState, init_swarm, step, update_gbest
from .core import Bounds, ConfigurationError, fork_stream
from .objective import SENSITIVITY_MODES, Dataset, batch_mse
from .privacy import BudgetExhaustedError, BudgetLedger, dp_update_pbest, greedy_update_pbest

__all__ = [
    "ProtocolError",
    "ParseError",
    "RunAbortedError",
    "RunConfig",
    "EvaluationRequest",
    "EvaluationReply",
    "RunResult",
    "UserEndpoint",
    "WireEndpoint",
    "Outsourcer",
    "serialize_message",
    "parse_message",
    "run",
]

MAGIC = b"DPSW"
WIRE_VERSION = 1
KIND_REQUEST = 1
KIND_REPLY = 2
FLAG_FITNESS = 0x01
FLAG_RANKING = 0x02
FLAG_IMPROVED = 0x04

_HEADER = struct.Struct(">4sBBI")
_DIMS = struct.Struct(">III")


class ProtocolError(RuntimeError):
    """A party received something the protocol does not allow."""


class ParseError(ProtocolError, ValueError):
    """Bytes do not decode to a well-formed message."""


class RunAbortedError(RuntimeError):
    def __init__(self, message: str, iteration: int, individual: Optional[int] = None):
        where = f"iteration {iteration}" + (f", individual {individual}" if individual is not None else "")
        super().__init__(f"run aborted at {where}: {message}")
        self.iteration = iteration
        self.individual = individual


@dataclass(frozen=True)
class RunConfig:
    epsilon: float = 1.0
    iterations: int = 100
    population_size: int = 100
    behavior: BehaviorSpec = field(default_factory=BehaviorSpec)
    bounds: Bounds = field(default_factory=Bounds)
    seed: int = 0
    private: bool = True
    strict_disclosure: bool = False
    sensitivity_mode: str = "per-pair"

    def __post_init__(self):
        if self.iterations < 1 or self.population_size < 1:
            raise ConfigurationError("iterations and population_size must be >= 1")
        if self.behavior.kind == "GWO" and self.population_size < 3:
            raise ConfigurationError("GWO needs population_size >= 3")
        if self.sensitivity_mode not in SENSITIVITY_MODES:
            raise ConfigurationError(f"unknown sensitivity mode {self.sensitivity_mode!r}")
        if self.private and not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ConfigurationError(f"epsilon must be positive and finite, got {self.epsilon}")

    @property
    def ranking_size(self) -> int:
        return 3 if self.behavior.kind == "GWO" else 1


def _same(a, b) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return np.array_equal(np.asarray(a), np.asarray(b))


@dataclass(frozen=True, eq=False)
class EvaluationRequest:
    iteration: int
    positions: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "positions", np.array(self.positions, dtype=float, ndmin=2))

    def __eq__(self, other):
        return (isinstance(other, EvaluationRequest) and self.iteration == other.iteration
                and _same(self.positions, other.positions))


@dataclass(frozen=True, eq=False)
class EvaluationReply:
    iteration: int
    pbest: np.ndarray
    fitness: Optional[np.ndarray] = None
    ranking: Optional[tuple] = None
    improved: bool = False

    def __post_init__(self):
        object.__setattr__(self, "pbest", np.array(self.pbest, dtype=float, ndmin=2))
        if self.fitness is not None:
            object.__setattr__(self, "fitness", np.array(self.fitness, dtype=float).reshape(-1))
        if self.ranking is not None:
            object.__setattr__(self, "ranking", tuple(int(i) for i in self.ranking))

    def __eq__(self, other):
        return (isinstance(other, EvaluationReply) and self.iteration == other.iteration
                and _same(self.pbest, other.pbest) and _same(self.fitness, other.fitness)
                and self.ranking == other.ranking and bool(self.improved) == bool(other.improved))


# -- wire format ------------------------------------------------------------

def _pack_matrix(a: np.ndarray) -> bytes:
    return np.ascontiguousarray(a, dtype=">f8").tobytes()


def _check_matrix(a: np.ndarray, what: str) -> None:
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ProtocolError(f"{what} must be a non-empty m x d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ProtocolError(f"{what} contains NaN or infinite values")


def serialize_message(msg) -> bytes:
    """Encode a request or reply in the versioned binary format above."""
    if isinstance(msg, EvaluationRequest):
        _check_matrix(msg.positions, "positions")
        m, d = msg.positions.shape
        body = _DIMS.pack(msg.iteration, m, d) + _pack_matrix(msg.positions)
        kind = KIND_REQUEST
    elif isinstance(msg, EvaluationReply):
        _check_matrix(msg.pbest, "pbest")
        m, d = msg.pbest.shape
        if (msg.fitness is None) == (msg.ranking is None):
            raise ProtocolError("reply needs exactly one of fitness or ranking")
        flags = 0
        tail = b""
        if msg.fitness is not None:
            if msg.fitness.shape != (m,) or not np.all(np.isfinite(msg.fitness)):
                raise ProtocolError("fitness must hold m finite values")
            flags |= FLAG_FITNESS
            tail = np.ascontiguousarray(msg.fitness, dtype=">f8").tobytes()
        else:
            flags |= FLAG_RANKING
            tail = struct.pack(f">I{len(msg.ranking)}I", len(msg.ranking), *msg.ranking)
            if msg.improved:
                flags |= FLAG_IMPROVED
        body = _DIMS.pack(msg.iteration, m, d) + bytes([flags]) + _pack_matrix(msg.pbest) + tail
        kind = KIND_REPLY
    else:
        raise TypeError(f"cannot serialize {type(msg).__name__}")
    return _HEADER.pack(MAGIC, WIRE_VERSION, kind, len(body)) + body


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise ParseError(f"truncated message: need {n} bytes at offset {self.pos}")
        out = self.buf[self.pos:self.pos + n]
        self.pos += n
        return out

    def floats(self, count: int) -> np.ndarray:
        vals = np.frombuffer(self.take(8 * count), dtype=">f8").astype(float)
        if not np.all(np.isfinite(vals)):
            raise ParseError("NaN or infinite value in payload")
        return vals


def parse_message(data: bytes):
    """Decode bytes produced by :func:`serialize_message`; raises :class:`ParseError`."""
    data = bytes(data)
    rd = _Reader(data)
    magic, version, kind, length = _HEADER.unpack(rd.take(_HEADER.size))
    if magic != MAGIC:
        raise ParseError(f"bad magic {magic!r}")
    if version != WIRE_VERSION:
        raise ParseError(f"unsupported wire version {version}")
    if len(data) - rd.pos != length:
        raise ParseError(f"body length {len(data) - rd.pos} does not match header {length}")
    iteration, m, d = _DIMS.unpack(rd.take(_DIMS.size))
    if m < 1 or d < 1:
        raise ParseError(f"empty population or dimension (m={m}, d={d})")
    if kind == KIND_REQUEST:
        positions = rd.floats(m * d).reshape(m, d)
        msg = EvaluationRequest(iteration, positions)
    elif kind == KIND_REPLY:
        flags = rd.take(1)[0]
        if flags & ~(FLAG_FITNESS | FLAG_RANKING | FLAG_IMPROVED):
            raise ParseError(f"unknown flag bits {flags:#04x}")
        has_fit = bool(flags & FLAG_FITNESS)
        has_rank = bool(flags & FLAG_RANKING)
        if has_fit == has_rank:
            raise ParseError("reply needs exactly one of fitness or ranking")
        if has_fit and flags & FLAG_IMPROVED:
            raise ParseError("improved flag without ranking")
        pbest = rd.floats(m * d).reshape(m, d)
        fitness = ranking = None
        if has_fit:
            fitness = rd.floats(m)
            if np.any(fitness < 0):
                raise ParseError("negative fitness value")
        else:
            (k,) = struct.unpack(">I", rd.take(4))
            if k < 1 or k > m:
                raise ParseError(f"ranking length {k} outside 1..{m}")
            ranking = struct.unpack(f">{k}I", rd.take(4 * k))
            if max(ranking) >= m or len(set(ranking)) != k:
                raise ParseError("ranking indices out of range or repeated")
        msg = EvaluationReply(iteration, pbest, fitness, ranking, bool(flags & FLAG_IMPROVED))
    else:
        raise ParseError(f"unknown message kind {kind}")
    if rd.pos != len(data):
        raise ParseError(f"{len(data) - rd.pos} trailing bytes")
    return msg


# -- parties ------------------------------------------------------------------

class UserEndpoint:
    """The data-holding party: evaluates positions and updates Pbest.

    In private mode every request spends ``epsilon / r`` through
    :func:`~dpswarm.privacy.dp_update_pbest`; otherwise Pbest is updated
    greedily. Strict disclosure replaces fitness values with a best-first
    index ranking plus an ``improved`` bit computed against a user-side
    incumbent.
    """

    def __init__(self, data: Dataset, config: RunConfig, ledger: BudgetLedger | None = None):
        self._data = data
        self.config = config
        self.mechanism = fork_stream(config.seed, "mechanism")
        if config.private and ledger is None:
            ledger = BudgetLedger(config.epsilon, config.iterations, config.population_size)
        self.ledger = ledger if config.private else None
        self.eps_r = config.epsilon / config.iterations
        self._pbest: np.ndarray | None = None
        self._best_fitness: float | None = None
        self.gbest_fitness_trace: list[float] = []

    def handle(self, request: EvaluationRequest) -> EvaluationReply:
        P = request.positions
        if P.shape[1] != self._data.d:
            raise ProtocolError(f"positions have {P.shape[1]} columns, dataset has d={self._data.d}")
        if self._pbest is None:
            self._pbest = P.copy()
        elif P.shape != self._pbest.shape:
            raise ProtocolError(f"request has {P.shape[0]} positions, expected {self._pbest.shape[0]}")
        if self.config.private:
            new = dp_update_pbest(self._data, P, self._pbest, self.eps_r, self.mechanism,
                                  ledger=self.ledger, iteration=request.iteration,
                                  sensitivity_mode=self.config.sensitivity_mode,
                                  bounds=self.config.bounds)
        else:
            new = greedy_update_pbest(self._data, P, self._pbest)
        self._pbest = new
        fit = batch_mse(self._data, new)
        best = int(np.argmin(fit))
        improved = self._best_fitness is None or fit[best] < self._best_fitness
        if improved:
            self._best_fitness = float(fit[best])
        self.gbest_fitness_trace.append(self._best_fitness)
        if self.config.strict_disclosure:
            order = np.argsort(fit, kind="stable")[: self.config.ranking_size]
            return EvaluationReply(request.iteration, new.copy(), ranking=tuple(order), improved=improved)
        return EvaluationReply(request.iteration, new.copy(), fitness=fit)

    def handle_bytes(self, payload: bytes) -> bytes:
        req = parse_message(payload)
        if not isinstance(req, EvaluationRequest):
            raise ProtocolError("user endpoint only accepts evaluation requests")
        return serialize_message(self.handle(req))


class WireEndpoint:
    """Adapter that pushes every exchange through the byte format.

    ``send`` is any callable taking request bytes and returning reply bytes,
    e.g. ``UserEndpoint.handle_bytes`` or a socket round trip.
    """

    def __init__(self, send):
        self._send = send

    def handle(self, request: EvaluationRequest) -> EvaluationReply:
        reply = parse_message(self._send(serialize_message(request)))
        if not isinstance(reply, EvaluationReply):
            raise ProtocolError("expected an evaluation reply")
        return reply


@dataclass
class RunResult:
    gbest: np.ndarray
    gbest_fitness: float
    ledger: Optional[BudgetLedger]
    per_iteration_gbest_fitness: list
    budget_trace: list = field(default_factory=list)
    dynamics_cursor: list = field(default_factory=list)
    gbest_trace: list = field(default_factory=list)

    def trace_csv(self, dest=None) -> str:
        """``iteration,gbest_fitness,budget_consumed`` rows; written to ``dest`` if given."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "gbest_fitness", "budget_consumed"])
        for j, (f, b) in enumerate(zip(self.per_iteration_gbest_fitness, self.budget_trace)):
            w.writerow([j, repr(float(f)), repr(float(b))])
        text = buf.getvalue()
        if dest is not None:
            with open(dest, "w", newline="") as fh:
                fh.write(text)
        return text


class Outsourcer:
    """The swarm-holding party. It never receives the dataset."""

    def __init__(self, config: RunConfig, dim: int, endpoint):
        self.config = config
        self.dim = dim
        self.endpoint = endpoint
        self.dynamics = fork_stream(config.seed, "dynamics")

    def _check_reply(self, reply: EvaluationReply, sent: np.ndarray, prior: np.ndarray, j: int):
        if reply.iteration != j:
            raise ProtocolError(f"reply for iteration {reply.iteration}, expected {j}")
        if reply.pbest.shape != sent.shape:
            raise ProtocolError(f"reply has shape {reply.pbest.shape}, sent {sent.shape}")
        for i in range(sent.shape[0]):
            row = reply.pbest[i]
            if not (np.array_equal(row, sent[i]) or np.array_equal(row, prior[i])):
                raise ProtocolError(f"reply row {i} is neither the sent position nor the prior Pbest")
        if self.config.strict_disclosure:
            if reply.ranking is None:
                raise ProtocolError("strict disclosure expects a ranking")
        elif reply.fitness is None:
            raise ProtocolError("faithful disclosure expects fitness values")

    def optimize(self):
        """Run all iterations; returns ``(state, traces)``."""
        cfg = self.config
        spec = cfg.behavior
        state = init_swarm(cfg.population_size, self.dim, cfg.bounds, self.dynamics, spec.kind)
        gbest = None
        fit_trace, gbest_trace, cursor = [], [], []
        for j in range(cfg.iterations):
            sent = state.positions
            reply = self.endpoint.handle(EvaluationRequest(j, sent))
            self._check_reply(reply, sent, state.pbest, j)
            if cfg.strict_disclosure:
                if reply.improved or gbest is None:
                    gbest = (reply.pbest[reply.ranking[0]].copy(), None)
                state = replace(state, pbest=reply.pbest, ranking=reply.ranking, pbest_fitness=None)
            else:
                gbest = update_gbest(reply.pbest, reply.fitness, gbest)
                state = replace(state, pbest=reply.pbest, pbest_fitness=reply.fitness)
                fit_trace.append(gbest[1])
            state = replace(state, gbest=gbest[0], gbest_fitness=gbest[1], iteration=j)
            gbest_trace.append(gbest[0].copy())
            state = step(state, spec, self.dynamics, cfg.bounds, cfg.iterations)
            cursor.append(self.dynamics.position)
        return state, fit_trace, gbest_trace, cursor


def run(config: RunConfig, data: Dataset, ledger: BudgetLedger | None = None,
        transport: str = "inprocess") -> RunResult:
    """Execute one full optimization between a user holding ``data`` and an outsourcer.

    :param ledger: optional pre-existing ledger (e.g. a budget shared across
        runs); an overdraw aborts before the offending selection.
    :param transport: ``"inprocess"`` or ``"wire"`` (every message round-trips
        through :func:`serialize_message`/:func:`parse_message`).
    """
    user = UserEndpoint(data, config, ledger)
    if transport == "inprocess":
        endpoint = user
    elif transport == "wire":
        endpoint = WireEndpoint(user.handle_bytes)
    else:
        raise ConfigurationError(f"unknown transport {transport!r}")
    outsourcer = Outsourcer(config, data.d, endpoint)
    budget_trace = []

    class _Metered:
        def handle(self, request):
            reply = endpoint.handle(request)
            budget_trace.append(user.ledger.consumed if user.ledger is not None else 0.0)
            return reply

    outsourcer.endpoint = _Metered()
    try:
        _, fit_trace, gbest_trace, cursor = outsourcer.optimize()
    except BudgetExhaustedError as exc:
        j = len(budget_trace)
        raise RunAbortedError(f"privacy budget exhausted ({exc})", j, 0) from exc
    except (ProtocolError, ValueError, RuntimeError) as exc:
        if isinstance(exc, RunAbortedError):
            raise
        raise RunAbortedError(str(exc), len(budget_trace)) from exc
    if config.strict_disclosure:
        fit_trace = list(user.gbest_fitness_trace)
    return RunResult(
        gbest=gbest_trace[-1],
        gbest_fitness=float(fit_trace[-1]),
        ledger=user.ledger,
        per_iteration_gbest_fitness=[float(f) for f in fit_trace],
        budget_trace=budget_trace,
        dynamics_cursor=cursor,
        gbest_trace=gbest_trace,
    )
