"""Outsourcer-side population updates: PSO, CPSO, SPSO, GWO, WOA and SOA.

Each ``*_step`` takes a :class:`SwarmState` and returns a new one with updated
positions (and velocities for the PSO family), clamped to the search box.
Steps never see the dataset; they only use Pbest/Gbest information the user
has disclosed. The caller advances ``iteration``.

Random draws come from the ``"dynamics"`` stream in this fixed order:

PSO     per individual: r1, r2 (scalars)
CPSO    per individual: r1
SPSO    per individual: r2
GWO     per individual, per leader (alpha, beta, delta), per dimension: u1, u2
WOA     per individual: p; if p < 0.5: r1, r2, then a random-whale index only
        when |A| >= 1; otherwise l
SOA     per individual, per dimension: rd, then k

Update rules (``t`` is the 0-based iteration, ``T`` the iteration budget):

PSO     V += c1 r1 (Pbest_i - P_i) + c2 r2 (Gbest - P_i);  P_i += V
GWO     a = a0 (1 - t/T);  A = 2a u1 - a;  C = 2 u2
        X_L = L - A |C L - P_i| for the three best Pbest rows L; P_i = mean(X_L)
WOA     a = 2 (1 - t/T);  A = 2a r1 - a;  C = 2 r2
        p < 0.5, |A| < 1:   P_i = G - A |C G - P_i|
        p < 0.5, |A| >= 1:  P_i = X_r - A |C X_r - P_i|   (X_r a random whale)
        p >= 0.5:           P_i = |G - P_i| e^{b l} cos(2 pi l) + G,  l ~ U[-1, 1]
        A, C and l are scalars per whale, as in the reference implementation.
SOA     A = fc (1 - t/T);  Cs = A P_i;  B = 2 A^2 rd;  Ms = B (G - P_i)
        Ds = |Cs + Ms|;  k ~ U[0, 2 pi];  r = u e^{k v} with u = v = 1
        x = r cos k;  y = r sin k;  z = r k
        P_i = Ds * x * y * z + G

Schedules use ``x0 * (1 - t/T)`` so that ``t = T`` gives exactly zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .core import Bounds, ConfigurationError, DomainError, RngStream, StateError, clamp

__all__ = [
    "KINDS",
    "PSO_FAMILY",
    "BehaviorSpec",
    "SwarmState",
    "init_swarm",
    "linear_schedule",
    "pso_step",
    "cpso_step",
    "spso_step",
    "gwo_step",
    "woa_step",
    "soa_step",
    "step",
    "update_gbest",
    "gwo_leaders",
]

KINDS = ("PSO", "CPSO", "SPSO", "GWO", "WOA", "SOA")
PSO_FAMILY = ("PSO", "CPSO", "SPSO")


@dataclass(frozen=True)
class BehaviorSpec:
    kind: str = "PSO"
    pso_c1: float = 2.0
    pso_c2: float = 2.0
    gwo_a0: float = 2.0
    woa_b: float = 1.0
    soa_fc: float = 2.0
    # optional per-coordinate speed limit for the PSO family; off by default
    pso_vmax: Optional[float] = None

    def __post_init__(self):
        kind = str(self.kind).upper()
        if kind not in KINDS:
            raise ConfigurationError(f"unknown behavior {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if self.pso_vmax is not None and not self.pso_vmax > 0:
            raise ConfigurationError(f"pso_vmax must be positive, got {self.pso_vmax}")


@dataclass(frozen=True, eq=False)
class SwarmState:
    """Outsourcer view of the swarm.

    ``pbest_fitness`` holds disclosed Pbest fitness values (faithful
    disclosure); ``ranking`` holds disclosed Pbest indices best-first (strict
    disclosure). GWO needs one of the two.
    """

    positions: np.ndarray
    pbest: np.ndarray
    velocities: Optional[np.ndarray] = None
    gbest: Optional[np.ndarray] = None
    gbest_fitness: Optional[float] = None
    iteration: int = 0
    pbest_fitness: Optional[np.ndarray] = None
    ranking: Optional[tuple] = None

    @property
    def m(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]


def init_swarm(m: int, d: int, bounds: Bounds, rng: RngStream, kind: str = "PSO") -> SwarmState:
    """Uniform positions in the box (m*d draws, row-major); zero velocities for the PSO family."""
    if m < 1 or d < 1:
        raise ConfigurationError(f"need m >= 1 and d >= 1, got m={m}, d={d}")
    u = rng.uniforms((m, d))
    positions = bounds.w_max * (2.0 * u - 1.0)
    velocities = np.zeros((m, d)) if str(kind).upper() in PSO_FAMILY else None
    return SwarmState(positions=positions, pbest=positions.copy(), velocities=velocities)


def linear_schedule(x0: float, t: int, r_total: int) -> float:
    """``x0`` decreasing linearly to exactly 0 at ``t == r_total``."""
    if r_total < 1:
        raise ConfigurationError(f"r_total must be >= 1, got {r_total}")
    return x0 * (1.0 - t / r_total)


def _need_gbest(s: SwarmState) -> np.ndarray:
    if s.gbest is None:
        raise StateError("behavior step needs a global best; call update_gbest first")
    return s.gbest


def _velocity_step(s: SwarmState, rng: RngStream, b: Bounds, c1: float, c2: float,
                   cognitive: bool, social: bool, vmax: Optional[float] = None) -> SwarmState:
    if s.velocities is None:
        raise StateError("PSO-family step needs velocities")
    g = _need_gbest(s) if social else None
    P = s.positions.copy()
    V = s.velocities.copy()
    for i in range(s.m):
        v = V[i]
        if cognitive:
            r1 = rng.uniform()
            v = v + c1 * r1 * (s.pbest[i] - P[i])
        if social:
            r2 = rng.uniform()
            v = v + c2 * r2 * (g - P[i])
        if vmax is not None:
            v = np.minimum(np.maximum(v, -vmax), vmax)
        V[i] = v
        P[i] = clamp(P[i] + v, b)
    return replace(s, positions=P, velocities=V)


def pso_step(s: SwarmState, spec: BehaviorSpec, rng: RngStream, b: Bounds) -> SwarmState:
    """Full PSO velocity update (cognition and social parts), no inertia weight."""
    return _velocity_step(s, rng, b, spec.pso_c1, spec.pso_c2, cognitive=True, social=True,
                          vmax=spec.pso_vmax)


def cpso_step(s: SwarmState, spec: BehaviorSpec, rng: RngStream, b: Bounds) -> SwarmState:
    """Cognition-only PSO; Gbest is never read."""
    return _velocity_step(s, rng, b, spec.pso_c1, spec.pso_c2, cognitive=True, social=False,
                          vmax=spec.pso_vmax)


def spso_step(s: SwarmState, spec: BehaviorSpec, rng: RngStream, b: Bounds) -> SwarmState:
    """Social-only PSO; Pbest is never read."""
    return _velocity_step(s, rng, b, spec.pso_c1, spec.pso_c2, cognitive=False, social=True,
                          vmax=spec.pso_vmax)


def gwo_leaders(s: SwarmState) -> np.ndarray:
    """Alpha, beta and delta rows of Pbest (3 x d), lowest index wins ties."""
    if s.m < 3:
        raise ConfigurationError(f"GWO needs at least 3 individuals, got {s.m}")
    if s.ranking is not None and len(s.ranking) >= 3:
        idx = list(s.ranking[:3])
    elif s.pbest_fitness is not None:
        idx = list(np.argsort(np.asarray(s.pbest_fitness), kind="stable")[:3])
    else:
        raise StateError("GWO needs Pbest fitness values or a top-3 ranking")
    return s.pbest[idx]


def gwo_step(s: SwarmState, spec: BehaviorSpec, rng: RngStream, b: Bounds, r_total: int) -> SwarmState:
    leaders = gwo_leaders(s)
    a = linear_schedule(spec.gwo_a0, s.iteration, r_total)
    P = s.positions.copy()
    for i in range(s.m):
        u = rng.uniforms((3, s.d, 2))
        A = 2.0 * a * u[:, :, 0] - a
        C = 2.0 * u[:, :, 1]
        X = leaders - A * np.abs(C * leaders - P[i])
        # mean written relative to X[0] so three equal leaders give X[0] bit-exactly
        P[i] = clamp(X[0] + (X[1] - X[0]) / 3.0 + (X[2] - X[0]) / 3.0, b)
    return replace(s, positions=P)


def woa_step(s: SwarmState, spec: BehaviorSpec, rng: RngStream, b: Bounds, r_total: int,
             branches: list | None = None) -> SwarmState:
    """One WOA sweep. ``branches``, if given, collects 'encircle'/'explore'/'spiral' per whale."""
    g = _need_gbest(s)
    a = linear_schedule(2.0, s.iteration, r_total)
    old = s.positions
    P = old.copy()
    for i in range(s.m):
        p = rng.uniform()
        if p < 0.5:
            A = 2.0 * a * rng.uniform() - a
            C = 2.0 * rng.uniform()
            if abs(A) < 1:
                new = g - A * np.abs(C * g - old[i])
                tag = "encircle"
            else:
                x_rand = old[rng.integer(s.m)]
                new = x_rand - A * np.abs(C * x_rand - old[i])
                tag = "explore"
        else:
            l = 2.0 * rng.uniform() - 1.0
            new = np.abs(g - old[i]) * math.exp(spec.woa_b * l) * math.cos(2.0 * math.pi * l) + g
            tag = "spiral"
        P[i] = clamp(new, b)
        if branches is not None:
            branches.append(tag)
    return replace(s, positions=P)


def soa_step(s: SwarmState, spec: BehaviorSpec, rng: RngStream, b: Bounds, r_total: int) -> SwarmState:
    g = _need_gbest(s)
    A = linear_schedule(spec.soa_fc, s.iteration, r_total)
    P = s.positions.copy()
    for i in range(s.m):
        u = rng.uniforms((s.d, 2))
        rd = u[:, 0]
        k = 2.0 * math.pi * u[:, 1]
        cs = A * P[i]
        ms = 2.0 * A * A * rd * (g - P[i])
        ds = np.abs(cs + ms)
        radius = np.exp(k)
        x = radius * np.cos(k)
        y = radius * np.sin(k)
        z = radius * k
        P[i] = clamp(ds * x * y * z + g, b)
    return replace(s, positions=P)


def step(s: SwarmState, spec: BehaviorSpec, rng: RngStream, b: Bounds, r_total: int) -> SwarmState:
    """Dispatch to the update rule named by ``spec.kind``."""
    kind = spec.kind
    if kind == "PSO":
        return pso_step(s, spec, rng, b)
    if kind == "CPSO":
        return cpso_step(s, spec, rng, b)
    if kind == "SPSO":
        return spso_step(s, spec, rng, b)
    if kind == "GWO":
        return gwo_step(s, spec, rng, b, r_total)
    if kind == "WOA":
        return woa_step(s, spec, rng, b, r_total)
    return soa_step(s, spec, rng, b, r_total)


def update_gbest(pbest, fitness: Sequence[float], current=None):
    """Return ``(position, fitness)`` of the new global best.

    The incumbent ``current = (position, fitness)`` survives unless some Pbest
    entry is strictly better. Ties go to the lowest index.
    """
    B = np.asarray(pbest, dtype=float)
    f = np.asarray(fitness, dtype=float).reshape(-1)
    if B.ndim != 2 or B.shape[0] != f.shape[0] or f.shape[0] < 1:
        raise DomainError(f"{B.shape[0] if B.ndim else 0} Pbest rows but {f.shape[0]} fitness values")
    best = int(np.argmin(f))
    if current is None or f[best] < current[1]:
        return B[best].copy(), float(f[best])
    return current[0], current[1]
