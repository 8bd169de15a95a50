"""Shared types, search-box bounds and seeded random streams.

Every stochastic operation in the package draws from an :class:`RngStream`.
Streams are keyed by ``(seed, label)`` so a private run and its non-private
twin can consume the very same ``"dynamics"`` draws while DP selections come
from a separate ``"mechanism"`` stream.

The generator is numpy's PCG64 seeded through ``SeedSequence(seed,
spawn_key=(label_code,))``. PCG64 is a published, portable generator with
reference output, so the draw sequence can be reproduced outside Python.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "ConfigurationError",
    "StateError",
    "Bounds",
    "RngStream",
    "STREAM_LABELS",
    "fork_stream",
    "as_position",
    "clamp",
]


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class ConfigurationError(ValueError):
    """Invalid configuration value or combination."""


class StateError(RuntimeError):
    """Swarm or protocol state is missing something an operation needs."""


# The integer codes are part of the reproducibility contract; never renumber.
STREAM_LABELS = {"dynamics": 0, "mechanism": 1, "data": 2}

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class Bounds:
    """Symmetric search box ``[-w_max, w_max]`` applied to every coordinate."""

    w_max: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.w_max) and self.w_max > 0):
            raise ConfigurationError(f"w_max must be positive and finite, got {self.w_max}")

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(np.abs(p) <= self.w_max))


class RngStream:
    """Sequential random cursor identified by ``(seed, label)``.

    ``position`` counts primitive draws (one per uniform, normal or integer
    sample) so callers can audit exactly how much of a stream an operation
    consumed. Not safe to share between threads.
    """

    def __init__(self, seed: int, label: str):
        if label not in STREAM_LABELS:
            raise ConfigurationError(
                f"unregistered stream label {label!r}; expected one of {sorted(STREAM_LABELS)}"
            )
        self.seed = int(seed) & _SEED_MASK
        self.label = label
        ss = np.random.SeedSequence(self.seed, spawn_key=(STREAM_LABELS[label],))
        self._gen = np.random.Generator(np.random.PCG64(ss))
        self.position = 0

    def __repr__(self):
        return f"RngStream(seed={self.seed}, label={self.label!r}, position={self.position})"

    def uniform(self) -> float:
        """One draw from [0, 1)."""
        self.position += 1
        return float(self._gen.random())

    def uniforms(self, size) -> np.ndarray:
        """Array of draws from [0, 1); same values as repeated :meth:`uniform` calls."""
        out = self._gen.random(size)
        self.position += out.size
        return out

    def integer(self, high: int) -> int:
        """One integer uniform on ``0 .. high-1``."""
        self.position += 1
        return int(self._gen.integers(high))

    def normals(self, size, sd: float = 1.0) -> np.ndarray:
        out = self._gen.normal(0.0, sd, size)
        self.position += np.size(out)
        return out

    def permutation(self, n: int) -> np.ndarray:
        self.position += 1
        return self._gen.permutation(n)

    def state(self) -> dict:
        """Underlying bit-generator state, for exact cursor comparisons."""
        return self._gen.bit_generator.state


def fork_stream(seed: int, label: str) -> RngStream:
    """Return a fresh stream whose draws are a pure function of ``(seed, label)``."""
    return RngStream(seed, label)


def as_position(coords) -> np.ndarray:
    """Coerce to a 1-D float vector, rejecting non-finite coordinates."""
    p = np.array(coords, dtype=float).reshape(-1)
    bad = np.flatnonzero(~np.isfinite(p))
    if bad.size:
        raise DomainError(f"non-finite coordinate at index {int(bad[0])}: {p[bad[0]]}")
    return p


def clamp(p, b: Bounds) -> np.ndarray:
    """Project ``p`` onto the box of ``b``; returns a new array."""
    p = as_position(p)
    return np.minimum(np.maximum(p, -b.w_max), b.w_max)
