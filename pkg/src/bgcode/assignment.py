"""System configuration and the fractional-repetition data assignment.

Workers, samples and groups are 1-indexed throughout the library.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .alphabet import Alphabet
from .errors import ConfigurationError


@dataclass(frozen=True)
class SystemConfig:
    n_workers: int
    n_malicious: int
    honest_per_group: int
    n_groups: int
    n_samples: int
    dim: int
    alphabet: Alphabet = field(default_factory=lambda: Alphabet(16))
    rng_seed: int = 0

    def __post_init__(self):
        n, s, u, m, p, d = (self.n_workers, self.n_malicious, self.honest_per_group,
                            self.n_groups, self.n_samples, self.dim)
        for name, value in (("n", n), ("s", s), ("u", u), ("m", m), ("p", p), ("d", d)):
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise ConfigurationError(f"{name} must be an integer, got {value!r}")
        if s < 0:
            raise ConfigurationError(f"s must be >= 0, got {s}")
        if u < 1 or m < 1 or d < 1:
            raise ConfigurationError(f"need u >= 1, m >= 1, d >= 1 (got u={u}, m={m}, d={d})")
        if n != m * (s + u):
            raise ConfigurationError(f"n = {n} must equal m(s+u) = {m * (s + u)}")
        if p < m or p % m:
            raise ConfigurationError(f"m = {m} must divide p = {p}")
        if not isinstance(self.alphabet, Alphabet):
            raise ConfigurationError("alphabet must be an Alphabet instance")

    @classmethod
    def from_params(cls, s, u, m, p, d, k=16, seed=0):
        return cls(m * (s + u), s, u, m, p, d, Alphabet(k), seed)

    @property
    def group_size(self) -> int:
        return self.n_workers // self.n_groups

    @property
    def samples_per_group(self) -> int:
        return self.n_samples // self.n_groups


@dataclass(frozen=True, eq=False)
class AssignmentMatrix:
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.int8)
        if entries.ndim != 2 or not np.isin(entries, (0, 1)).all():
            raise ConfigurationError("assignment matrix must be a 2-D 0/1 array")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def shape(self):
        return self.entries.shape

    def workers_of_sample(self, i: int) -> list[int]:
        return [j + 1 for j in np.flatnonzero(self.entries[i - 1])]

    def samples_of_worker(self, j: int) -> list[int]:
        return [i + 1 for i in np.flatnonzero(self.entries[:, j - 1])]


def group_of(cfg: SystemConfig, worker_id: int) -> int:
    if not 1 <= worker_id <= cfg.n_workers:
        raise ConfigurationError(f"worker {worker_id} outside [1, {cfg.n_workers}]")
    return (worker_id - 1) // cfg.group_size + 1


def samples_of_group(cfg: SystemConfig, group_id: int) -> tuple[int, int]:
    """Closed 1-based sample interval held by group ``group_id``."""
    if not 1 <= group_id <= cfg.n_groups:
        raise ConfigurationError(f"group {group_id} outside [1, {cfg.n_groups}]")
    q = cfg.samples_per_group
    return (group_id - 1) * q + 1, group_id * q


def workers_of_group(cfg: SystemConfig, group_id: int) -> list[int]:
    if not 1 <= group_id <= cfg.n_groups:
        raise ConfigurationError(f"group {group_id} outside [1, {cfg.n_groups}]")
    size = cfg.group_size
    return list(range((group_id - 1) * size + 1, group_id * size + 1))


def build_fractional_repetition(cfg: SystemConfig) -> AssignmentMatrix:
    q, size = cfg.samples_per_group, cfg.group_size
    entries = np.zeros((cfg.n_samples, cfg.n_workers), dtype=np.int8)
    for g in range(cfg.n_groups):
        entries[g * q:(g + 1) * q, g * size:(g + 1) * size] = 1
    return AssignmentMatrix(entries)


def replication_factor(assignment: AssignmentMatrix) -> Fraction:
    p = assignment.shape[0]
    return Fraction(int(assignment.entries.sum()), p)
