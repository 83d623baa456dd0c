"""Worker-side response semantics.

Every worker answers three kinds of requests: the initial gradient-code
sum, a single-coordinate partial sum over a sample range, and a one-bit
vote on a proposed partial-sum symbol.  Table-driven workers (honest ones
and the consistent adversaries) answer from a :class:`ClaimTable`;
adaptive workers answer through a callback that sees the public view of
the protocol.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Union

import numpy as np

from .alphabet import Alphabet, PrefixSums
from .assignment import SystemConfig, group_of, samples_of_group
from .errors import ConfigurationError, ProtocolError


class TrueGradients:
    """The partial gradients ``g_1..g_p`` with per-group prefix sums."""

    def __init__(self, cfg: SystemConfig, values: np.ndarray):
        values = np.asarray(values, dtype=np.int64)
        if values.shape != (cfg.n_samples, cfg.dim):
            raise ConfigurationError(f"expected gradients of shape {(cfg.n_samples, cfg.dim)}, got {values.shape}")
        cfg.alphabet.vector(values.ravel())
        values.setflags(write=False)
        self.cfg = cfg
        self.alphabet = cfg.alphabet
        self.values = values
        self._prefix = {}
        for g in range(1, cfg.n_groups + 1):
            lo, hi = samples_of_group(cfg, g)
            self._prefix[g] = PrefixSums(values[lo - 1:hi], cfg.alphabet, first=lo)

    @classmethod
    def random(cls, cfg: SystemConfig, rng: np.random.Generator) -> "TrueGradients":
        vals = rng.integers(0, cfg.alphabet.size, size=(cfg.n_samples, cfg.dim), dtype=np.int64)
        return cls(cfg, vals)

    def gradient(self, i: int) -> np.ndarray:
        return self.values[i - 1]

    def prefix(self, group_id: int) -> PrefixSums:
        return self._prefix[group_id]

    def full_sum(self) -> np.ndarray:
        return self.values.sum(axis=0) & self.alphabet.mask


class ClaimTable:
    """Claimed partial gradients of one worker over its group's samples.

    Stored as the true gradients plus a sparse set of overridden indices,
    so that range sums stay O(log #overrides).
    """

    def __init__(self, truth: TrueGradients, group_id: int, overrides: Optional[Mapping[int, np.ndarray]] = None):
        self.truth = truth
        self.group_id = group_id
        self.lo, self.hi = samples_of_group(truth.cfg, group_id)
        alphabet = truth.alphabet
        overrides = dict(overrides or {})
        for i, vec in overrides.items():
            if not self.lo <= i <= self.hi:
                raise ConfigurationError(f"override index {i} outside group samples [{self.lo}, {self.hi}]")
            overrides[i] = alphabet.vector(vec)
        self.overrides = {i: v for i, v in overrides.items() if not np.array_equal(v, truth.gradient(i))}
        self._idx = sorted(self.overrides)
        cum = np.zeros((len(self._idx) + 1, truth.cfg.dim), dtype=np.int64)
        for t, i in enumerate(self._idx):
            cum[t + 1] = (cum[t] + alphabet.sub(self.overrides[i], truth.gradient(i))) & alphabet.mask
        self._cum = cum

    @property
    def is_truthful(self) -> bool:
        return not self.overrides

    def claim(self, i: int) -> np.ndarray:
        if not self.lo <= i <= self.hi:
            raise ConfigurationError(f"sample {i} not held by group {self.group_id}")
        return self.overrides.get(i, self.truth.gradient(i))

    def _delta_slice(self, lo: int, hi: int) -> tuple[int, int]:
        return bisect.bisect_left(self._idx, lo), bisect.bisect_right(self._idx, hi)

    def range_sum(self, lo: int, hi: int) -> np.ndarray:
        base = self.truth.prefix(self.group_id).range_sum(lo, hi)
        a, b = self._delta_slice(lo, hi)
        if a == b:
            return base
        return (base + self._cum[b] - self._cum[a]) & self.truth.alphabet.mask

    def range_sum_coord(self, lo: int, hi: int, coord: int) -> int:
        base = self.truth.prefix(self.group_id).range_sum_coord(lo, hi, coord)
        a, b = self._delta_slice(lo, hi)
        if a == b:
            return base
        return int(base + self._cum[b, coord - 1] - self._cum[a, coord - 1]) & self.truth.alphabet.mask

    def total(self) -> np.ndarray:
        return self.range_sum(self.lo, self.hi)


# -- requests ---------------------------------------------------------------

@dataclass(frozen=True)
class InitialSum:
    kind = "initial"


@dataclass(frozen=True)
class PartialSum:
    lo: int
    hi: int
    coord: int
    kind = "partial_sum"


@dataclass(frozen=True)
class Vote:
    proposed: int
    lo: int
    hi: int
    coord: int
    kind = "vote"


EncodingRequest = Union[InitialSum, PartialSum, Vote]


# -- responses --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GradientResponse:
    value: np.ndarray

    def __eq__(self, other):
        return isinstance(other, GradientResponse) and np.array_equal(self.value, other.value)


@dataclass(frozen=True)
class SymbolResponse:
    value: int


@dataclass(frozen=True)
class BitResponse:
    commit: bool


class _Silent:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "Silent"


Silent = _Silent()
WorkerResponse = Union[GradientResponse, SymbolResponse, BitResponse, _Silent]


def response_bits(response, alphabet: Alphabet, dim: int) -> int:
    """Uplink cost of a response in bits."""
    if isinstance(response, GradientResponse):
        return dim * alphabet.size_log2
    if isinstance(response, SymbolResponse):
        return alphabet.size_log2
    if isinstance(response, BitResponse):
        return 1
    return 0


def is_well_formed(request: EncodingRequest, response, alphabet: Alphabet, dim: int) -> bool:
    """Whether ``response`` has the shape the request asks for."""
    if isinstance(request, InitialSum):
        if not isinstance(response, GradientResponse):
            return False
        v = np.asarray(response.value)
        return (v.shape == (dim,) and np.issubdtype(v.dtype, np.integer)
                and (v.size == 0 or (v.min() >= 0 and v.max() <= alphabet.mask)))
    if isinstance(request, PartialSum):
        return isinstance(response, SymbolResponse) and alphabet.contains(response.value)
    if isinstance(request, Vote):
        return isinstance(response, BitResponse) and isinstance(response.commit, (bool, np.bool_))
    return False


# -- behaviors --------------------------------------------------------------

class TableBehavior:
    """Answers every request consistently from a claim table."""

    def __init__(self, table: ClaimTable):
        self.table = table

    def answer(self, worker_id: int, request: EncodingRequest, view=None) -> WorkerResponse:
        return answer_from_table(self.table, request)


class SilentBehavior:
    """A straggler: never answers."""

    def answer(self, worker_id, request, view=None):
        return Silent


class AdaptiveBehavior:
    """Delegates to ``callback(worker_id, request, view)``.

    The callback may return ``None`` to fall back to the claim table, so
    strategies only need to override the requests they care about.
    """

    def __init__(self, callback: Callable, table: Optional[ClaimTable] = None):
        self.callback = callback
        self.table = table

    def answer(self, worker_id, request, view=None):
        response = self.callback(worker_id, request, view)
        if response is None:
            if self.table is None:
                return Silent
            return answer_from_table(self.table, request)
        return response


WorkerBehavior = Union[TableBehavior, SilentBehavior, AdaptiveBehavior]


def _check_request(table: ClaimTable, request: EncodingRequest):
    if isinstance(request, InitialSum):
        return
    if not isinstance(request, (PartialSum, Vote)):
        raise ProtocolError(f"unknown request {request!r}")
    if not (table.lo <= request.lo <= request.hi <= table.hi):
        raise ProtocolError(f"range [{request.lo}, {request.hi}] outside group samples [{table.lo}, {table.hi}]")
    if not 1 <= request.coord <= table.truth.cfg.dim:
        raise ProtocolError(f"coordinate {request.coord} outside [1, {table.truth.cfg.dim}]")


def answer_from_table(table: ClaimTable, request: EncodingRequest) -> WorkerResponse:
    _check_request(table, request)
    if isinstance(request, InitialSum):
        return GradientResponse(table.total())
    own = table.range_sum_coord(request.lo, request.hi, request.coord)
    if isinstance(request, PartialSum):
        return SymbolResponse(own)
    return BitResponse(own == request.proposed)


def respond(worker_id: int, request: EncodingRequest, behavior: WorkerBehavior, view=None) -> WorkerResponse:
    return behavior.answer(worker_id, request, view)


def honest_behaviors(cfg: SystemConfig, truth: TrueGradients) -> dict[int, WorkerBehavior]:
    return {j: TableBehavior(ClaimTable(truth, group_of(cfg, j))) for j in range(1, cfg.n_workers + 1)}


def initial_responses(cfg: SystemConfig, behaviors: Mapping[int, WorkerBehavior], view=None) -> dict[int, WorkerResponse]:
    """Round-0 responses of all workers, keyed by worker id."""
    if set(behaviors) != set(range(1, cfg.n_workers + 1)):
        raise ConfigurationError("need exactly one behavior per worker")
    request = InitialSum()
    return {j: respond(j, request, behaviors[j], view) for j in range(1, cfg.n_workers + 1)}
