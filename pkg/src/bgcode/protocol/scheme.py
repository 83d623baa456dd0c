"""End-to-end scheme: initial responses, per-group tournaments, decoding."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

import numpy as np

from ..assignment import SystemConfig, build_fractional_repetition, replication_factor, workers_of_group
from ..errors import ConfigurationError, ProtocolError
from ..workers import (GradientResponse, InitialSum, TrueGradients, WorkerBehavior, initial_responses, is_well_formed,
                       response_bits)
from .tournament import Tournament, form_groups, run_tournament
from .transcript import Transcript

SEED_MASK = (1 << 64) - 1


@dataclass
class Metrics:
    rounds: int
    local_computations: int
    replication: Fraction
    kappa_bits: int
    downlink_bits: int
    matches: int
    initial_bits: int
    max_group_rounds: int

    @property
    def total_bits(self) -> int:
        return self.initial_bits + self.kappa_bits


@dataclass
class RunResult:
    g_hat: np.ndarray
    metrics: Metrics
    transcript: Transcript
    tournaments: list
    suspects: set = field(default_factory=set)
    instance: Optional[object] = None

    @property
    def local_comp_indices(self) -> list[int]:
        return list(self.transcript.local_comp_indices)


def group_rng(seed: int, group_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & SEED_MASK, group_id]))


def decode(tournaments, cfg: SystemConfig) -> np.ndarray:
    """Sum the surviving class's initial response over all groups."""
    total = cfg.alphabet.zero(cfg.dim)
    for t in tournaments:
        total = cfg.alphabet.add(total, t.result())
    return total


def run_protocol(cfg: SystemConfig, truth: TrueGradients, behaviors: Mapping[int, WorkerBehavior],
                 seed: Optional[int] = None, straggler_tolerance: int = 0) -> RunResult:
    """Run the whole scheme for already-built worker behaviors.

    ``straggler_tolerance`` is the number of silent workers per group the
    main node is designed to cope with (it must be below ``u``).
    """
    seed = cfg.rng_seed if seed is None else seed
    transcript = Transcript()
    initial = initial_responses(cfg, behaviors)
    for j in range(1, cfg.n_workers + 1):
        resp = initial[j]
        payload = {"value": resp.value} if isinstance(resp, GradientResponse) else {"value": None}
        transcript.log(0, _group(cfg, j), j, "initial", payload,
                       response_bits(resp, cfg.alphabet, cfg.dim) if isinstance(resp, GradientResponse) else 0)

    tournaments = []
    exposed = 0
    # groups are processed one after the other; every worker a group
    # eliminates is provably malicious, which shrinks the budget for the rest
    for g in range(1, cfg.n_groups + 1):
        t = Tournament(cfg, g, truth, behaviors, transcript, group_rng(seed, g),
                       straggler_tolerance=straggler_tolerance,
                       malicious_budget=max(0, cfg.n_malicious - exposed))
        form_groups(t, {j: initial[j] for j in workers_of_group(cfg, g)})
        run_tournament(t)
        exposed += len(t.suspects)
        tournaments.append(t)

    g_hat = decode(tournaments, cfg)
    metrics = Metrics(
        rounds=transcript.rounds_used,
        local_computations=transcript.local_computations,
        replication=replication_factor(build_fractional_repetition(cfg)),
        kappa_bits=transcript.kappa_bits,
        downlink_bits=transcript.downlink_bits,
        matches=sum(t.matches for t in tournaments),
        initial_bits=transcript.initial_bits,
        max_group_rounds=max((t.rounds for t in tournaments), default=0),
    )
    suspects = set().union(*(t.suspects for t in tournaments))
    return RunResult(g_hat, metrics, transcript, tournaments, suspects)


def _group(cfg: SystemConfig, worker: int) -> int:
    return (worker - 1) // cfg.group_size + 1


def run_scheme(cfg: SystemConfig, attack, truth: TrueGradients) -> RunResult:
    """Build the adversary for ``attack`` and run the scheme against it.

    The result's ``instance`` carries the truth actually used (the twin
    symmetrization world moves it) and the malicious set.
    """
    from ..adversary import build_behaviors

    instance = build_behaviors(cfg, truth, attack)
    result = run_protocol(cfg, instance.truth, instance.behaviors, seed=attack.seed,
                          straggler_tolerance=len(_worst_group_stragglers(cfg, instance.stragglers)))
    result.instance = instance
    return result


def _worst_group_stragglers(cfg: SystemConfig, stragglers) -> list[int]:
    per_group: dict[int, list[int]] = {}
    for w in stragglers:
        per_group.setdefault(_group(cfg, w), []).append(w)
    return max(per_group.values(), key=len, default=[])


@dataclass
class DracoResult:
    g_hat: np.ndarray
    total_bits: int


def draco_baseline(cfg: SystemConfig, attack, truth: TrueGradients) -> DracoResult:
    """Replication-(2s+1) baseline: per-group majority over the initial responses."""
    from ..adversary import build_behaviors

    if cfg.honest_per_group != cfg.n_malicious + 1:
        raise ConfigurationError(
            f"the majority baseline needs groups of 2s+1 workers (u = s+1), got u={cfg.honest_per_group}")
    instance = build_behaviors(cfg, truth, attack)
    initial = initial_responses(cfg, instance.behaviors)
    total = cfg.alphabet.zero(cfg.dim)
    bits = 0
    for g in range(1, cfg.n_groups + 1):
        votes: Counter = Counter()
        values = {}
        for j in workers_of_group(cfg, g):
            resp = initial[j]
            bits += response_bits(resp, cfg.alphabet, cfg.dim)
            if is_well_formed(InitialSum(), resp, cfg.alphabet, cfg.dim):
                key = np.asarray(resp.value, dtype=np.int64).tobytes()
                votes[key] += 1
                values[key] = resp.value
        if not votes:
            raise ProtocolError(f"group {g}: no responses to vote on")
        key, _ = votes.most_common(1)[0]
        total = cfg.alphabet.add(total, values[key])
    return DracoResult(total, bits)
