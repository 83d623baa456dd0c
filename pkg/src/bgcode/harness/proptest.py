"""Exhaustive-ish property sweep over small systems.

For every configuration in the grid, each adversary strategy is run for
every placement of the malicious workers (all subsets when the system is
tiny, a seeded sample otherwise).  Each run is checked for

* exact recovery of the full gradient,
* no honest worker in the suspect set,
* local computations, rounds, matches and overhead within their bounds,
* under a non-collapsed symmetrization confined to one group: every
  disputed sample computed locally, ``c = floor(s/u)`` when ``u`` divides ``s`` and the group holds
  exactly ``u`` honest workers, and the overhead at least the lower bound,
* with ``s = 0``: no message after round 0.
"""
from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .. import bounds
from ..adversary import AttackSpec
from ..assignment import SystemConfig, group_of, workers_of_group
from ..protocol import run_scheme
from ..workers import TrueGradients
from .runner import gradient_rng

STRATEGIES = (
    ("none", {}),
    ("symmetrization", {"collapse": False}),
    ("symmetrization", {"collapse": True}),
    ("align_and_stall", {}),
    ("align_and_stall", {"forced_local_comps": -1}),
    ("random_corruption", {"corruption_rate": 0.3}),
    ("adaptive_custom", {}),
)


@dataclass(frozen=True)
class GridSpec:
    max_n: int = 12
    max_s: int = 5
    max_u: int = 3
    max_m: int = 3
    q_values: tuple = (1, 2, 3, 5, 8, 16)
    k_values: tuple = (2, 8)
    d_values: tuple = (1, 2)
    seeds: int = 1
    # every subset of malicious workers is tried up to this many workers
    exhaustive_n: int = 6
    sampled_placements: int = 3
    stragglers: bool = True


@dataclass
class Case:
    s: int
    u: int
    m: int
    q: int
    k: int
    d: int
    kind: str
    options: dict
    malicious: tuple
    stragglers: tuple
    seed: int

    def system(self) -> SystemConfig:
        return SystemConfig.from_params(self.s, self.u, self.m, self.q * self.m, self.d, k=self.k, seed=self.seed)

    def attack(self) -> AttackSpec:
        opts = dict(self.options)
        if opts.get("forced_local_comps") == -1:
            opts["forced_local_comps"] = bounds.c_min(self.s, self.u, len(self.stragglers))
        return AttackSpec(self.kind, malicious=self.malicious, stragglers=self.stragglers, seed=self.seed, **opts)


@dataclass
class Report:
    runs: int = 0
    failures: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    elapsed: float = 0.0
    straggler_runs: int = 0

    @property
    def ok(self) -> bool:
        return not self.failures

    def count(self, name: str) -> None:
        self.checks[name] = self.checks.get(name, 0) + 1

    def summary(self) -> str:
        checks = ", ".join(f"{k}={v}" for k, v in sorted(self.checks.items()))
        return (f"{self.runs} runs ({self.straggler_runs} with stragglers), {len(self.failures)} failures, "
                f"{self.elapsed:.1f}s; checks: {checks}")


def _configs(spec: GridSpec):
    for s in range(spec.max_s + 1):
        for u in range(1, spec.max_u + 1):
            for m in range(1, spec.max_m + 1):
                if m * (s + u) <= spec.max_n:
                    yield s, u, m


def _placements(cfg: SystemConfig, spec: GridSpec, rng: np.random.Generator) -> list[tuple]:
    n, s = cfg.n_workers, cfg.n_malicious
    if n <= spec.exhaustive_n:
        return [tuple(c) for c in itertools.combinations(range(1, n + 1), s)]
    picks = {tuple(sorted(int(w) for w in rng.choice(workers_of_group(cfg, 1), size=s, replace=False)))}
    while len(picks) < min(spec.sampled_placements, math.comb(n, s)):
        picks.add(tuple(sorted(int(w) for w in rng.choice(np.arange(1, n + 1), size=s, replace=False))))
    return sorted(picks)


def _straggler_sets(cfg: SystemConfig, malicious: tuple, rng: np.random.Generator) -> list[tuple]:
    """No stragglers, plus up to u-1 silent honest workers next to the first malicious one."""
    out = [()]
    u = cfg.honest_per_group
    if u == 1:
        return out
    g = group_of(cfg, malicious[0]) if malicious else 1
    pool = [w for w in workers_of_group(cfg, g) if w not in malicious]
    for count in range(1, min(u - 1, len(pool)) + 1):
        out.append(tuple(sorted(int(w) for w in rng.choice(pool, size=count, replace=False))))
    return out


def iter_cases(spec: GridSpec, base_seed: int = 0) -> Iterator[Case]:
    rng = np.random.default_rng(base_seed)
    for s, u, m in _configs(spec):
        for q, k, d in itertools.product(spec.q_values, spec.k_values, spec.d_values):
            probe = SystemConfig.from_params(s, u, m, q * m, d, k=k)
            for malicious in _placements(probe, spec, rng):
                straggler_sets = _straggler_sets(probe, malicious, rng) if spec.stragglers else [()]
                for stragglers in straggler_sets:
                    for kind, options in STRATEGIES:
                        if kind == "symmetrization" and s // u > q:
                            continue
                        for t in range(spec.seeds):
                            seed = int(rng.integers(1 << 31))
                            yield Case(s, u, m, q, k, d, kind, options, malicious, stragglers, seed)


def check_case(case: Case, report: Report):
    """Run one case; returns (failure messages, result)."""
    cfg = case.system()
    truth = TrueGradients.random(cfg, gradient_rng(case.seed))
    result = run_scheme(cfg, case.attack(), truth)
    inst = result.instance
    met = result.metrics
    problems = []
    n_strag = len(case.stragglers)

    if not np.array_equal(result.g_hat, inst.truth.full_sum()):
        problems.append("wrong full gradient")
    report.count("exact")
    honest_hit = sorted(result.suspects & (inst.honest - inst.stragglers))
    if honest_hit:
        problems.append(f"honest workers suspected: {honest_hit}")
    report.count("honest_immunity")
    problems += bounds.check_run(cfg, met, n_strag)
    report.count("budgets")

    if case.s == 0 and any(r.round >= 1 for r in result.transcript.records if r.worker is not None):
        problems.append("messages after round 0 without any malicious worker")

    groups = {group_of(cfg, w) for w in case.malicious}
    if case.kind == "symmetrization" and not case.options.get("collapse") and len(groups) == 1:
        # the indistinguishability argument needs the whole adversary in one group
        missing = sorted(inst.disputed_indices - set(result.local_comp_indices))
        if missing:
            problems.append(f"disputed samples never computed locally: {missing}")
        report.count("disagreement_witness")
        full = len(case.malicious) == case.s and not case.stragglers
        if full and case.s >= case.u and case.s % case.u == 0:
            want = case.s // case.u
            if met.local_computations != want:
                problems.append(f"c = {met.local_computations}, expected exactly {want}")
            floor = bounds.kappa_lower(cfg.n_samples, cfg.n_groups, case.s, case.u)
            if met.kappa_bits < floor:
                problems.append(f"overhead {met.kappa_bits} below the lower bound {floor:.3f}")
            report.count("tightness")
    return problems, result


def run_grid(spec: GridSpec = GridSpec(), base_seed: int = 0, dump_dir: Optional[str] = None,
             limit: Optional[int] = None) -> Report:
    report = Report()
    start = time.perf_counter()
    for case in iter_cases(spec, base_seed):
        if limit is not None and report.runs >= limit:
            break
        problems, result = check_case(case, report)
        report.runs += 1
        report.straggler_runs += bool(case.stragglers)
        if problems:
            entry = {"case": asdict(case), "problems": problems}
            if dump_dir is not None:
                entry["transcript"] = _dump(dump_dir, len(report.failures), case, result, problems)
            report.failures.append(entry)
    report.elapsed = time.perf_counter() - start
    return report


def _dump(dump_dir: str, index: int, case: Case, result, problems) -> str:
    out = Path(dump_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = out / f"counterexample_{index:04d}"
    (stem.with_suffix(".json")).write_text(json.dumps({"case": asdict(case), "problems": problems}, indent=2),
                                           encoding="utf-8")
    path = stem.with_suffix(".jsonl")
    result.transcript.write_jsonl(path)
    return str(path)
