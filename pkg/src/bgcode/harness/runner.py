"""Single experiment runs and their CSV rows."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from ..bounds import check_run
from ..protocol import RunResult, run_scheme
from ..workers import TrueGradients
from .config import RunConfig

CSV_HEADER = ("n", "s", "u", "m", "p", "d", "k", "attack", "seed", "c", "r", "kappa_bits", "downlink_bits",
              "matches", "total_bits", "correct")


def gradient_rng(seed: int) -> np.random.Generator:
    # kept apart from the adversary's and the main node's streams
    return np.random.default_rng(np.random.SeedSequence([seed & ((1 << 64) - 1), 0x6AD]))


@dataclass
class RunOutcome:
    row: dict
    result: RunResult
    problems: list

    @property
    def correct(self) -> bool:
        return bool(self.row["correct"])

    @property
    def ok(self) -> bool:
        return self.correct and not self.problems


def run_once(config: RunConfig, seed: int) -> RunOutcome:
    cfg = config.system(seed)
    attack = config.attack_spec(seed)
    truth = TrueGradients.random(cfg, gradient_rng(seed))
    result = run_scheme(cfg, attack, truth)
    inst = result.instance
    correct = np.array_equal(result.g_hat, inst.truth.full_sum())
    stragglers = result.tournaments[0].straggler_tolerance if result.tournaments else 0
    problems = check_run(cfg, result.metrics, stragglers)
    honest_hit = sorted(result.suspects & (inst.honest - inst.stragglers))
    if honest_hit:
        problems.append(f"honest workers suspected: {honest_hit}")
    met = result.metrics
    row = {
        "n": cfg.n_workers, "s": cfg.n_malicious, "u": cfg.honest_per_group, "m": cfg.n_groups,
        "p": cfg.n_samples, "d": cfg.dim, "k": cfg.alphabet.size_log2, "attack": attack.kind, "seed": seed,
        "c": met.local_computations, "r": met.rounds, "kappa_bits": met.kappa_bits,
        "downlink_bits": met.downlink_bits, "matches": met.matches, "total_bits": met.total_bits,
        "correct": int(correct),
    }
    return RunOutcome(row, result, problems)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
