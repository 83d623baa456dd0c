"""Adversary strategies for the s controlled workers.

Four built-in strategies plus a user callback:

* ``symmetrization``: malicious workers split into subgroups of ``u`` that
  each corrupt one distinct sample, so the main node cannot tell which
  side is right without computing every disputed sample itself.
* ``align_and_stall``: all malicious workers share one corrupted table and,
  during final votes, refuse to back their own representative, so each
  match eliminates as few workers as possible.
* ``random_corruption``: every claim is corrupted independently (fuzzing).
* ``adaptive_custom``: responses come from a callback that sees the
  running tournament.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .assignment import SystemConfig, group_of, samples_of_group, workers_of_group
from .errors import ConfigurationError
from .workers import (AdaptiveBehavior, BitResponse, ClaimTable, GradientResponse, InitialSum, PartialSum,
                      Silent, SilentBehavior, SymbolResponse, TableBehavior, TrueGradients, Vote)

ATTACK_KINDS = ("none", "symmetrization", "align_and_stall", "random_corruption", "adaptive_custom")


@dataclass(frozen=True)
class AttackSpec:
    """What the adversary controls and how it behaves.

    ``malicious=None`` places ``s`` malicious workers in group 1, drawn with
    the attack's seed; ``stragglers=None`` likewise draws ``n_stragglers``
    honest workers of group 1 to stay silent.
    """
    kind: str = "none"
    malicious: Optional[tuple[int, ...]] = None
    stragglers: Optional[tuple[int, ...]] = None
    seed: int = 0
    n_stragglers: int = 0
    # symmetrization: None draws the all-agree variant with probability 1/2
    collapse: Optional[bool] = None
    # symmetrization: 1 keeps the honest workers honest, 2 realizes the twin world
    case: int = 1
    corruption_rate: float = 0.5
    forced_local_comps: int = 0
    callback: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ConfigurationError(f"unknown attack {self.kind!r}; expected one of {', '.join(ATTACK_KINDS)}")
        if self.case not in (1, 2):
            raise ConfigurationError(f"case must be 1 or 2, got {self.case}")
        if not 0.0 <= self.corruption_rate <= 1.0:
            raise ConfigurationError(f"corruption rate must lie in [0, 1], got {self.corruption_rate}")
        if self.n_stragglers < 0 or self.forced_local_comps < 0:
            raise ConfigurationError("straggler and forced local computation counts must be >= 0")
        for name in ("malicious", "stragglers"):
            ids = getattr(self, name)
            if ids is not None:
                object.__setattr__(self, name, tuple(sorted(int(w) for w in ids)))


@dataclass
class SymmetrizationPlan:
    group_id: int
    corrupted_indices: tuple[int, ...] = ()
    subgroups: tuple[tuple[int, ...], ...] = ()
    remainder: tuple[int, ...] = ()
    # index into ``subgroups`` copied by the remainder, or None for "like the honest workers"
    remainder_mimics: Optional[int] = None
    corrupted_values: dict = field(default_factory=dict)
    collapse: Optional[int] = None

    @property
    def empty(self) -> bool:
        return not self.corrupted_indices and self.collapse is None


@dataclass
class AttackInstance:
    """Everything a run needs from the adversary side."""
    spec: AttackSpec
    truth: TrueGradients
    behaviors: dict
    malicious: frozenset
    stragglers: frozenset
    plans: dict = field(default_factory=dict)

    @property
    def disputed_indices(self) -> set[int]:
        """The samples the workers disagree on under a non-collapsed symmetrization."""
        return {i for plan in self.plans.values() if plan.collapse is None for i in plan.corrupted_indices}

    @property
    def honest(self) -> frozenset:
        return frozenset(self.behaviors) - self.malicious


def adversary_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & ((1 << 64) - 1), 0xAD5]))


def nonzero_deltas(alphabet, dim: int, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    """``count`` nonzero error vectors, pairwise distinct whenever the alphabet allows it."""
    room = alphabet.size ** dim - 1 if dim * alphabet.size_log2 < 62 else None
    out, seen = [], set()
    while len(out) < count:
        delta = rng.integers(0, alphabet.size, size=dim, dtype=np.int64)
        if not delta.any():
            continue
        key = delta.tobytes()
        if key in seen and (room is None or len(seen) < room):
            continue
        seen.add(key)
        out.append(delta)
    return out


def default_placement(cfg: SystemConfig, spec: AttackSpec, rng: np.random.Generator):
    """Malicious workers and stragglers, both defaulting to group 1."""
    first = workers_of_group(cfg, 1)
    if spec.malicious is None:
        malicious = sorted(int(w) for w in rng.choice(first, size=cfg.n_malicious, replace=False))
    else:
        malicious = list(spec.malicious)
    if spec.stragglers is None:
        pool = [w for w in first if w not in set(malicious)]
        if spec.n_stragglers > len(pool):
            raise ConfigurationError(f"cannot place {spec.n_stragglers} stragglers among {len(pool)} honest workers")
        stragglers = sorted(int(w) for w in rng.choice(pool, size=spec.n_stragglers, replace=False))
    else:
        stragglers = list(spec.stragglers)
    return malicious, stragglers


def _validate_placement(cfg: SystemConfig, malicious, stragglers) -> None:
    every = set(range(1, cfg.n_workers + 1))
    if len(set(malicious)) != len(malicious) or len(set(stragglers)) != len(stragglers):
        raise ConfigurationError("worker ids must not repeat")
    if not set(malicious) <= every or not set(stragglers) <= every:
        raise ConfigurationError(f"worker ids must lie in [1, {cfg.n_workers}]")
    if len(malicious) > cfg.n_malicious:
        raise ConfigurationError(f"{len(malicious)} malicious workers exceed s = {cfg.n_malicious}")
    if set(malicious) & set(stragglers):
        raise ConfigurationError("malicious and straggler sets must be disjoint")
    for g in range(1, cfg.n_groups + 1):
        silent = sum(1 for w in stragglers if group_of(cfg, w) == g)
        if silent >= cfg.honest_per_group:
            raise ConfigurationError(f"group {g} has {silent} stragglers; at most u-1 = {cfg.honest_per_group - 1} are tolerated")


def _by_group(cfg: SystemConfig, workers) -> dict[int, list[int]]:
    out: dict[int, list[int]] = {}
    for w in sorted(workers):
        out.setdefault(group_of(cfg, w), []).append(w)
    return out


def _corrupt(truth: TrueGradients, index: int, delta: np.ndarray) -> np.ndarray:
    return (truth.gradient(index) + delta) & truth.alphabet.mask


# -- symmetrization ---------------------------------------------------------

def plan_symmetrization(cfg: SystemConfig, truth: TrueGradients, malicious: Sequence[int],
                        rng: np.random.Generator, collapse: Optional[bool] = None):
    """Claim tables for the malicious workers of one group.

    Returns ``(plan, overrides)`` where ``overrides`` maps each malicious
    worker to its corrupted claims.  With ``u > s`` (no full subgroup) the
    plan is empty and everybody reports the truth.
    """
    malicious = sorted(malicious)
    u = cfg.honest_per_group
    if not malicious:
        raise ConfigurationError("symmetrization needs at least one malicious worker")
    groups = {group_of(cfg, w) for w in malicious}
    if len(groups) != 1:
        raise ConfigurationError("symmetrization plans one group at a time")
    g = groups.pop()
    n_sets = len(malicious) // u
    if n_sets == 0:
        return SymmetrizationPlan(g), {w: {} for w in malicious}

    lo, hi = samples_of_group(cfg, g)
    if n_sets > hi - lo + 1:
        raise ConfigurationError(f"need {n_sets} distinct samples but the group holds {hi - lo + 1}")
    order = [int(w) for w in rng.permutation(malicious)]
    subgroups = tuple(tuple(sorted(order[t * u:(t + 1) * u])) for t in range(n_sets))
    remainder = tuple(sorted(order[n_sets * u:]))
    indices = tuple(int(i) for i in rng.choice(np.arange(lo, hi + 1), size=n_sets, replace=False))
    deltas = nonzero_deltas(cfg.alphabet, cfg.dim, n_sets, rng)
    values = {i: _corrupt(truth, i, dl) for i, dl in zip(indices, deltas)}
    do_collapse = bool(rng.integers(2)) if collapse is None else bool(collapse)
    mimic_coin = int(rng.integers(n_sets + 1)) if remainder else 0

    if do_collapse:
        pick = indices[int(rng.integers(n_sets))]
        plan = SymmetrizationPlan(g, indices, subgroups, remainder, None, values, collapse=pick)
        return plan, {w: {pick: values[pick]} for w in malicious}

    # mimic_coin == n_sets means the remainder behaves like the honest workers
    mimics = None if mimic_coin == n_sets else mimic_coin
    overrides = {w: {} for w in malicious}
    for t, members in enumerate(subgroups):
        for w in members:
            overrides[w] = {indices[t]: values[indices[t]]}
    for w in remainder:
        overrides[w] = {} if mimics is None else {indices[mimics]: values[indices[mimics]]}
    return SymmetrizationPlan(g, indices, subgroups, remainder, mimics, values), overrides


def twin_world(cfg: SystemConfig, truth: TrueGradients, plan: SymmetrizationPlan, claims: Mapping[int, dict]):
    """Rebuild a symmetrization instance in the world where the first subgroup is right.

    Every worker keeps exactly the same claimed values; only the truth at
    the first corrupted sample moves to the subgroup's value.  The workers
    that now disagree with the truth form the new malicious set, which has
    size ``s`` whenever the group held exactly ``u`` honest workers.
    Returns ``(truth2, claims2, malicious2)``.
    """
    if plan.collapse is not None or not plan.subgroups:
        raise ConfigurationError("the twin world needs a non-collapsed plan with at least one subgroup")
    pivot = plan.corrupted_indices[0]
    values = truth.values.copy()
    values[pivot - 1] = plan.corrupted_values[pivot]
    truth2 = TrueGradients(cfg, values)
    old = truth.gradient(pivot)
    claims2, liars = {}, []
    for w in workers_of_group(cfg, plan.group_id):
        absolute = dict(claims.get(w, {}))
        absolute.setdefault(pivot, old)
        kept = {i: v for i, v in absolute.items() if not np.array_equal(v, truth2.gradient(i))}
        claims2[w] = kept
        if kept:
            liars.append(w)
    return truth2, claims2, sorted(liars)


# -- align and stall --------------------------------------------------------

def plan_align_and_stall(cfg: SystemConfig, truth: TrueGradients, malicious: Sequence[int],
                         rng: np.random.Generator, forced_local_comps: int = 0) -> dict:
    """Adaptive behaviors for malicious workers that all share one lie.

    In final voting rounds every malicious worker other than the matched
    one votes against it, so a match removes only the representative.  With
    ``forced_local_comps > 0`` the workers instead back their representative
    with ``u`` votes once few enough of them are left, which forces that many
    local computations at the end of the tournament.
    """
    behaviors = {}
    for g, members in _by_group(cfg, malicious).items():
        lo, hi = samples_of_group(cfg, g)
        index = int(rng.integers(lo, hi + 1))
        delta = nonzero_deltas(cfg.alphabet, cfg.dim, 1, rng)[0]
        table = ClaimTable(truth, g, {index: _corrupt(truth, index, delta)})
        callback = _stall_callback(frozenset(members), forced_local_comps)
        for w in members:
            behaviors[w] = AdaptiveBehavior(callback, table)
    return behaviors


def _stall_callback(members: frozenset, forced: int):
    def callback(worker, request, view):
        match = getattr(view, "current_match", None)
        if not isinstance(request, Vote) or match is None or match.phase != "final":
            return None
        if match.challenger in members:
            rep = match.challenger
        elif match.voter in members:
            rep = match.voter
        else:
            return None
        u = view.threshold
        alive = [w for w in view.survivors if w in members]
        remaining = forced - view.local_comps
        support = False
        if remaining > 0 and len(alive) <= remaining * u:
            backers = [rep] + [w for w in alive if w != rep][:u - 1]
            support = worker in backers
        # backing the representative means committing to the challenger's claim
        # when it is the challenger, and rejecting it when it is the voter
        return BitResponse(support == (rep == match.challenger))
    return callback


# -- random corruption ------------------------------------------------------

def plan_random(cfg: SystemConfig, truth: TrueGradients, malicious: Sequence[int],
                rng: np.random.Generator, corruption_rate: float) -> dict[int, dict]:
    """Independent per-sample corruption with probability ``corruption_rate``."""
    if not 0.0 <= corruption_rate <= 1.0:
        raise ConfigurationError(f"corruption rate must lie in [0, 1], got {corruption_rate}")
    overrides = {}
    for w in sorted(malicious):
        lo, hi = samples_of_group(cfg, group_of(cfg, w))
        hit = [i for i in range(lo, hi + 1) if rng.random() < corruption_rate]
        deltas = nonzero_deltas(cfg.alphabet, cfg.dim, len(hit), rng)
        overrides[w] = {i: _corrupt(truth, i, dl) for i, dl in zip(hit, deltas)}
    return overrides


# -- arbitrary adaptive responses --------------------------------------------

def make_chaotic(cfg: SystemConfig, rng: np.random.Generator, garbage_rate: float = 0.1):
    """A callback answering with random but mostly well-typed responses.

    With probability ``garbage_rate`` the response is silence or of the
    wrong kind; otherwise it is a uniformly random value of the requested
    kind.  Used to fuzz the main node against adversaries that ignore any
    claim table.
    """
    alphabet, dim = cfg.alphabet, cfg.dim

    def callback(worker, request, view):
        roll = rng.random()
        if roll < garbage_rate / 2:
            return Silent
        if roll < garbage_rate:
            return SymbolResponse(int(rng.integers(alphabet.size))) if isinstance(request, Vote) \
                else BitResponse(bool(rng.integers(2)))
        if isinstance(request, InitialSum):
            return GradientResponse(rng.integers(0, alphabet.size, size=dim, dtype=np.int64))
        if isinstance(request, PartialSum):
            return SymbolResponse(int(rng.integers(alphabet.size)))
        return BitResponse(bool(rng.integers(2)))
    return callback


# -- assembly ---------------------------------------------------------------

def build_behaviors(cfg: SystemConfig, truth: TrueGradients, spec: AttackSpec) -> AttackInstance:
    """Honest tables for everyone, then the adversary's strategy on top."""
    rng = adversary_rng(spec.seed)
    if spec.kind == "none" and spec.malicious is None:
        spec_used = replace(spec, malicious=())
    else:
        spec_used = spec
    malicious, stragglers = default_placement(cfg, spec_used, rng)
    _validate_placement(cfg, malicious, stragglers)

    claims: dict[int, dict] = {}
    adaptive: dict = {}
    plans: dict[int, SymmetrizationPlan] = {}
    if spec.kind == "symmetrization" and malicious:
        for g, members in _by_group(cfg, malicious).items():
            plan, over = plan_symmetrization(cfg, truth, members, rng, spec.collapse)
            plans[g] = plan
            claims.update(over)
        if spec.case == 2:
            if len(plans) != 1:
                raise ConfigurationError("case 2 needs all malicious workers in one group")
            (g, plan), = plans.items()
            truth, group_claims, malicious = twin_world(cfg, truth, plan, claims)
            claims = {w: c for w, c in group_claims.items() if c}
            if set(malicious) & set(stragglers) or len(malicious) > cfg.n_malicious:
                raise ConfigurationError("case 2 needs a group with exactly u honest workers and no stragglers")
    elif spec.kind == "align_and_stall":
        adaptive = plan_align_and_stall(cfg, truth, malicious, rng, spec.forced_local_comps)
    elif spec.kind == "random_corruption":
        claims = plan_random(cfg, truth, malicious, rng, spec.corruption_rate)
    elif spec.kind == "adaptive_custom":
        callback = spec.callback if spec.callback is not None else make_chaotic(cfg, rng)
        adaptive = {w: AdaptiveBehavior(callback, ClaimTable(truth, group_of(cfg, w))) for w in malicious}

    behaviors = {}
    silent = set(stragglers)
    for j in range(1, cfg.n_workers + 1):
        if j in silent:
            behaviors[j] = SilentBehavior()
        elif j in adaptive:
            behaviors[j] = adaptive[j]
        else:
            behaviors[j] = TableBehavior(ClaimTable(truth, group_of(cfg, j), claims.get(j)))
    return AttackInstance(spec, truth, behaviors, frozenset(malicious), frozenset(stragglers), plans)
