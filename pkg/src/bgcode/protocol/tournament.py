"""Main-node logic for one fractional-repetition group.

A tournament starts from the round-0 responses of the group, splits the
responsive workers into classes of equal responses, and plays matches
between class representatives until a single class is left.  A match is
an interactive bisection on one coordinate of the range-sum tree that
ends at a sample index on which the two representatives disagree; a
final vote among both classes then decides who is eliminated, with a
local computation only when both sides have at least ``u`` supporters.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from ..assignment import SystemConfig, samples_of_group, workers_of_group
from ..errors import ConfigurationError, ProtocolError
from ..workers import (InitialSum, PartialSum, TrueGradients, Vote, WorkerBehavior, is_well_formed, respond,
                       response_bits)
from .transcript import Transcript


@dataclass
class MatchState:
    challenger: int
    voter: int
    coord: int
    i_min: int
    i_max: int
    claim_challenger: int
    # None once the voter has rejected: the main node then only knows it differs
    claim_voter: Optional[int]
    round: int = 0
    steps: int = 0
    phase: str = "bisect"


@dataclass
class MatchOutcome:
    challenger: int
    voter: int
    coord: int
    i_check: Optional[int] = None
    claimed_leaf: Optional[int] = None
    voter_leaf: Optional[int] = None
    steps: int = 0
    aborted_by: Optional[int] = None


@dataclass
class Tournament:
    cfg: SystemConfig
    group_id: int
    truth: TrueGradients
    behaviors: Mapping[int, WorkerBehavior]
    transcript: Transcript
    rng: np.random.Generator
    responses: dict = field(default_factory=dict)
    groups: list = field(default_factory=list)
    suspects: set = field(default_factory=set)
    silent: set = field(default_factory=set)
    straggler_tolerance: int = 0
    # malicious workers that may still be hiding; lowered as earlier groups expose liars
    malicious_budget: Optional[int] = None
    threshold: int = 1
    accepted_early: bool = False
    matches: int = 0
    local_comps: int = 0
    rounds: int = 0
    current_match: Optional[MatchState] = None
    history: list = field(default_factory=list)

    @property
    def sample_range(self) -> tuple[int, int]:
        return samples_of_group(self.cfg, self.group_id)

    @property
    def members(self) -> list[int]:
        return workers_of_group(self.cfg, self.group_id)

    @property
    def survivors(self) -> list[int]:
        return sorted(w for g in self.groups for w in g)

    def winner(self) -> list[int]:
        if len(self.groups) != 1:
            raise ProtocolError(f"group {self.group_id}: tournament has {len(self.groups)} classes left")
        return self.groups[0]

    def result(self) -> np.ndarray:
        rep = self.winner()[0]
        return self.responses[rep].value

    # -- bookkeeping --------------------------------------------------------

    def _ask(self, worker: int, request):
        return respond(worker, request, self.behaviors[worker], self)

    def eliminate(self, workers, reason: str, round_: Optional[int] = None) -> None:
        workers = sorted(set(workers))
        if not workers:
            return
        self.suspects.update(workers)
        gone = set(workers)
        self.groups = [[w for w in g if w not in gone] for g in self.groups]
        self.transcript.log(self.transcript.rounds_used if round_ is None else round_, self.group_id, None,
                            "eliminate", {"workers": workers, "reason": reason})

    def _prune(self) -> None:
        for g in list(self.groups):
            if len(g) < self.threshold:
                self.groups.remove(g)
                if g:
                    self.eliminate(g, "too_few_supporters")
        self.groups = [g for g in self.groups if g]
        self.groups.sort(key=lambda g: g[0])

    def local_compute(self, index: int) -> np.ndarray:
        t = self.transcript
        if index in t.local_comp_indices:
            return t.local_comp_values[t.local_comp_indices.index(index)]
        value = self.truth.gradient(index)
        t.local_comp_indices.append(index)
        t.local_comp_values.append(value)
        self.local_comps += 1
        t.log(t.rounds_used, self.group_id, None, "local_comp", {"index": index, "value": value})
        return value


def form_groups(tournament: Tournament, initial: Mapping[int, object]) -> Tournament:
    """Split the group's responsive workers into classes of equal responses.

    With ``b`` malicious workers possibly left in the system (``s`` minus
    those already exposed in earlier groups) and ``s'`` tolerated
    stragglers, the group holds at least ``group_size - b - s'`` honest
    responders, all in one class.  Smaller classes are suspected outright
    and a class with more than ``b`` members is accepted immediately.  The
    threshold does not depend on how many workers actually went silent, so
    malicious workers cannot lower it by staying quiet.
    """
    cfg, t = tournament.cfg, tournament
    alphabet, dim = cfg.alphabet, cfg.dim
    classes: dict[bytes, list[int]] = {}
    for j in t.members:
        resp = initial[j]
        if not is_well_formed(InitialSum(), resp, alphabet, dim):
            t.silent.add(j)
            continue
        t.responses[j] = resp
        key = np.asarray(resp.value, dtype=np.int64).tobytes()
        classes.setdefault(key, []).append(j)

    if not 0 <= t.straggler_tolerance < cfg.honest_per_group:
        raise ConfigurationError(
            f"straggler tolerance must lie in [0, u-1] = [0, {cfg.honest_per_group - 1}], got {t.straggler_tolerance}")
    if t.malicious_budget is None:
        t.malicious_budget = cfg.n_malicious
    t.threshold = cfg.group_size - t.malicious_budget - t.straggler_tolerance
    ordered = sorted((sorted(ws) for ws in classes.values()), key=lambda g: g[0])
    big = [g for g in ordered if len(g) > t.malicious_budget]
    if big:
        # more than s identical answers can only be the honest value
        t.groups = [big[0]]
        t.accepted_early = True
        t.suspects.update(w for g in ordered if g is not big[0] for w in g)
    else:
        t.groups = [g for g in ordered if len(g) >= t.threshold]
        t.suspects.update(w for g in ordered if len(g) < t.threshold for w in g)
    if t.suspects:
        t.transcript.log(0, t.group_id, None, "eliminate",
                         {"workers": sorted(t.suspects), "reason": "initial_classes"})
    if not t.groups:
        raise ProtocolError(f"group {t.group_id}: no class of at least {t.threshold} agreeing workers")
    return t


def first_disagreeing_coord(z1: np.ndarray, z2: np.ndarray) -> int:
    diff = np.flatnonzero(np.asarray(z1) != np.asarray(z2))
    if diff.size == 0:
        raise ProtocolError("match requires disagreeing initial responses")
    return int(diff[0]) + 1


def run_match(t: Tournament, challenger: int, voter: int) -> MatchOutcome:
    """Bisect the range-sum tree until a single disputed sample remains.

    The main node binds both workers to the range sums it can infer: a
    commit on the left half moves both claims to the right half by
    subtraction, a reject keeps the challenger's transmitted left sum and
    leaves the voter's claim known only to differ from it.
    """
    cfg, tr = t.cfg, t.transcript
    k = cfg.alphabet.size_log2
    z1, z2 = t.responses[challenger].value, t.responses[voter].value
    coord = first_disagreeing_coord(z1, z2)
    lo, hi = t.sample_range
    state = MatchState(challenger, voter, coord, lo, hi, int(z1[coord - 1]), int(z2[coord - 1]))
    t.current_match = state
    out = MatchOutcome(challenger, voter, coord)
    coord_bits = max(1, (cfg.dim - 1).bit_length())

    while state.i_max > state.i_min:
        mid = (state.i_min + state.i_max) // 2
        req = PartialSum(state.i_min, mid, coord)
        r = tr.next_round()
        state.round = r
        resp = t._ask(challenger, req)
        ok = is_well_formed(req, resp, cfg.alphabet, cfg.dim)
        down = 1 + (coord_bits if state.steps == 0 else 0)
        tr.log(r, t.group_id, challenger, req.kind,
               {"lo": req.lo, "hi": req.hi, "coord": coord, "value": resp.value if ok else None},
               response_bits(resp, cfg.alphabet, cfg.dim) if ok else 0, down)
        if not ok:
            out.aborted_by = challenger
            break
        left = int(resp.value)

        vote = Vote(left, state.i_min, mid, coord)
        r = tr.next_round()
        state.round = r
        resp = t._ask(voter, vote)
        ok = is_well_formed(vote, resp, cfg.alphabet, cfg.dim)
        tr.log(r, t.group_id, voter, vote.kind,
               {"lo": vote.lo, "hi": vote.hi, "coord": coord, "proposed": left,
                "commit": bool(resp.commit) if ok else None},
               response_bits(resp, cfg.alphabet, cfg.dim) if ok else 0, k)
        state.steps += 1
        if not ok:
            out.aborted_by = voter
            break
        if resp.commit:
            state.claim_challenger = cfg.alphabet.sub(state.claim_challenger, left)
            if state.claim_voter is not None:
                state.claim_voter = cfg.alphabet.sub(state.claim_voter, left)
            state.i_min = mid + 1
        else:
            state.claim_challenger = left
            state.claim_voter = None
            state.i_max = mid

    out.steps = state.steps
    if out.aborted_by is None:
        out.i_check = state.i_min
        out.claimed_leaf = state.claim_challenger
        out.voter_leaf = state.claim_voter
    return out


def final_voting_round(t: Tournament, outcome: MatchOutcome, w1_class, w2_class):
    """Ask every other member of both classes to back or reject the leaf claim.

    Returns ``(committers, rejectors, silent)``; the challenger counts as a
    committer and the voter as a rejector without sending anything.
    """
    cfg, tr = t.cfg, t.transcript
    committers, rejectors, silent = {outcome.challenger}, {outcome.voter}, set()
    voters = sorted((set(w1_class) | set(w2_class)) - {outcome.challenger, outcome.voter})
    if not voters:
        return committers, rejectors, silent
    if t.current_match is not None:
        t.current_match.phase = "final"
    r = tr.next_round()
    req = Vote(outcome.claimed_leaf, outcome.i_check, outcome.i_check, outcome.coord)
    for n, j in enumerate(voters):
        resp = t._ask(j, req)
        ok = is_well_formed(req, resp, cfg.alphabet, cfg.dim)
        # the proposed label is multicast once to all voters
        tr.log(r, t.group_id, j, "final_vote",
               {"index": req.lo, "coord": req.coord, "proposed": req.proposed,
                "commit": bool(resp.commit) if ok else None},
               response_bits(resp, cfg.alphabet, cfg.dim) if ok else 0,
               cfg.alphabet.size_log2 if n == 0 else 0)
        if ok and resp.commit:
            committers.add(j)
        else:
            rejectors.add(j)
            if not ok:
                silent.add(j)
    return committers, rejectors, silent


def resolve_match(t: Tournament, outcome: MatchOutcome, committers, rejectors) -> set:
    """Eliminate the losing side of a match; returns the eliminated workers."""
    u = t.threshold
    if len(committers) < u:
        lost, reason = set(committers), "few_committers"
    elif len(rejectors) < u:
        lost, reason = set(rejectors), "few_rejectors"
    else:
        true_value = int(t.local_compute(outcome.i_check)[outcome.coord - 1])
        if true_value != outcome.claimed_leaf:
            lost, reason = set(committers), "local_comp_wrong_claim"
            if outcome.voter_leaf is not None and outcome.voter_leaf != true_value:
                # the voter's inferred leaf claim is wrong as well
                lost.add(outcome.voter)
        else:
            lost, reason = set(rejectors), "local_comp_rejected_truth"
    t.eliminate(lost, reason)
    return lost


def run_tournament(t: Tournament) -> Tournament:
    start_round = t.transcript.rounds_used
    while len(t.groups) > 1:
        t.groups.sort(key=lambda g: g[0])
        w1_class, w2_class = t.groups[0], t.groups[1]
        w1 = int(t.rng.choice(w1_class))
        w2 = int(t.rng.choice(w2_class))
        t.matches += 1
        outcome = run_match(t, w1, w2)
        if outcome.aborted_by is not None:
            t.eliminate([outcome.aborted_by], "malformed_or_silent")
            lost = {outcome.aborted_by}
        else:
            committers, rejectors, silent = final_voting_round(t, outcome, w1_class, w2_class)
            lost = resolve_match(t, outcome, committers, rejectors)
            if silent - lost:
                t.eliminate(silent - lost, "malformed_or_silent")
                lost |= silent
        t.history.append((outcome, sorted(lost)))
        t.current_match = None
        t._prune()
    if not t.groups:
        raise ProtocolError(f"group {t.group_id}: every class was eliminated")
    t.rounds = t.transcript.rounds_used - start_round
    return t
