import json

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from bgcode import bounds
from bgcode.adversary import AttackSpec
from bgcode.assignment import SystemConfig
from bgcode.errors import ConfigurationError, ProtocolError
from bgcode.protocol import (Tournament, Transcript, draco_baseline, final_voting_round, first_disagreeing_coord,
                             form_groups, read_jsonl, run_match, run_scheme, run_tournament)
from bgcode.workers import ClaimTable, TableBehavior, TrueGradients, honest_behaviors, initial_responses


def _tournament(cfg, truth, behaviors):
    t = Tournament(cfg, 1, truth, behaviors, Transcript(), np.random.default_rng(0))
    return form_groups(t, initial_responses(cfg, behaviors))


def _liar(truth, index, delta=1):
    bad = (truth.gradient(index) + delta) & truth.alphabet.mask
    return TableBehavior(ClaimTable(truth, 1, {index: bad}))


# -- classes --------------------------------------------------------------------

def test_honest_group_accepted_without_matches(make_truth):
    cfg, truth = make_truth(2, 1, 1, 8, 2)
    t = run_tournament(_tournament(cfg, truth, honest_behaviors(cfg, truth)))
    assert t.accepted_early and t.matches == 0 and len(t.groups) == 1


def test_three_singleton_classes_under_u1(make_truth):
    cfg, truth = make_truth(2, 1, 1, 8, 2)
    beh = honest_behaviors(cfg, truth)
    beh[1], beh[2] = _liar(truth, 2, delta=1), _liar(truth, 6, delta=2)
    t = _tournament(cfg, truth, beh)
    assert sorted(map(len, t.groups)) == [1, 1, 1]


def test_lone_deviant_pruned_when_u2(make_truth):
    cfg, truth = make_truth(1, 2, 1, 8, 2)
    beh = honest_behaviors(cfg, truth)
    beh[3] = _liar(truth, 4)
    t = run_tournament(_tournament(cfg, truth, beh))
    assert t.suspects == {3} and t.matches == 0 and t.local_comps == 0


def test_first_disagreeing_coord():
    assert first_disagreeing_coord(np.array([1, 2, 3]), np.array([1, 5, 4])) == 2
    with pytest.raises(ProtocolError):
        first_disagreeing_coord(np.array([1]), np.array([1]))


# -- a single match ---------------------------------------------------------------

def test_match_finds_g5_in_three_steps(make_truth):
    cfg, truth = make_truth(1, 1, 1, 8, 1, k=8)
    beh = honest_behaviors(cfg, truth)
    beh[1] = _liar(truth, 5)
    t = _tournament(cfg, truth, beh)
    out = run_match(t, 1, 2)
    assert (out.i_check, out.steps, out.coord) == (5, 3, 1)
    assert out.claimed_leaf == (truth.gradient(5)[0] + 1) % 256
    assert out.voter_leaf is None or out.voter_leaf == truth.gradient(5)[0]
    # per match: k bits from the challenger and 1 bit from the voter at each level
    assert t.transcript.kappa_bits == (8 + 1) * 3


def test_single_sample_match_has_no_steps(make_truth):
    cfg, truth = make_truth(1, 1, 1, 1, 1)
    beh = honest_behaviors(cfg, truth)
    beh[2] = _liar(truth, 1)
    out = run_match(_tournament(cfg, truth, beh), 2, 1)
    assert out.steps == 0 and out.i_check == 1


def test_u1_final_vote_is_free(make_truth):
    cfg, truth = make_truth(1, 1, 1, 8, 1)
    beh = honest_behaviors(cfg, truth)
    beh[1] = _liar(truth, 3)
    t = _tournament(cfg, truth, beh)
    out = run_match(t, 1, 2)
    before = t.transcript.kappa_bits
    committers, rejectors, silent = final_voting_round(t, out, [1], [2])
    assert (committers, rejectors, silent) == ({1}, {2}, set())
    assert t.transcript.kappa_bits == before


def test_u1_liar_costs_one_local_computation(make_truth):
    cfg, truth = make_truth(1, 1, 1, 8, 2)
    beh = honest_behaviors(cfg, truth)
    beh[1] = _liar(truth, 7)
    t = run_tournament(_tournament(cfg, truth, beh))
    assert t.local_comps == 1 and t.suspects == {1}


def test_first_match_voting_bits(make_truth):
    s, u = 3, 2
    cfg, truth = make_truth(s, u, 1, 16, 1)
    result = run_scheme(cfg, AttackSpec("align_and_stall", seed=1), truth)
    first = [r for r in result.transcript.records if r.kind == "final_vote"]
    rounds = sorted({r.round for r in first})
    assert sum(r.uplink_bits for r in first if r.round == rounds[0]) == s + u - 2


def test_aligned_pair_exposed_by_one_local_computation(make_truth):
    cfg, truth = make_truth(2, 2, 1, 8, 2)
    beh = honest_behaviors(cfg, truth)
    beh[1] = _liar(truth, 3)
    beh[2] = _liar(truth, 3)
    t = run_tournament(_tournament(cfg, truth, beh))
    assert t.local_comps == 1 and t.suspects == {1, 2} and t.matches == 1


# -- the whole scheme -------------------------------------------------------------

def test_honest_run(make_truth):
    cfg, truth = make_truth(3, 1, 2, 8, 3)
    result = run_scheme(cfg, AttackSpec(), truth)
    met = result.metrics
    assert np.array_equal(result.g_hat, truth.full_sum())
    assert (met.local_computations, met.kappa_bits, met.matches, met.rounds) == (0, 0, 0, 0)
    assert met.replication == 4


def test_split_across_three_groups(make_truth):
    cfg, truth = make_truth(3, 1, 3, 12, 2)
    for seed in range(20):
        result = run_scheme(cfg, AttackSpec("random_corruption", malicious=(1, 6, 11), seed=seed,
                                            corruption_rate=0.5), truth)
        assert np.array_equal(result.g_hat, truth.full_sum())
        assert result.suspects <= {1, 6, 11}


def test_symmetrization_s4_u2_many_seeds():
    for seed in range(1, 101):
        cfg = SystemConfig.from_params(4, 2, 1, 16, 2, seed=seed)
        truth = TrueGradients.random(cfg, np.random.default_rng(seed))
        result = run_scheme(cfg, AttackSpec("symmetrization", seed=seed), truth)
        assert np.array_equal(result.g_hat, result.instance.truth.full_sum())
        assert result.metrics.local_computations <= 2


def test_transcript_is_zero_indexed(tmp_path, make_truth):
    cfg, truth = make_truth(2, 1, 1, 8, 2)
    result = run_scheme(cfg, AttackSpec("symmetrization", malicious=(1, 2), collapse=False, seed=4), truth)
    path = tmp_path / "t.jsonl"
    result.transcript.write_jsonl(path)
    rows = read_jsonl(path)
    initial = [r for r in rows if r["kind"] == "initial"]
    assert sorted(r["worker"] for r in initial) == [0, 1, 2]
    assert all(r["group"] == 0 for r in rows)
    local = [r["payload"]["index"] for r in rows if r["kind"] == "local_comp"]
    assert local == [i - 1 for i in result.local_comp_indices]
    assert sum(r["uplink_bits"] for r in rows if r["round"] >= 1) == result.metrics.kappa_bits
    json.dumps(rows)


def test_same_seed_same_transcript(make_truth):
    cfg, truth = make_truth(4, 2, 2, 16, 2)
    spec = AttackSpec("align_and_stall", seed=7, malicious=(1, 2, 7, 8))
    a = run_scheme(cfg, spec, truth).transcript.dumps()
    b = run_scheme(cfg, spec, truth).transcript.dumps()
    assert a == b


def test_draco_majority(make_truth):
    cfg, truth = make_truth(1, 2, 1, 4, 2)
    base = draco_baseline(cfg, AttackSpec("random_corruption", corruption_rate=1.0), truth)
    assert np.array_equal(base.g_hat, truth.full_sum())
    assert base.total_bits == 3 * 2 * 16
    with pytest.raises(ConfigurationError):
        draco_baseline(SystemConfig.from_params(2, 1, 1, 4, 1), AttackSpec(), truth)


attacks = st.sampled_from([
    AttackSpec("none"), AttackSpec("symmetrization", collapse=False), AttackSpec("symmetrization", collapse=True),
    AttackSpec("align_and_stall"), AttackSpec("random_corruption", corruption_rate=0.4),
    AttackSpec("adaptive_custom"),
])


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 5), st.integers(1, 3), st.integers(1, 3), st.integers(1, 12), st.integers(1, 3),
       st.integers(1, 12), attacks, st.integers(0, 2 ** 31), st.data())
def test_exact_and_within_budget(s, u, m, q, d, k, attack, seed, data):
    if attack.kind == "symmetrization" and s // u > q:
        return
    cfg = SystemConfig.from_params(s, u, m, m * q, d, k=k, seed=seed)
    truth = TrueGradients.random(cfg, np.random.default_rng(seed))
    stragglers = data.draw(st.integers(0, u - 1))
    spec = AttackSpec(attack.kind, seed=seed, collapse=attack.collapse, corruption_rate=attack.corruption_rate,
                      n_stragglers=min(stragglers, u - 1))
    result = run_scheme(cfg, spec, truth)
    inst = result.instance
    assert np.array_equal(result.g_hat, inst.truth.full_sum())
    assert not result.suspects & (inst.honest - inst.stragglers)
    assert result.metrics.local_computations <= bounds.c_max(s, u, len(inst.stragglers))
    # the default placement keeps the adversary in group 1, where the budgets are proved
    assert bounds.check_run(cfg, result.metrics, len(inst.stragglers)) == []
