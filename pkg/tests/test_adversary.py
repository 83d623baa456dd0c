import numpy as np
import pytest

from bgcode.adversary import (AttackSpec, adversary_rng, build_behaviors, nonzero_deltas, plan_random,
                              plan_symmetrization)
from bgcode.alphabet import Alphabet
from bgcode.errors import ConfigurationError
from bgcode.protocol import run_scheme
from bgcode.workers import initial_responses


def test_table1_structure(make_truth):
    cfg, truth = make_truth(2, 1, 1, 8, 2)
    plan, over = plan_symmetrization(cfg, truth, [1, 2], adversary_rng(3), collapse=False)
    assert len(plan.corrupted_indices) == 2
    assert len(set(plan.corrupted_indices)) == 2
    assert plan.subgroups == ((1,), (2,))
    for w, idx in zip((1, 2), plan.corrupted_indices):
        assert list(over[w]) == [idx]


def test_ten_against_three(make_truth):
    cfg, truth = make_truth(10, 3, 1, 8, 1)
    plan, _ = plan_symmetrization(cfg, truth, list(range(1, 11)), adversary_rng(0), collapse=False)
    assert len(plan.corrupted_indices) == 3
    assert [len(g) for g in plan.subgroups] == [3, 3, 3]
    assert len(plan.remainder) == 1


def test_too_few_liars_give_empty_plan(make_truth):
    cfg, truth = make_truth(2, 3, 1, 8, 1)
    plan, over = plan_symmetrization(cfg, truth, [1, 2], adversary_rng(0))
    assert plan.empty and not any(over.values())


def test_three_distinct_values_in_attacked_group(make_truth):
    cfg, truth = make_truth(2, 1, 1, 8, 2)
    inst = build_behaviors(cfg, truth, AttackSpec("symmetrization", malicious=(1, 2), collapse=False))
    resp = initial_responses(cfg, inst.behaviors)
    assert len({r.value.tobytes() for r in resp.values()}) == 3


def test_collapse_uses_one_index(make_truth):
    cfg, truth = make_truth(4, 2, 1, 8, 2)
    inst = build_behaviors(cfg, truth, AttackSpec("symmetrization", seed=5, collapse=True))
    over = [set(b.table.overrides) for w, b in inst.behaviors.items() if w in inst.malicious]
    assert len(set().union(*over)) == 1
    assert inst.disputed_indices == set()


def test_random_rates(make_truth):
    cfg, truth = make_truth(2, 1, 1, 6, 2)
    assert plan_random(cfg, truth, [1, 2], adversary_rng(0), 0.0) == {1: {}, 2: {}}
    full = plan_random(cfg, truth, [1, 2], adversary_rng(0), 1.0)
    assert all(sorted(v) == list(range(1, 7)) for v in full.values())
    for w, claims in full.items():
        assert all(not np.array_equal(c, truth.gradient(i)) for i, c in claims.items())


def test_random_is_reproducible(make_truth):
    cfg, truth = make_truth(2, 1, 1, 6, 2)
    a = plan_random(cfg, truth, [1, 2], adversary_rng(9), 0.5)
    b = plan_random(cfg, truth, [1, 2], adversary_rng(9), 0.5)
    assert a.keys() == b.keys()
    for w in a:
        assert a[w].keys() == b[w].keys()
        assert all(np.array_equal(a[w][i], b[w][i]) for i in a[w])


def test_deltas_nonzero_and_distinct():
    out = nonzero_deltas(Alphabet(2), 1, 3, np.random.default_rng(0))
    assert sorted(int(d[0]) for d in out) == [1, 2, 3]


@pytest.mark.parametrize("spec", [
    dict(malicious=(1, 2, 3)),            # more than s
    dict(malicious=(1,), stragglers=(1,)),
    dict(stragglers=(2, 3)),              # u stragglers in one group
])
def test_invalid_placements(make_truth, spec):
    cfg, truth = make_truth(2, 2, 1, 4, 1)
    with pytest.raises(ConfigurationError):
        build_behaviors(cfg, truth, AttackSpec("random_corruption", **spec))


def test_bad_spec_fields():
    with pytest.raises(ConfigurationError):
        AttackSpec("flood")
    with pytest.raises(ConfigurationError):
        AttackSpec(case=3)
    with pytest.raises(ConfigurationError):
        AttackSpec(corruption_rate=1.5)


def test_twin_world_moves_truth(make_truth):
    cfg, truth = make_truth(2, 1, 1, 8, 2)
    inst = build_behaviors(cfg, truth, AttackSpec("symmetrization", malicious=(1, 2), collapse=False, case=2))
    assert not np.array_equal(inst.truth.values, truth.values)
    result = run_scheme(cfg, AttackSpec("symmetrization", malicious=(1, 2), collapse=False, case=2), truth)
    assert np.array_equal(result.g_hat, result.instance.truth.full_sum())
    assert not result.suspects & (result.instance.honest - result.instance.stragglers)


def test_align_and_stall_three_matches(make_truth):
    cfg, truth = make_truth(3, 1, 1, 64, 2)
    result = run_scheme(cfg, AttackSpec("align_and_stall"), truth)
    assert result.metrics.matches == 3
    assert np.array_equal(result.g_hat, truth.full_sum())


def test_align_and_stall_u2_match_budget(make_truth):
    cfg, truth = make_truth(3, 2, 1, 16, 2)
    for seed in range(10):
        result = run_scheme(cfg, AttackSpec("align_and_stall", seed=seed), truth)
        cb = max(1, result.metrics.local_computations)
        assert result.metrics.matches <= 3 - cb * (2 - 1)
