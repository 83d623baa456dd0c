import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from bgcode import bounds
from bgcode.errors import ConfigurationError


@pytest.mark.parametrize("u,c", [(1, 10), (2, 5), (3, 3), (4, 2), (5, 2), (6, 1), (10, 1), (11, 0)])
def test_c_min_s10(u, c):
    assert bounds.c_min(10, u) == c


def test_c_min_edge_cases():
    assert bounds.c_min(0, 3) == 0
    assert bounds.c_min(10, 5, stragglers=3) == 5
    with pytest.raises(ConfigurationError):
        bounds.c_min(3, 2, stragglers=2)


def test_kappa_lower_values():
    assert bounds.kappa_lower(8, 1, 2, 1) == pytest.approx(math.log2(28))
    assert bounds.kappa_lower(16, 1, 3, 1) == pytest.approx(9.129283016944966)
    assert bounds.kappa_lower(8, 1, 1, 2) == 0


def test_kappa_lower_huge_q_is_finite():
    assert bounds.kappa_lower(10 ** 9, 10, 9, 1) == pytest.approx(
        math.log2(math.comb(10 ** 8, 9)), rel=1e-12)


def test_kappa_upper_worked_example():
    assert bounds.kappa_upper(8, 1, 2, 1, 2, 16) == 103


def test_r_max_worked_example():
    assert bounds.r_max(8, 1, 2, 1, 2) == 14


def test_kappa_asymptotic_example():
    assert bounds.kappa_asymptotic(10 ** 4, 1, 10, 1, 10, 16) == 2380


def test_ratio_limit():
    assert bounds.ratio_limit(10, 1, 16) == 17
    assert bounds.ratio_limit(10, 3, 16) == Fraction(68, 3)
    # equal limits for different s when s mod u / (s div u) agrees
    assert bounds.ratio_limit(9, 2, 16) == bounds.ratio_limit(5, 1, 16) * Fraction(5, 4)
    assert bounds.ratio_limit(9, 4, 16) == bounds.ratio_limit(5, 2, 16)
    with pytest.raises(ConfigurationError):
        bounds.ratio_limit(1, 2, 16)


def test_no_interaction_when_honest_majority():
    assert bounds.kappa_upper(64, 1, 2, 4, 0, 16) == 0
    assert bounds.r_max(64, 1, 2, 4, 0) == 0


def test_c_above_cap_rejected():
    with pytest.raises(ConfigurationError):
        bounds.kappa_upper(8, 1, 2, 1, 3, 16)


def test_tree_height():
    assert [bounds.tree_height(q) for q in (1, 2, 3, 4, 5, 8, 9)] == [0, 1, 2, 2, 3, 3, 4]


@given(st.integers(1, 12), st.integers(1, 4), st.integers(1, 64), st.integers(1, 16))
def test_lower_never_exceeds_upper(s, u, q, k):
    c = bounds.c_min(s, u)
    if c > q:
        return
    assert bounds.kappa_lower(q, 1, s, u) <= bounds.kappa_upper(q, 1, s, u, c, k) or c == 0


@given(st.integers(1, 12), st.integers(1, 4), st.integers(2, 10 ** 6), st.integers(1, 16))
def test_asymptotic_is_leading_term(s, u, q, k):
    c = bounds.c_min(s, u)
    if u > s + 1:
        return
    gap = bounds.kappa_upper(q, 1, s, u, c, k) - bounds.kappa_asymptotic(q, 1, s, u, c, k)
    # the remainder does not grow with q
    assert gap == bounds.kappa_upper(2, 1, s, u, c, k) - bounds.kappa_asymptotic(2, 1, s, u, c, k)


def test_bound_set_fields():
    b = bounds.bound_set(8, 1, 2, 1, 16)
    assert (b.c_min, b.c_max, b.r_max, b.kappa_upper) == (2, 2, 14, 103)
    assert b.ratio_limit == 17
