"""Virtual values: formulas, ironing, and the prefix identities."""

import math
import random

from hypothesis import given, settings
from hypothesis import strategies as st

from gftlab.market import DiscreteDistribution
from gftlab.virtual import buyer_virtual_values, seller_virtual_values
from oracles import (
    buyer_ironed_oracle,
    buyer_raw_oracle,
    irregular_buyer_distribution,
    random_distribution,
    seller_ironed_oracle,
    seller_raw_oracle,
)

U12 = DiscreteDistribution((1, 2), (0.5, 0.5))
U01 = DiscreteDistribution((0, 1), (0.5, 0.5))
TRI = DiscreteDistribution((1, 2, 10), (1 / 3, 1 / 3, 1 / 3))


def test_buyer_regular_examples():
    t = buyer_virtual_values(U12)
    assert t.raw == (0.0, 2.0) and t.ironed == (0.0, 2.0)
    assert t.ironed_intervals == ()
    t = buyer_virtual_values(U01)
    assert t.raw == (-1.0, 1.0) and t.ironed == (-1.0, 1.0)


def test_buyer_ironing_example():
    # the hand-applied formula gives raw = [-1, -6, 10]; the hull irons the
    # bottom two indices to the chord slope -3.5
    t = buyer_virtual_values(TRI)
    assert [abs(a - b) < 1e-12 for a, b in zip(t.raw, (-1.0, -6.0, 10.0))] == [True] * 3
    assert all(abs(a - b) < 1e-12 for a, b in zip(t.ironed, (-3.5, -3.5, 10.0)))
    assert t.ironed_intervals == ((0, 1),)
    assert [t.is_interior(k) for k in range(3)] == [False, True, False]


def test_buyer_top_type_equals_value():
    rng = random.Random(1)
    for _ in range(50):
        d = random_distribution(rng)
        t = buyer_virtual_values(d)
        assert t.raw[-1] == d.support[-1]


def test_seller_examples():
    assert seller_virtual_values(U01).raw == (0.0, 2.0)
    assert seller_virtual_values(U01).ironed == (0.0, 2.0)
    assert seller_virtual_values(U12).raw == (1.0, 3.0)
    assert seller_virtual_values(U12).ironed == (1.0, 3.0)
    pt = DiscreteDistribution((0,), (1,))
    t = seller_virtual_values(pt)
    assert t.raw == (0.0,) and t.ironed == (0.0,)


def test_seller_bottom_type_equals_value():
    rng = random.Random(2)
    for _ in range(50):
        d = random_distribution(rng)
        t = seller_virtual_values(d)
        assert t.raw[0] == d.support[0]


def test_seller_ironing_interior_excludes_right_endpoint():
    d = DiscreteDistribution((0, 10, 11), (0.8, 0.1, 0.1))
    t = seller_virtual_values(d)
    assert all(abs(a - b) < 1e-9 for a, b in zip(t.raw, (0.0, 90.0, 20.0)))
    assert all(abs(a - b) < 1e-9 for a, b in zip(t.ironed, (0.0, 55.0, 55.0)))
    assert t.ironed_intervals == ((1, 2),)
    assert [t.is_interior(k) for k in range(3)] == [False, True, False]


def test_raw_values_match_hand_formula():
    rng = random.Random(3)
    for _ in range(100):
        d = random_distribution(rng, grid=rng.random() < 0.5)
        bt = buyer_virtual_values(d)
        st_ = seller_virtual_values(d)
        assert all(abs(a - b) < 1e-9 for a, b in zip(bt.raw, buyer_raw_oracle(d)))
        assert all(abs(a - b) < 1e-9 for a, b in zip(st_.raw, seller_raw_oracle(d)))


def test_ironed_values_match_chord_hull_oracle():
    rng = random.Random(4)
    for i in range(120):
        d = irregular_buyer_distribution(rng) if i % 2 else random_distribution(rng)
        bt = buyer_virtual_values(d)
        st_ = seller_virtual_values(d)
        assert all(abs(a - b) < 1e-9 for a, b in zip(bt.ironed, buyer_ironed_oracle(d)))
        assert all(abs(a - b) < 1e-9 for a, b in zip(st_.ironed, seller_ironed_oracle(d)))


def test_regular_fixed_point_ironed_equals_raw_exactly():
    rng = random.Random(5)
    seen = 0
    while seen < 50:
        d = random_distribution(rng)
        t = buyer_virtual_values(d)
        if all(t.raw[k + 1] >= t.raw[k] for k in range(len(d) - 1)):
            seen += 1
            assert t.ironed == t.raw
            assert t.ironed_intervals == ()


def test_ironed_equals_raw_outside_intervals():
    rng = random.Random(6)
    for _ in range(100):
        d = irregular_buyer_distribution(rng)
        for t in (buyer_virtual_values(d), seller_virtual_values(d)):
            covered = set()
            for a, b in t.ironed_intervals:
                covered.update(range(a, b + 1))
            for k in range(len(d)):
                if k not in covered:
                    assert t.ironed[k] == t.raw[k]


def test_two_disjoint_ironed_intervals():
    # two separate concavity violations in one revenue curve
    weights = (7, 5, 8, 6, 4, 9)
    pmf = tuple(w / 39 for w in weights[:-1]) + (1.0 - sum(w / 39 for w in weights[:-1]),)
    d = DiscreteDistribution((5, 16, 31, 32, 53, 61), pmf)
    t = buyer_virtual_values(d)
    assert t.ironed_intervals == ((0, 1), (2, 3))
    assert all(abs(a - b) < 1e-9 for a, b in zip(t.ironed, buyer_ironed_oracle(d)))
    assert [t.is_interior(k) for k in range(6)] == [False, True, False, True, False, False]
    _buyer_prefix_check(d)


def _buyer_prefix_check(d: DiscreteDistribution, tol: float = 1e-9):
    t = buyer_virtual_values(d)
    K = len(d)
    for k in range(K):
        lhs = math.fsum(t.ironed[r] * d.pmf[r] for r in range(k, K))
        rhs = d.support[k] * d.tail_mass(k)
        assert lhs >= rhs - tol, (d, k, lhs, rhs)
        if not t.is_interior(k):
            assert abs(lhs - rhs) <= tol, (d, k, lhs, rhs)


def _seller_prefix_check(d: DiscreteDistribution, tol: float = 1e-9):
    t = seller_virtual_values(d)
    for k in range(len(d)):
        lhs = math.fsum(t.ironed[r] * d.pmf[r] for r in range(k + 1))
        rhs = d.support[k] * d.head_mass(k)
        assert lhs <= rhs + tol, (d, k, lhs, rhs)
        if not t.is_interior(k):
            assert abs(lhs - rhs) <= tol, (d, k, lhs, rhs)


def test_prefix_identities_small_sample():
    rng = random.Random(7)
    for i in range(100):
        d = irregular_buyer_distribution(rng) if i % 3 == 0 else random_distribution(rng)
        _buyer_prefix_check(d)
        _seller_prefix_check(d)


def test_ironing_instance_c_prefix_values():
    t = buyer_virtual_values(TRI)
    total = math.fsum(t.ironed[r] / 3 for r in range(3))
    assert abs(total - 1.0) < 1e-12  # equality at k=0: support[0] * 1
    partial = math.fsum(t.ironed[r] / 3 for r in range(1, 3))
    assert abs(partial - 6.5 / 3) < 1e-12
    assert partial > 2 * (2 / 3)  # strict at the interior index


@settings(max_examples=200, deadline=None)
@given(
    data=st.lists(
        st.tuples(st.integers(0, 256), st.integers(1, 16)), min_size=1, max_size=6,
        unique_by=lambda t: t[0],
    )
)
def test_ironed_monotone_property(data):
    data.sort()
    support = tuple(v / 32 for v, _ in data)
    weights = [w for _, w in data]
    total = sum(weights)
    pmf = [w / total for w in weights[:-1]]
    pmf.append(1.0 - math.fsum(pmf))
    d = DiscreteDistribution(support, tuple(pmf))
    for t in (buyer_virtual_values(d), seller_virtual_values(d)):
        assert all(t.ironed[k + 1] >= t.ironed[k] - 1e-9 for k in range(len(d) - 1))
