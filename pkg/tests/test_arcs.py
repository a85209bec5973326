import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diagprimes import arcs, sysmodel
from diagprimes.errors import CapacityError


def test_golden_ratio_convergents():
    phi = (1 + math.sqrt(5)) / 2
    qs = [q for _, q in arcs.cf_convergents(phi, 13)]
    assert qs == [1, 2, 3, 5, 8, 13]


@settings(max_examples=100, deadline=None)
@given(st.fractions(min_value=0, max_value=1, max_denominator=10**6), st.integers(1, 10**4))
def test_convergents_are_best_approximations(x, bound):
    conv = arcs.cf_convergents(x, bound)
    assert all(q <= bound for _, q in conv)
    a, q = conv[-1]
    err = abs(x - Fraction(a, q))
    # Dirichlet: the last convergent below the bound is within 1/(q * bound)
    assert err <= Fraction(1, q * bound) or err == 0


def test_simultaneous_approx_rational_point():
    r = arcs.simultaneous_approx([Fraction(1, 2), Fraction(1, 3)], 1000, 0.1, (1, 2))
    assert r.q == 6 and r.a == (3, 2)


def test_classify_major_and_minor():
    # Q = P^0.3 ~ 15.8
    lab = arcs.classify([Fraction(1, 3)], 10**4, 0.3, (1,))
    assert lab.major and lab.approx.q == 3 and lab.zone == "Inner"
    assert lab.approx.a == (1,) and lab.approx.err == (0.0,)
    near = [Fraction(1, 3) + Fraction(4, 10**4)]
    assert arcs.classify(near, 10**4, 0.3, (1,)).zone == "Inner"
    assert arcs.classify(near, 10**4, 0.3, (1,), A_inner=0.5).zone == "Outer"
    # Q = P^0.1 ~ 2.5 admits no q = 3
    assert not arcs.classify([Fraction(1, 3)], 10**4, 0.1, (1,)).major
    phi = (math.sqrt(5) - 1) / 2
    assert not arcs.classify([phi], 10**4, 0.3, (1,)).major


def test_classify_capacity():
    with pytest.raises(CapacityError):
        arcs.classify([0.1], 10**12, 0.5, (1,))


def test_decay_scan_is_seeded():
    sys4 = sysmodel.make_system([1, 1, -1, -1], [1])
    a = arcs.minor_decay_scan(sys4, [1000, 10_000], n_samples=40, seed=3)
    b = arcs.minor_decay_scan(sys4, [1000, 10_000], n_samples=40, seed=3)
    assert a == b
    assert a[1].median < a[0].median
    assert all(r.minor_samples == 40 for r in a)
