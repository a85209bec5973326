import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diagprimes import arith, expsums
from diagprimes.errors import CapacityError, DomainError

from conftest import trial_division_primes


def naive_prime_sum(alpha, row, k, P):
    """Direct sum with each phase reduced exactly as a Fraction."""
    total = 0j
    for p in trial_division_primes(P):
        ph = sum(Fraction(a) * u * p**kj for a, u, kj in zip(alpha, row, k)) % 1
        total += math.log(p) * cmath.exp(2j * math.pi * float(ph))
    return total


def test_prime_sum_at_one_half():
    # e(p/2) = -1 for odd p and +1 at p = 2
    f = expsums.prime_exp_sum([0.5], [1], [1], arith.build_prime_table(10))
    assert f.real == pytest.approx(math.log(2) - math.log(3) - math.log(5) - math.log(7), abs=1e-12)
    assert f.real == pytest.approx(-3.9608131695975777, abs=1e-12)
    assert abs(f.imag) < 1e-12


def test_prime_sum_at_zero_is_theta(tables):
    t = tables(1000)
    assert expsums.prime_exp_sum([0.0], [1], [1], t) == pytest.approx(t.theta, rel=1e-13)


@pytest.mark.parametrize("alpha,row,k", [
    ([0.1234567], [1], [1]),
    ([Fraction(3, 7)], [2], [2]),
    ([0.3, 1e-5], [1, -2], [1, 2]),
    ([Fraction(1, 3), Fraction(2, 9)], [1, 1], [1, 3]),
])
def test_prime_sum_matches_naive(alpha, row, k, tables):
    got = expsums.prime_exp_sum(alpha, row, k, tables(500))
    assert got == pytest.approx(naive_prime_sum(alpha, row, k, 500), abs=1e-9)


def test_exact_mode_is_periodic(tables):
    t = tables(2000)
    a = expsums.prime_exp_sum([Fraction(2, 5)], [1], [3], t)
    b = expsums.prime_exp_sum([Fraction(2, 5) + 7], [1], [3], t)
    assert a == pytest.approx(b, abs=1e-12)


def test_exact_mode_capacity():
    with pytest.raises(CapacityError):
        expsums.phases(expsums.AlphaPoint.of([Fraction(1, 2**130 + 1)]), [1], [1], np.arange(3))


def test_weyl_sum_and_von_mangoldt(tables):
    assert expsums.weyl_sum([0.0], [1], 50) == pytest.approx(50)
    t = tables(300)
    assert expsums.von_mangoldt_sum([0.0], [1], [1], t) == pytest.approx(t.psi, rel=1e-13)


@pytest.mark.parametrize("X", [1, 3, 10, 31, 100])
def test_vaughan_reconstructs_von_mangoldt_sum(X, tables):
    t = tables(10_000)
    rng = np.random.default_rng(X)
    for _ in range(5):
        alpha = rng.uniform(size=1).tolist()
        parts = expsums.vaughan_decompose(alpha, [1], [1], t, X)
        full = expsums.von_mangoldt_sum(alpha, [1], [1], t)
        assert abs(parts.total - full) <= 1e-9 * t.psi


def test_vaughan_domain(tables):
    with pytest.raises(DomainError):
        expsums.vaughan_decompose([0.1], [1], [1], tables(100), 0)
    with pytest.raises(DomainError):
        expsums.vaughan_decompose([0.1], [1], [1], tables(100), 101)


def test_character_tables():
    for q in (1, 2, 8, 12, 15, 16, 24, 45):
        chars = expsums.characters(q)
        assert len(chars) == arith.euler_phi(q)
        assert chars[0].principal
        mat = np.array([c.values for c in chars])
        gram = mat @ mat.conj().T
        assert np.allclose(gram, arith.euler_phi(q) * np.eye(len(chars)), atol=1e-9)
        for c in chars:
            for m in range(q):
                for n in range(q):
                    assert c(m * n) == pytest.approx(c(m) * c(n), abs=1e-9)


def test_ramanujan_sum_values():
    assert expsums.ramanujan_sum(1, 5) == 1
    assert expsums.ramanujan_sum(7, 0) == 6
    assert expsums.ramanujan_sum(7, 3) == -1
    assert expsums.ramanujan_sum(12, 6) == -4


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 60), st.integers(-200, 200))
def test_ramanujan_sum_definition(q, n):
    direct = sum(cmath.exp(2j * math.pi * a * n / q) for a in range(1, q + 1) if math.gcd(a, q) == 1)
    assert expsums.ramanujan_sum(q, n) == round(direct.real)


def test_complete_sum_W():
    assert expsums.complete_sum_W(7, [1], [1], [1]) == pytest.approx(-1)
    allw = expsums.complete_sums_all(12, [1], [1])
    for a in range(12):
        assert allw[a] == pytest.approx(expsums.ramanujan_sum(12, a), abs=1e-9)
        assert expsums.complete_sum_W(12, [a], [1], [1]) == pytest.approx(allw[a], abs=1e-9)


def test_complete_sum_with_character_matches_definition():
    q = 9
    chi = expsums.characters(q)[2]
    for a in range(q):
        direct = sum(chi(r) * cmath.exp(2j * math.pi * a * r * r / q) for r in range(q))
        assert expsums.complete_sum_W(q, [a], [1], [2], chi=chi) == pytest.approx(direct, abs=1e-9)


def test_moment_and_cz_audits():
    audit = expsums.w_moment_audit(15, (2,), 5, (1,))
    assert 0 < audit.ratio < 1
    cz = expsums.cz_ratio_audit(range(2, 40), (3,), (1,))
    assert cz.sup < 3
    assert all(r.q >= 2 for r in cz.rows)
