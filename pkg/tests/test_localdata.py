import itertools
import math
from fractions import Fraction

import pytest

from diagprimes import localdata, sysmodel
from diagprimes.errors import DomainError


def brute_M(system, q):
    units = [r for r in range(1, q + 1) if math.gcd(r, q) == 1]
    n = 0
    for x in itertools.product(units, repeat=system.s):
        if all(sum(system.u[i][j] * x[i] ** kj for i in range(system.s)) % q == 0
               for j, kj in enumerate(system.k)):
            n += 1
    return n


@pytest.fixture(scope="module")
def quad5():
    return sysmodel.make_system([1, 2, -1, -1, -1], [2])


@pytest.fixture(scope="module")
def vino():
    return sysmodel.make_system([[1, 1], [1, -1], [2, 1], [-1, 1], [-3, -2]], [1, 2])


def test_frozen_congruence_counts(four_prime, diagonal_pair, sum_of_squares):
    assert localdata.count_M(diagonal_pair, 3) == 2
    assert localdata.count_M(diagonal_pair, 9) == 6
    assert [localdata.count_M(four_prime, q) for q in (2, 4, 8)] == [1, 8, 64]
    assert [localdata.count_M(sum_of_squares, q) for q in (2, 3, 4, 9)] == [1, 0, 0, 0]


@pytest.mark.parametrize("q", [2, 3, 4, 5, 6, 7, 8, 9, 10, 12])
def test_count_M_matches_brute_force(q, four_prime, quad5, vino):
    for sy in (four_prime, vino):
        assert localdata.count_M(sy, q) == brute_M(sy, q)
    if q <= 9:
        assert localdata.count_M(quad5, q) == brute_M(quad5, q)


def test_convolution_paths_agree(quad5):
    for q in (16, 25, 27, 49):
        assert localdata.count_M(quad5, q) == localdata.count_M_rolladd(quad5, q)
    assert localdata.count_M(quad5, 36) == localdata.count_M_direct(quad5, 36)


def test_local_factors_four_prime(four_prime):
    for p in (3, 5, 7, 11):
        assert localdata.A_from_M(four_prime, p) == Fraction(1, (p - 1) ** 3)
        assert localdata.local_factor_A(four_prime, p) == pytest.approx(1 / (p - 1) ** 3, rel=1e-9)
    assert localdata.A_from_M(four_prime, 4) == 0
    assert localdata.A_from_M(four_prime, 9) == 0
    assert localdata.local_factor_A(four_prime, 6) == pytest.approx(0.125, rel=1e-9)
    assert localdata.A_from_M(four_prime, 6) == localdata.A_from_M(four_prime, 2) * localdata.A_from_M(four_prime, 3)


def test_congruence_identity(vino):
    for q in range(1, 40):
        M, rhs = localdata.divisor_identity_residual(vino, q)
        assert localdata.close(M, rhs)


def test_factor_table_csv(four_prime):
    tab = localdata.build_factor_table(four_prime, 12)
    lines = tab.to_csv().splitlines()
    assert lines[0] == "q,A_q,M_q,method"
    assert len(lines) == 13


def test_series_four_prime(four_prime):
    est = localdata.singular_series(four_prime, 300)
    closed = 2.3009615447
    assert est.partial_sum == pytest.approx(closed, rel=2e-4)
    assert est.euler_product == pytest.approx(closed, rel=1e-6)
    assert est.positive and est.tail_bound < 1e-2


def test_euler_factor_vanishes_under_obstruction(sum_of_squares):
    f = localdata.euler_factor(sum_of_squares, 3)
    assert f.value == 0


def test_hensel_lift(diagonal_pair):
    v = localdata.hensel_check(diagonal_pair, 3, 1, 2)
    assert (v.M_gamma, v.M_beta) == (2, 6)
    assert v.holds


def test_positivity_certificates(four_prime, sum_of_squares):
    assert localdata.positivity_certificate(four_prime, 30).verdict == "positive"
    cert = localdata.positivity_certificate(sum_of_squares, 30)
    assert cert.verdict == "zero (local obstruction at 3)"


def test_close_helper():
    assert localdata.close(1.0, 1.0 + 1e-12)
    assert localdata.close(0.0, 1e-13)
    assert not localdata.close(1.0, 1.001)


def test_series_domain(four_prime):
    with pytest.raises(DomainError):
        localdata.singular_series(four_prime, 0)
