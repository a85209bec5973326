import math

import pytest

from diagprimes import arith, sysmodel


def trial_division_primes(n):
    return [p for p in range(2, n + 1) if all(p % d for d in range(2, math.isqrt(p) + 1))]


@pytest.fixture(scope="session")
def tables():
    cache = {}

    def get(P):
        if P not in cache:
            cache[P] = arith.build_prime_table(P)
        return cache[P]

    return get


@pytest.fixture(scope="session")
def four_prime():
    return sysmodel.make_system([1, 1, -1, -1], [1])


@pytest.fixture(scope="session")
def diagonal_pair():
    return sysmodel.make_system([1, -1], [1])


@pytest.fixture(scope="session")
def sum_of_squares():
    return sysmodel.make_system([1, 1], [2])


# one line per acceptance criterion, filled by test_acceptance and echoed at the end of the run
ACCEPTANCE_LINES = {}


def report_criterion(number, passed, detail):
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
