"""Acceptance criteria 1-10, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py`` (lines are repeated in the
terminal summary) or ``python tests/test_acceptance.py``.
"""

import math
import time
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest

from diagprimes import (arcs, arith, counting, expsums, localdata, meanvalue, oscint, pipeline,
                        sysmodel)

from conftest import report_criterion

FOUR_PRIME = sysmodel.make_system([1, 1, -1, -1], [1])
QUADRATIC_FIVE = sysmodel.make_system([1, 2, -1, -1, -1], [2])
LINEAR_QUADRATIC = sysmodel.make_system([[1, 1], [1, -1], [2, 1], [-1, 1], [-3, -2]], [1, 2])
SUM_OF_SQUARES = sysmodel.make_system([1, 1], [2])


def test_criterion_01_orthogonality():
    t0 = time.perf_counter()
    table = arith.build_prime_table(50)
    rec = counting.dft_orthogonality_check(FOUR_PRIME, table, M=1024)
    secs = time.perf_counter() - t0
    ok = rec.discrepancy <= 1e-8 * rec.weighted and secs < 10
    assert report_criterion(1, ok, f"|grid avg - R(50)| = {rec.discrepancy:.2e} "
                                   f"(limit {1e-8 * rec.weighted:.2e}), {secs:.2f} s")


def test_criterion_02_vaughan_identity():
    t0 = time.perf_counter()
    table = arith.build_prime_table(10**4)
    rng = np.random.default_rng(2)
    worst = 0.0
    for i in range(100):
        alpha = [float(rng.uniform())]
        X = (10, 31, 100)[i % 3]
        parts = expsums.vaughan_decompose(alpha, [1], [1], table, X)
        full = expsums.von_mangoldt_sum(alpha, [1], [1], table)
        worst = max(worst, abs(parts.total - full) / table.psi)
    secs = time.perf_counter() - t0
    ok = worst <= 1e-6 and secs < 60
    assert report_criterion(2, ok, f"max |S1+S2+S3+S4 - F| / psi(P) = {worst:.2e} over 100 draws, {secs:.2f} s")


def _exact_A(system):
    """A(q) from congruence counts taken by a single convolution mod q, so
    multiplicativity is not built in through the Chinese remainder theorem."""

    @lru_cache(maxsize=None)
    def A(q):
        if q == 1:
            return Fraction(1)
        level = Fraction(q**system.t * localdata.count_M_direct(system, q), arith.euler_phi(q) ** system.s)
        return level - sum(A(d) for d in arith.divisors(q)[:-1])

    return A


def test_criterion_03_series_algebra():
    systems = (FOUR_PRIME, QUADRATIC_FIVE, LINEAR_QUADRATIC)
    mult_fail, mult_worst, ident_worst, pairs = 0, 0.0, 0.0, 0
    for sy in systems:
        A = _exact_A(sy)
        for q1 in range(1, 31):
            for q2 in range(q1 + 1, 31):
                if math.gcd(q1, q2) != 1:
                    continue
                pairs += 1
                if A(q1 * q2) != A(q1) * A(q2):
                    mult_fail += 1
                w = localdata.local_factor_A(sy, q1 * q2)
                wp = localdata.local_factor_A(sy, q1) * localdata.local_factor_A(sy, q2)
                if not localdata.close(w, wp, rel=1e-9, floor=1e-15):
                    mult_fail += 1
                scale = max(abs(w), abs(wp))
                if scale > 1e-15:
                    mult_worst = max(mult_worst, abs(w - wp) / scale)
        for q in range(1, 201):
            M, rhs = localdata.divisor_identity_residual(sy, q)
            ident_worst = max(ident_worst, abs(M - rhs) / max(1.0, abs(M)))
    ok = mult_fail == 0 and mult_worst <= 1e-9 and ident_worst <= 1e-9
    assert report_criterion(3, ok, f"{pairs} coprime pairs: exact products equal, float rel err "
                                   f"{mult_worst:.1e}; congruence identity q<=200 rel err {ident_worst:.1e}")


def test_criterion_04_mean_values():
    quad_ok = all(meanvalue.count_J(2, (1, 2), P).count == 2 * P * P - P for P in range(1, 301))
    # J_{1,k}(P) = P for every P <= 1e4 iff x -> (x^k_j) is injective on [1, 1e4]: every
    # histogram bin of the largest P holds one point, and smaller P see a subset
    diag_ok = True
    for k in ((1,), (2,), (1, 2), (1, 2, 3)):
        _, bins, _ = meanvalue.power_sum_histogram(np.arange(1, 10**4 + 1), 1, k)
        diag_ok &= bins.size == 10**4 and bool(np.all(bins == 1))
        diag_ok &= all(meanvalue.count_J(1, k, P).count == P for P in range(1, 10**4 + 1, 97))
    naive_ok = all(meanvalue.count_J(2, (1, 2), P).count == meanvalue.count_J_naive(2, (1, 2), P)
                   for P in range(1, 31))
    prime_ok = True
    for P in (10, 20, 30):
        t = arith.build_prime_table(P)
        for sy in (FOUR_PRIME, QUADRATIC_FIVE, LINEAR_QUADRATIC):
            prime_ok &= counting.brute_force_R(sy, t).unweighted == counting.brute_force_R_naive(sy, t).unweighted
    ok = quad_ok and diag_ok and naive_ok and prime_ok
    assert report_criterion(4, ok, f"2P^2-P for P<=300: {quad_ok}; ell=1 diagonal: {diag_ok}; "
                                   f"meet-in-middle = naive for P<=30: {naive_ok and prime_ok}")


def test_criterion_05_end_to_end_ratio():
    t0 = time.perf_counter()
    P = 10**4
    pred = pipeline.predict_main_term(FOUR_PRIME, P, q_cut=1000, gamma_cut=50.0)
    count = counting.brute_force_R(FOUR_PRIME, arith.build_prime_table(P))
    ratio = count.weighted / pred.value
    secs = time.perf_counter() - t0
    ok = 0.85 <= ratio <= 1.15 and secs < 120
    assert report_criterion(5, ok, f"R(1e4) / (S c_J P^3) = {ratio:.4f} (S = {pred.series:.6f}, "
                                   f"c_J = {pred.c_J:.6f}), {secs:.1f} s")


def test_criterion_06_local_obstruction():
    solv = sysmodel.local_solvability(SUM_OF_SQUARES, 3).solvable
    factor = localdata.euler_factor(SUM_OF_SQUARES, 3).value
    cert = localdata.positivity_certificate(SUM_OF_SQUARES, 50).verdict
    counts = [counting.brute_force_R(SUM_OF_SQUARES, arith.build_prime_table(P)).unweighted
              for P in (2, 10, 100, 1000, 10**4)]
    ok = solv is False and factor == 0 and cert == "zero (local obstruction at 3)" and not any(counts)
    assert report_criterion(6, ok, f"solvable mod 3: {solv}; Euler factor at 3: {factor}; "
                                   f"certificate: {cert!r}; counts up to 1e4: {max(counts)}")


def test_criterion_07_exponential_integral():
    R = oscint.RhoExponent
    cases = []
    for X, b in ((1.0, 1.0), (37.0, 0.85), (1000.0, 0.95)):
        cases.append((oscint.exp_integral_I(X, [0.0], R(b)).value, X**b / b))
    for X, th in ((1.0, 0.3), (250.0, 0.0173), (1000.0, -0.25)):
        exact = (complex(math.cos(2 * math.pi * th * X), math.sin(2 * math.pi * th * X)) - 1) / (2j * math.pi * th)
        cases.append((oscint.exp_integral_I(X, [th], R(1.0)).value, exact))
    rho = R(0.9, 3.5)
    cases.append((oscint.exp_integral_I(40.0, [0.0], rho).value, 40.0**rho.rho / rho.rho))
    closed = max(abs(g - e) / max(1.0, abs(e)) for g, e in cases)
    changes, finite = [], True
    for k in (1, 2, 3):
        audit = oscint.i_bound_audit(20_000, 0, k)
        half = float(audit.ratios[:10_000].max())
        changes.append(abs(audit.sup - half) / half)
        finite &= math.isfinite(audit.sup)
    ok = closed <= 1e-10 and finite and max(changes) < 0.25
    assert report_criterion(7, ok, f"closed forms max err {closed:.1e}; sup change 1e4 -> 2e4 samples "
                                   f"(k=1,2,3): {', '.join(f'{c:.1%}' for c in changes)}")


def _ramanujan_closed_form(q, n):
    g = math.gcd(q, n)
    return sum(arith.mobius(q // d) * d for d in arith.divisors(g))


def test_criterion_08_characters():
    worst = 0.0
    for q in range(1, 101):
        mat = np.array([c.values for c in expsums.characters(q)])
        phi = arith.euler_phi(q)
        units = np.gcd(np.arange(q), q) == 1
        rows = mat @ mat.conj().T
        cols = mat.conj().T @ mat
        expect_cols = np.zeros((q, q))
        for a in np.flatnonzero(units):
            expect_cols[a, a] = phi
        worst = max(worst, float(np.abs(rows - phi * np.eye(len(mat))).max()),
                    float(np.abs(cols - expect_cols).max()))
    ram = 0.0
    for q in range(1, 501):
        allw = expsums.complete_sums_all(q, [1], [1])
        closed = np.array([_ramanujan_closed_form(q, a) for a in range(q)])
        ram = max(ram, float(np.abs(allw - closed).max()))
    ok = worst <= 1e-10 and ram <= 1e-10
    assert report_criterion(8, ok, f"orthogonality q<=100 max err {worst:.1e}; "
                                   f"W vs Ramanujan q<=500 max err {ram:.1e}")


def test_criterion_09_minor_arc_decay():
    rows = arcs.minor_decay_scan(FOUR_PRIME, [10**3, 10**4, 10**5], n_samples=200, seed=0)
    med = [r.median for r in rows]
    ok = med[0] > med[1] > med[2] and all(r.minor_samples == 200 for r in rows)
    assert report_criterion(9, ok, "median |f|/theta at P=1e3,1e4,1e5: " + ", ".join(f"{m:.4f}" for m in med))


def test_criterion_10_series_convergence():
    table = localdata.build_factor_table(FOUR_PRIME, 799)
    A = {q: float(e.A) for q, e in table.entries.items()}

    def partial(Q):
        return math.fsum(A[q] for q in range(1, Q))

    Qs = (50, 100, 200, 400)
    diffs = [abs(partial(2 * Q) - partial(Q)) for Q in Qs]
    expo = -1.0 / (FOUR_PRIME.k_max + 1) + 0.1
    fit = diffs[0] / Qs[0] ** expo
    decreasing = all(a > b for a, b in zip(diffs, diffs[1:]))
    bounded = all(d <= fit * Q**expo for d, Q in zip(diffs, Qs))
    ok = decreasing and bounded
    assert report_criterion(10, ok, "|S(2Q)-S(Q)| at Q=50..400: " + ", ".join(f"{d:.2e}" for d in diffs)
                            + f"; fit {fit:.3g} Q^{expo:.1f}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
