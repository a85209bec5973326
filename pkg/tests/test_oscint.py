import cmath
import math

import numpy as np
import pytest

from diagprimes import oscint, sysmodel
from diagprimes.errors import DomainError

R = oscint.RhoExponent


def test_power_integral_closed_form():
    # int_0^X x^{b-1} dx = X^b / b
    for X, b in [(1.0, 1.0), (10.0, 0.8), (500.0, 0.9)]:
        got = oscint.exp_integral_I(X, [0.0], R(b)).value
        assert got == pytest.approx(X**b / b, rel=1e-10)


def test_linear_phase_closed_form():
    # int_0^X e(theta x) dx = (e(theta X) - 1) / (2 pi i theta)
    for X, th in [(1.0, 0.3), (100.0, 0.0173), (1000.0, -0.25)]:
        exact = (cmath.exp(2j * math.pi * th * X) - 1) / (2j * math.pi * th)
        got = oscint.exp_integral_I(X, [th], R(1.0)).value
        assert abs(got - exact) <= 1e-10 * max(1.0, abs(exact))


def test_log_twist_closed_form():
    # int_0^X x^{rho-1} dx = X^rho / rho with rho = b + 2 pi i tau
    rho = R(0.9, 3.5)
    got = oscint.exp_integral_I(40.0, [0.0], rho).value
    exact = 40.0**rho.rho / rho.rho
    assert abs(got - exact) <= 1e-10 * abs(exact)


def test_quadratic_phase_against_scipy_oracle():
    from scipy.integrate import quad
    X, th = 30.0, [0.01, -0.002]
    f = lambda x, part: getattr(cmath.exp(2j * math.pi * (th[0] * x + th[1] * x * x)), part)
    ref = quad(f, 0, X, args=("real",), limit=500, epsabs=1e-13)[0] + 1j * quad(
        f, 0, X, args=("imag",), limit=500, epsabs=1e-13)[0]
    assert oscint.exp_integral_I(X, th, R(1.0)).value == pytest.approx(ref, abs=1e-10)


def test_domain_checks():
    with pytest.raises(DomainError):
        oscint.exp_integral_I(0.5, [0.1], R(1.0))
    with pytest.raises(DomainError):
        oscint.exp_integral_I(2.0, [math.nan], R(1.0))
    with pytest.raises(DomainError):
        oscint.exp_integral_I(2.0, [0.1, 0.1, 0.1], R(0.5))
    with pytest.raises(DomainError):
        oscint.i_bound_audit(10, 0, 2)


def test_audit_prefix_property():
    a = oscint.i_bound_audit(100, 7, 2)
    b = oscint.i_bound_audit(150, 7, 2)
    assert np.array_equal(a.ratios, b.ratios[:100])
    assert a.sup <= b.sup


def test_unit_profile_linear():
    # int_0^1 e(g y) dy
    g = 2.7
    exact = (cmath.exp(2j * math.pi * g) - 1) / (2j * math.pi * g)
    assert oscint.unit_profile([g], [1], [1]) == pytest.approx(exact, abs=1e-12)


def test_singular_integral_four_prime():
    sy = sysmodel.make_system([1, 1, -1, -1], [1])
    est = oscint.singular_integral_normalized(sy, 20.0)
    assert est.value == pytest.approx(2 / 3, abs=5e-4)
    assert abs(est.imag) < 1e-8


def test_ladder_converges():
    sy = sysmodel.make_system([1, 1, -1, -1], [1])
    lad = oscint.gamma_ladder(sy, 20.0)
    diffs = [abs(b.value - a.value) for a, b in zip(lad, lad[1:])]
    assert diffs == sorted(diffs, reverse=True)
    assert oscint.ladder_to_csv(lad).splitlines()[0] == "gamma_cut,estimate,error"


def test_qmc_method_is_seeded():
    sy = sysmodel.make_system([1, 1, -1, -1], [1])
    a = oscint.singular_integral_normalized(sy, 10.0, method="qmc", budget=2e5, seed=1)
    b = oscint.singular_integral_normalized(sy, 10.0, method="qmc", budget=2e5, seed=1)
    assert a.value == b.value
    assert a.value == pytest.approx(2 / 3, abs=0.02)
