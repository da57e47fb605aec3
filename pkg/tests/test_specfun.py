import math

import numpy as np
import pytest
from scipy import special

from arclosure.specfun import OutOfRange, bessel_i, bessel_k, gamma, iv, kv, wronskian_check


def test_i_small_argument():
    assert bessel_i(1, 1e-4).value / 0.5e-4 == pytest.approx(1, abs=1e-6)
    assert bessel_i(0, 1e-12).value == pytest.approx(1, abs=1e-15)


def test_i_half_integer_closed_form():
    assert iv(0.5, 1.0) == pytest.approx(math.sqrt(2 / math.pi) * math.sinh(1.0), rel=1e-10)


def test_k_small_argument():
    assert 1e-3 * kv(1, 1e-3) == pytest.approx(1, abs=1e-3)


def test_k_half_integer_closed_form():
    assert kv(0.5, 1.0) == pytest.approx(math.sqrt(math.pi / 2) * math.exp(-1.0), rel=1e-10)


def test_k_large_argument():
    lead = math.sqrt(math.pi / 40) * math.exp(-20)
    # leading term alone is off by (4 nu^2 - 1)/(8x) ~ 9%; with that correction it is within 1%
    assert kv(2, 20) == pytest.approx(lead * (1 + 15 / 160), rel=1e-2)
    assert kv(2, 20) == pytest.approx(special.kv(2, 20), rel=1e-10)


@pytest.mark.parametrize("nu,x,tol", [(0.5, 2, 1e-8), (1, 5, 1e-7), (0.25, 0.5, 1e-7)])
def test_wronskian(nu, x, tol):
    assert wronskian_check(nu, x) < tol


def test_against_scipy_grid():
    for nu in (0, 0.25, 0.5, 1, 1.5, 2, 3.7, 10):
        for x in (0.01, 0.3, 1, 4, 12, 15, 15.5, 22, 30):
            assert iv(nu, x) == pytest.approx(special.iv(nu, x), rel=1e-10)
            if nu > 0:
                assert kv(nu, x) == pytest.approx(special.kv(nu, x), rel=1e-9)


def test_recurrence():
    for nu in (1, 1.25, 2.5, 4, 7):
        for x in (0.2, 1, 3, 9, 14, 20, 28):
            lhs = iv(nu - 1, x) - iv(nu + 1, x)
            rhs = 2 * nu / x * iv(nu, x)
            assert lhs == pytest.approx(rhs, rel=1e-8)


def test_monotonicity():
    xs = np.linspace(0.05, 30, 120)
    for nu in (0.25, 1, 3):
        ivals = [iv(nu, x) for x in xs]
        kvals = [kv(nu, x) for x in xs]
        assert all(b > a for a, b in zip(ivals, ivals[1:]))
        assert all(b < a for a, b in zip(kvals, kvals[1:]))


def test_series_asymptotic_overlap():
    for nu in (0, 0.25, 1, 2):
        for x in np.linspace(12, 15, 7):
            a = bessel_i(nu, x, method="series")
            b = bessel_i(nu, x, method="asymptotic")
            assert b.method == "asymptotic"
            assert abs(a.value - b.value) <= 1e-7 * a.value


def test_error_estimates_are_small():
    for nu, x in [(0, 1), (1, 10), (2.5, 20), (10, 30)]:
        assert bessel_i(nu, x).error <= 1e-10
        if nu > 0:
            assert bessel_k(nu, x).error <= 1e-10


def test_gamma_accuracy():
    for z in np.linspace(0.5, 20, 97):
        assert gamma(z) == pytest.approx(math.gamma(z), rel=1e-12)
    assert gamma(-0.5) == pytest.approx(math.gamma(-0.5), rel=1e-12)
    with pytest.raises(ValueError):
        gamma(-2)


@pytest.mark.parametrize("call", [lambda: iv(11, 1), lambda: iv(1, 31), lambda: iv(1, 0), lambda: iv(-0.5, 1),
                                  lambda: kv(0, 1), lambda: kv(1, -1)])
def test_out_of_range(call):
    with pytest.raises(OutOfRange):
        call()
