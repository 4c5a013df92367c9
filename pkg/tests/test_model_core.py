import math

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bergman_lab.model_core import (
    R_MAX,
    DomainError,
    ModelParams,
    delta_p,
    lemma2_constants,
    log_coeff_sq,
    log_factorial,
    region_partition,
)


@pytest.mark.parametrize("kw", [
    dict(p=1), dict(p=2, r=0.0), dict(p=2, r=R_MAX), dict(p=2, r=0.1),
    dict(p=2, b=0.0), dict(p=2, b=1.0), dict(p=2, gamma=0.0), dict(p=2, gamma=0.5),
])
def test_params_reject_invalid(kw):
    with pytest.raises(DomainError):
        ModelParams(**kw)


def test_params_defaults():
    m = ModelParams(20)
    assert m.r == pytest.approx(math.exp(-3.0))
    assert (m.b, m.gamma) == (0.5, 0.25)
    assert m.delta == 3
    assert m.with_p(40).p == 40


def test_log_coeff_sq_examples():
    assert log_coeff_sq(2, 1) == pytest.approx(-math.log(2 * math.pi), abs=1e-15)
    assert log_coeff_sq(2, 5) == pytest.approx(math.log(5 / (2 * math.pi)), abs=1e-15)
    exact = mpmath.log(mpmath.mpf(3**9) / (2 * mpmath.pi * 40320))
    assert log_coeff_sq(10, 3) == pytest.approx(float(exact), abs=1e-14)
    for p in (2, 7, 100, 500):
        assert log_coeff_sq(p, 2) - log_coeff_sq(p, 1) == pytest.approx((p - 1) * math.log(2.0), abs=1e-12)


@pytest.mark.parametrize("p,l", [(1, 1), (2, 0), (2, -3), (2, 1.5)])
def test_log_coeff_sq_domain(p, l):
    with pytest.raises(DomainError):
        log_coeff_sq(p, l)


@pytest.mark.parametrize("p,l", [(3, 7), (25, 13), (120, 999), (400, 12345), (500, 10**7)])
def test_log_coeff_sq_relative_accuracy(p, l):
    # big-integer numerator and factorial, logs taken at 40 digits
    with mpmath.workdps(40):
        ref = mpmath.log(mpmath.mpf(l) ** (p - 1)) - mpmath.log(2 * mpmath.pi * math.factorial(p - 2))
    assert abs(log_coeff_sq(p, l) - float(ref)) <= 1e-14 * max(1.0, abs(float(ref)))


@given(st.integers(2, 500), st.integers(2, 10_000))
def test_recurrence(p, m):
    d = log_coeff_sq(p, m) - log_coeff_sq(p, m - 1)
    assert abs(d - (p - 1) * math.log1p(1.0 / (m - 1))) <= 1e-12


def test_log_factorial_against_integers():
    for n in range(171):
        assert abs(log_factorial(n) - math.log(math.factorial(n))) <= 1e-13 * max(1.0, math.log(math.factorial(n)))
    with pytest.raises(DomainError):
        log_factorial(-1)


def test_delta_examples():
    r3 = math.exp(-3.0)
    assert delta_p(2, r3) == 0
    assert delta_p(20, r3) == 3
    assert delta_p(22, 0.05) == 3
    assert delta_p(8, r3) == 1  # 6/6 sits exactly on an integer


@given(st.integers(2, 10_000), st.floats(min_value=1e-6, max_value=R_MAX * 0.999))
def test_delta_floor_characterization(p, r):
    d = delta_p(p, r)
    L = abs(math.log(r))
    slack = 1e-9 * p
    assert 2 * d * L <= p - 2 + slack
    assert p - 2 < 2 * (d + 1) * L + slack


def test_lemma_constants():
    lc = lemma2_constants(math.exp(-3.0))
    assert lc.alpha_prime == pytest.approx(1 / 12, rel=1e-15)
    assert lc.a_prime == pytest.approx(6.0, rel=1e-15)
    expected = math.exp(3.0) * (6.0 - math.log(4.0)) ** 6
    assert lc.c_prime == pytest.approx(expected, rel=1e-13)
    assert lc.c_prime == pytest.approx(193723.69, rel=1e-7)


@given(st.floats(min_value=1e-12, max_value=R_MAX * 0.999))
def test_lemma_constants_product(r):
    lc = lemma2_constants(r)
    assert lc.alpha_prime * lc.a_prime == pytest.approx(0.5, rel=4e-16)
    assert lc.c_prime > 0


def test_region_partition_examples():
    rp = region_partition(100, 0.5, 0.25)
    assert rp.outer.lower == pytest.approx(0.5 * math.exp(-(100**0.25)), rel=1e-14)
    rp2 = region_partition(2, 0.5, 0.25)
    assert rp2.inner.lower == 0.0 and rp2.inner.upper == pytest.approx(2 * math.exp(-2))
    assert rp2.inner.upper / rp2.middle.lower == pytest.approx(2.0, rel=1e-15)
    assert rp.middle.upper == rp.outer.lower
    assert rp.outer.contains(rp.outer.lower) and not rp.middle.contains(rp.middle.upper)


@given(st.integers(2, 2000), st.floats(0.01, 0.99), st.floats(0.01, 0.49))
def test_region_covering(p, b, gamma):
    rp = region_partition(p, b, gamma)
    # radial endpoints underflow past p ~ 745; the t-ranges stay exact
    if p <= 700:
        for iv in (rp.inner, rp.middle, rp.outer):
            assert 0.0 <= iv.lower < 1.0 and 0.0 < iv.upper <= 1.0
        assert rp.inner.upper > rp.middle.lower
    inner, middle = rp.t_range("inner"), rp.t_range("middle")
    assert inner[0] < middle[1]  # inner and middle overlap, so they cover (0, b e^{-p^gamma})
    assert middle[0] > 0.0
    lo_t, hi_t = rp.t_range("outer")
    assert lo_t == 0.0 and hi_t == pytest.approx(-2.0 * (math.log(b) - p**gamma))
