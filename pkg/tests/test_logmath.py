import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from annealed_ising.logmath import LogValue, log_binom, log_cosh, log_double_factorial_odd

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False).filter(lambda x: abs(x) > 1e-6)


@given(finite, finite)
def test_logvalue_addition_matches_float(x, y):
    s = LogValue.from_float(x) + LogValue.from_float(y)
    assert s.value() == pytest.approx(x + y, rel=1e-9, abs=1e-9 * (abs(x) + abs(y)))


@given(finite, finite)
def test_logvalue_product(x, y):
    assert (LogValue.from_float(x) * LogValue.from_float(y)).value() == pytest.approx(x * y, rel=1e-12)


def test_logvalue_cancellation_gives_zero():
    z = LogValue.from_float(3.0) + LogValue.from_float(-3.0)
    assert z.sign == 0 and z.value() == 0.0


def test_logvalue_huge_magnitudes():
    big = LogValue.from_log(5000.0)
    assert (big + big).log_abs == pytest.approx(5000.0 + math.log(2))


@pytest.mark.parametrize("n,k,expected", [(5, 2, 10), (10, 0, 1), (7, 7, 1), (-1, 0, 1), (3, 5, 0), (4, -1, 0)])
def test_log_binom(n, k, expected):
    val = log_binom(n, k)
    assert (math.exp(val) if np.isfinite(val) else 0.0) == pytest.approx(expected)


@pytest.mark.parametrize("n,expected", [(-1, 1), (1, 1), (3, 3), (5, 15), (7, 105), (13, 135135)])
def test_double_factorial(n, expected):
    assert math.exp(log_double_factorial_odd(n)) == pytest.approx(expected, rel=1e-12)


def test_double_factorial_rejects_even():
    with pytest.raises(ValueError):
        log_double_factorial_odd(4)


def test_log_cosh_no_overflow():
    x = np.array([-1000.0, -1.0, 0.0, 2.0, 1000.0])
    ref = np.log(np.cosh(np.clip(x, -700, 700)))
    np.testing.assert_allclose(log_cosh(x)[1:-1], ref[1:-1], rtol=1e-14)
    assert log_cosh(np.array([1000.0]))[0] == pytest.approx(1000.0 - math.log(2))
