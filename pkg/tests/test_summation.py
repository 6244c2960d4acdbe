import cmath
import math

import mpmath
import numpy as np
import pytest

from tronquee.algebra import CSeries
from tronquee.errors import NoMinimum, OutsideConvergenceRegion
from tronquee.summation import (
    borel_pade_sum,
    optimal_truncation_sum,
    pade,
    sum_series,
    sum_transseries,
    sum_transseries_full,
)


def _euler(N=30):
    # sum (-1)^n n! x^(-n-1) is asymptotic to e^x E1(x)
    return CSeries.from_coeffs(-1, [(-1) ** n * math.factorial(n) for n in range(N)])


@pytest.mark.parametrize("x", [5.0, 8 + 3j, 12 - 6j])
def test_borel_pade_against_exponential_integral(x):
    val, err = borel_pade_sum(_euler(), x, -cmath.phase(x), (12, 12))
    ref = complex(mpmath.exp(x) * mpmath.expint(1, x))
    assert abs(val - ref) < 1e-12
    assert err < 1e-8


def test_pade_reproduces_rational_function():
    # 1/(1-p) has the exact [0/1] approximant
    ap = pade([1.0] * 10, 0, 1)
    assert abs(ap(0.3) - 1 / 0.7) < 1e-14
    assert np.allclose(ap.poles(), [1.0])


def test_optimal_truncation_on_euler_series():
    s = _euler(40)
    sv = optimal_truncation_sum(s, 10.0)
    ref = float(mpmath.exp(10) * mpmath.expint(1, 10))
    assert abs(sv.value - ref) < 3 * sv.err_est


def test_no_minimum_flagged():
    s = _euler(4)
    with pytest.raises(NoMinimum) as info:
        optimal_truncation_sum(s, 50.0)
    assert info.value.value is not None
    assert optimal_truncation_sum(s, 50.0, strict=False).method == "optimal-flagged"


def test_zero_constant_equals_series_sum(iii0):
    _, _, table = iii0
    x = 20 + 4j
    w, _, _, _ = sum_transseries(table, 0, x)
    (v, _), = sum_series(table.w0, x)[0]
    assert abs(w - v) < 1e-14


def test_stokes_line_average_is_real(iii0):
    _, _, table = iii0
    w, wp, _, method = sum_transseries(table, 0.3, 25.0)
    assert method == "stokes-average"
    assert abs(w.imag) < 1e-12 and abs(wp.imag) < 1e-12


def test_derivative_consistent(iii0):
    _, _, table = iii0
    x, h = 18 + 6j, 1e-4
    (w, wp, _), _ = sum_transseries_full(table, 0.4, x)
    wph, _, _, _ = sum_transseries(table, 0.4, x + h)
    wmh, _, _, _ = sum_transseries(table, 0.4, x - h)
    assert abs((wph - wmh) / (2 * h) - wp) < 1e-8


def test_outside_region(iii0):
    with pytest.raises(OutsideConvergenceRegion):
        sum_transseries(iii0[2], 50.0, 2 + 1j)
