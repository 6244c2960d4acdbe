import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tronquee.algebra import (
    CSeries,
    GradedSeries,
    dumps_series,
    loads_series,
    p5_cleared,
    p5_rhs,
    p5_terms,
    random_series,
)
from tronquee.errors import TruncationExhausted, ZeroLeadingCoefficient
from tronquee.series_engine import Params5

seeds = st.integers(0, 2**32 - 1)


def _pair(seed, order=10):
    rng = np.random.default_rng(seed)
    # leading coefficients of modulus in [1, 2]: division stays well conditioned
    lead = lambda: rng.uniform(1, 2) * np.exp(2j * np.pi * rng.uniform())  # noqa: E731
    a = random_series(rng, 0, order, lead=lead())
    b = random_series(rng, -1, order, lead=lead())
    return a, b


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_division_undoes_multiplication(seed):
    a, b = _pair(seed)
    assert ((a * b) / b).allclose(a, rtol=1e-10)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_product_rule(seed):
    a, b = _pair(seed)
    lhs = (a * b).d_dx()
    rhs = a.d_dx() * b + a * b.d_dx()
    assert lhs.allclose(rhs.truncate(lhs.order), rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(5, 50), st.floats(-3, 3))
def test_evaluation_is_a_ring_map(seed, r, t):
    a, b = _pair(seed, 6)
    x = r * np.exp(1j * t)
    # truncation error is far below the tolerance for |x| >= 5 and depth 6
    assert abs((a * b)(x) - a(x) * b(x)) < 1e-3 * abs(a(x) * b(x))
    assert abs(sum(a.terms(x)) - a(x)) < 1e-12 * max(1, abs(a(x)))


def test_geometric_inverse():
    s = CSeries.from_coeffs(0, [1, -1] + [0] * 8)  # 1 - 1/x
    inv = s.invert()
    assert np.allclose(inv.coeffs, np.ones(10))


def test_zero_lead_cannot_invert():
    with pytest.raises(ZeroLeadingCoefficient):
        CSeries.from_coeffs(0, [0, 0, 0]).invert()


def test_coefficient_below_depth():
    s = CSeries.from_coeffs(-1, [1, 2, 3])
    assert s.coeff(-3) == 3 and s.coeff(2) == 0
    with pytest.raises(TruncationExhausted):
        s.coeff(-4)


def test_json_round_trip_is_exact():
    rng = np.random.default_rng(1)
    s = random_series(rng, 2, 12)
    t = loads_series(dumps_series(s))
    assert t.offset == s.offset and np.array_equal(t.coeffs, s.coeffs)


def test_extended_tier_keeps_digits():
    third = mpmath.mpf(1) / 3
    s = CSeries.from_coeffs(0, [1, third], "extended")
    assert s.tier == "extended"
    assert abs((s * s).coeffs[1] - 2 * third) < mpmath.mpf(10) ** -30


def test_graded_product_mixes_blocks():
    a = GradedSeries(0.5, (CSeries.from_coeffs(0, [1, 0, 0]), CSeries.from_coeffs(0, [1, 0, 0])))
    sq = a * a
    assert sq.block(1).coeffs[0] == 2 and sq.block(0).coeffs[0] == 1


def test_cleared_form_matches_rational_form():
    p = Params5(0.7, -0.3 + 0.1j, 1.2, -0.5)
    x, w, wp = 3.0 + 1j, 0.4 - 0.2j, 0.1 + 0.3j
    wpp = p5_rhs(x, w, wp, p)
    assert abs(p5_cleared(w, wp, wpp, p, x)) < 1e-13 * max(abs(t) for t in p5_terms(w, wp, wpp, p, x))
