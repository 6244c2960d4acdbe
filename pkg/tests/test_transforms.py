import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tronquee.algebra import p5_polynomial_residual, relative_residual, GradedSeries
from tronquee.errors import ZeroScale, ZeroState
from tronquee.integrator import PathSpec, integrate_path
from tronquee.series_engine import Params5
from tronquee.summation import sum_transseries
from tronquee.transforms import (
    SymmetryMap,
    apply_params,
    apply_state,
    compose,
    map_params,
    map_series,
    map_state,
)

R, F = SymmetryMap.reciprocal(), SymmetryMap.reflect()
cplx = st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False,
                          allow_infinity=False)


def test_parameter_maps():
    p = Params5(1, -0.5, 1, -0.5)
    assert map_params(R, p) == Params5(0.5, -1, -1, -0.5)
    assert map_params(SymmetryMap.scale(2), p) == Params5(1, -0.5, 2, -2)
    assert map_params(F, p) == Params5(1, -0.5, -1, -0.5)


def test_zero_cases():
    with pytest.raises(ZeroScale):
        SymmetryMap.scale(0)
    with pytest.raises(ZeroState):
        map_state(R, 1.0, 0.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(cplx, cplx, cplx)
def test_involutions_reduce_to_identity(a, b, lam):
    assert compose(R, R).is_identity and compose(F, F).is_identity
    assert compose(R, SymmetryMap.scale(2), R, SymmetryMap.scale(0.5)).is_identity
    p = Params5(a, b, 1, 2)
    assert map_params(R, map_params(R, p)) == p
    state = (a, b, lam)
    assert apply_state(compose(R, R), *state) == tuple(complex(v) for v in state)


@pytest.mark.parametrize("m", [R, F, SymmetryMap.scale(2), SymmetryMap.scale(0.5 + 0.5j)])
def test_series_covariance(m, iii0):
    p, _, table = iii0
    s = map_series(m, table.w0.truncate(20))
    res = relative_residual(GradedSeries(0, (s,)), map_params(m, p))[0]
    assert np.max(res) < 1e-9


@pytest.mark.parametrize("m", [R, F, SymmetryMap.scale(2), SymmetryMap.scale(0.5 + 0.5j)])
def test_solution_conjugation(m, iii0):
    p, _, table = iii0
    x0, x1 = 15 + 3j, 18 + 1j
    w, dw, _, _ = sum_transseries(table, 0.5, x0)
    tr = integrate_path(p, (x0, w, dw), PathSpec((x0, x1), rtol=1e-13, atol=1e-16))
    X0, W0, D0 = map_state(m, x0, w, dw)
    X1, W1, D1 = map_state(m, *tr.final_w())
    tm = integrate_path(map_params(m, p), (X0, W0, D0), PathSpec((X0, X1), rtol=1e-13,
                                                                 atol=1e-16))
    assert abs(tm.final_w()[1] - W1) < 1e-10


def test_apply_params_normal_form():
    p = Params5(1, -1, 1, 2)
    c = compose(SymmetryMap.scale(2), R, F)
    assert apply_params(c, p) == map_params(F, map_params(R, map_params(SymmetryMap.scale(2), p)))
