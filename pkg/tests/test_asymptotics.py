import cmath
import math

import pytest

from tronquee.asymptotics import (
    InnerModel,
    close_pairs,
    estimate_connection,
    inner_ode_residual,
    inner_variable,
    invert_transseries,
    predict_pole_array,
    richardson,
    zeta_pair,
)
from tronquee.errors import AtSingularity, DegenerateArray
from tronquee.series_engine import FamilySpec, Params5
from tronquee.summation import sum_transseries


def test_zeta_pair_frozen(i0):
    p, spec, _ = i0
    z1, z2 = zeta_pair(p, spec)
    assert abs(z1 - (-1.2612038749637415)) < 1e-14
    assert abs(z2 - (-0.4530818393219729)) < 1e-14


def test_merged_arrays_are_degenerate():
    # 2 alpha = (m - q - 1)^2 with m = 1, q = 3: alpha = 4.5
    p = Params5(4.5, -0.5, 1, -0.5)
    with pytest.raises(DegenerateArray):
        zeta_pair(p, FamilySpec.for_params(p, "I0"))


def test_inner_residual_detects_wrong_scale(i0, iii0):
    for p, spec, _ in (i0, iii0):
        model = InnerModel.build(p, spec)
        grid = [0.3 * cmath.exp(0.7j * k) for k in range(20)]
        assert inner_ode_residual(model, grid) < 1e-10
        assert inner_ode_residual(model, grid, scale=1.01) > 1e-4


def test_inner_singularity(iii0):
    model = InnerModel.build(*iii0[:2])
    with pytest.raises(AtSingularity):
        inner_ode_residual(model, [-4.0])


def test_richardson_exact_on_model():
    samples = [(T, 2 + 1j + (0.3 - 0.1j) / T) for T in (20, 30, 40, 60)]
    c, err = richardson(samples)
    assert abs(c - (2 + 1j)) < 1e-14


def test_inversion_round_trip(iii0):
    _, _, table = iii0
    x = 9 + 14j
    w, _, _, _ = sum_transseries(table, 0.37 - 0.2j, x)
    assert abs(invert_transseries(table, w, x) - (0.37 - 0.2j)) < 1e-9


def test_predictions_solve_their_own_equation(iii0):
    p, spec, _ = iii0
    for pr in predict_pole_array(p, spec, -2, [5, 10], "bref"):
        rhs = 2j * math.pi * pr.n + cmath.log(-2) - cmath.log(-4) - 0.5 * cmath.log(pr.x)
        assert abs(pr.x - rhs) < 1e-10
        # the inner variable sits on its singular value there
        assert abs(inner_variable(spec, -2, pr.x) - (-4)) < 1e-9


def test_i0_predictions_come_in_pairs(i0):
    p, spec, _ = i0
    preds = predict_pole_array(p, spec, 1, [5], "b")
    assert sorted(q.sub for q in preds) == [1, 2]


def test_variant_validation(iii0):
    p, spec, _ = iii0
    with pytest.raises(ValueError):
        predict_pole_array(p, spec, -2, [5], "c")
    with pytest.raises(ValueError):
        predict_pole_array(p, spec, 0, [5], "b")


def test_close_pairs():
    pairs = close_pairs([1j, 1.1j, 5j], 0.5)
    assert len(pairs) == 1 and abs(pairs[0][2] - 0.1) < 1e-12


def test_single_seed_round_trip(iii0):
    p, spec, table = iii0
    est = estimate_connection(p, spec, (0.5, 15.0, "upper"), table, orders=(12, 12),
                              T_values=(20, 30))
    assert abs(est.C_plus - 0.5) < 1e-5
    assert abs(est.jump - (-0.7381654035016j)) < 1e-5


def test_second_pole_near_iii0_array_point(iii0):
    from tronquee.asymptotics import verify_pole_array
    p, spec, table = iii0
    ver = verify_pole_array(p, spec, -2, [5], table=table)
    pairs = close_pairs(ver.located[5], 0.5)
    assert len(pairs) == 1 and 0.1 < pairs[0][2] < 0.3
    assert ver.gaps("bref")[5] < 0.1
