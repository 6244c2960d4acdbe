import cmath

import numpy as np
import pytest

from tronquee.errors import DegenerateBranch, InvalidParameters
from tronquee.series_engine import (
    FamilySpec,
    Params5,
    TransseriesTable,
    cache_key,
    cached_transseries,
    compute_transseries,
    compute_w0,
    reorder_to_inner,
)

from conftest import I0, III0


def test_i0_leading_coefficients_frozen():
    w0 = compute_w0(I0, FamilySpec.for_params(I0, "I0"), 8)
    assert w0.offset == -1
    np.testing.assert_allclose(w0.coeffs[:5], [1, -3, 12.5, -65.5, 410.875], rtol=1e-13)


def test_iii0_leading_coefficients_frozen():
    w0 = compute_w0(III0, FamilySpec.for_params(III0, "III0"), 8)
    np.testing.assert_allclose(w0.coeffs[:5], [-1, 1, -0.5, -6.75, 6.875], rtol=1e-13)


def test_table_residual_small(i0, iii0):
    for _, _, table in (i0, iii0):
        assert table.max_relative_residual() < 1e-9


def test_block_one_normalized(i0, iii0):
    for _, spec, table in (i0, iii0):
        assert table.block(1).coeffs[0] == 1
        assert table.sigma == spec.sigma


def test_second_branch_sigma():
    spec = FamilySpec.for_params(I0, "I0", -1)
    table = compute_transseries(I0, spec, 20, 1)
    assert abs(table.sigma - (I0.gamma - 2 * cmath.sqrt(-2 * I0.beta))) < 1e-12


def test_inner_reordering_values(i0):
    F = reorder_to_inner(i0[2], 2, "xi")
    assert abs(F[1][1] - (-9.5)) < 1e-12
    assert abs(F[2][2] - (-3)) < 1e-10


def test_invalid_parameters():
    with pytest.raises(InvalidParameters):
        Params5(0, 1, 1, 1)
    with pytest.raises(InvalidParameters):
        FamilySpec.for_params(Params5(1, 1, 0, 1), "I0")
    with pytest.raises(InvalidParameters):
        FamilySpec.for_params(I0, "II")


def test_k_must_be_positive():
    with pytest.raises(InvalidParameters):
        compute_transseries(III0, FamilySpec.for_params(III0, "III0"), 10, 0)


def test_cache_key_separates_tiers():
    spec = FamilySpec.for_params(III0, "III0")
    assert cache_key(III0, spec, 20, 2, "double") != cache_key(III0, spec, 20, 2, "extended")


def test_cache_round_trip(tmp_path):
    spec = FamilySpec.for_params(III0, "III0")
    cold = cached_transseries(III0, spec, 16, 2, tmp_path)
    warm = cached_transseries(III0, spec, 16, 2, tmp_path)
    assert cold.to_json() == warm.to_json()
    again = TransseriesTable.from_json(warm.to_json())
    assert np.array_equal(again.block(2).coeffs, cold.block(2).coeffs)


@pytest.mark.parametrize("alpha", [1, 2, 0.3 + 0.2j])
def test_f2_constant_term_tracks_alpha(alpha):
    p = Params5(alpha, -0.5, 1, -0.5)
    spec = FamilySpec.for_params(p, "I0")
    F2 = reorder_to_inner(compute_transseries(p, spec, 30, 4), 2, "xi")[2]
    m, q = spec.m, spec.q
    assert abs(F2[0] - (-0.5 * m * m + 1.5 * q * q - alpha + 0.5)) < 1e-10
