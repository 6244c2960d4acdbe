import pytest

from tronquee.series_engine import FamilySpec, Params5, compute_transseries

I0 = Params5(1, -0.5, 1, -0.5)
III0 = Params5(1, -1, 1, 2)


@pytest.fixture(scope="session")
def i0():
    spec = FamilySpec.for_params(I0, "I0")
    return I0, spec, compute_transseries(I0, spec, 40, 6)


@pytest.fixture(scope="session")
def iii0():
    spec = FamilySpec.for_params(III0, "III0")
    return III0, spec, compute_transseries(III0, spec, 40, 6)
