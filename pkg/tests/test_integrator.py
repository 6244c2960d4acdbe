import cmath

import numpy as np
import pytest

from tronquee.integrator import PathSpec, integrate_fixed, integrate_path, locate_pole
from tronquee.summation import sum_transseries


@pytest.mark.parametrize("method", ["dopri5", "dop853"])
def test_linear_oracle(method):
    # u'' = -u along a complex segment: u = sin x
    x0, x1 = 0.5 + 0j, 3 + 2j
    if method == "dopri5":
        u, du = integrate_fixed(lambda x, u, d: -u, x0, cmath.sin(x0), cmath.cos(x0), x1)
    else:
        from tronquee.integrator import Trajectory, _segment
        path = PathSpec((x0, x1), method=method, rtol=1e-13, atol=1e-16, R_sw=1e300)
        rhs = lambda x, u, d: -u  # noqa: E731
        _, u, du = _segment(rhs, rhs, "W", x0, x1, cmath.sin(x0), cmath.cos(x0), path, None,
                            fixed_chart=True)
    assert abs(u - cmath.sin(x1)) < 1e-10 and abs(du - cmath.cos(x1)) < 1e-10


def test_reversibility(iii0):
    p, _, table = iii0
    x0 = 15 + 3j
    w, dw, _, _ = sum_transseries(table, 0.5, x0)
    pts = (x0, 18 + 8j, 12 + 10j)
    fwd = integrate_path(p, (x0, w, dw), PathSpec(pts, rtol=1e-13, atol=1e-16))
    xe, we, dwe = fwd.final_w()
    back = integrate_path(p, (xe, we, dwe), PathSpec(pts[::-1], rtol=1e-13, atol=1e-16))
    assert abs(back.final_w()[1] - w) < 1e-10


def test_matches_summation_off_axis(i0):
    p, _, table = i0
    x0, x1 = 14 + 6j, 20 + 12j
    w, dw, _, _ = sum_transseries(table, 0.5, x0)
    tr = integrate_path(p, (x0, w, dw), PathSpec((x0, x1), rtol=1e-13, atol=1e-16))
    ws, _, _, _ = sum_transseries(table, 0.5, x1)
    assert abs(tr.final_w()[1] - ws) < 1e-9


def test_through_poles_with_chart_switch(iii0, tmp_path):
    p, spec, table = iii0
    # C = -2 puts a pole array near Im x = 2 pi n; cross the n = 5 region
    x0 = complex(8, 30.5)
    w, dw, _, _ = sum_transseries(table, -2, x0)
    tr = integrate_path(p, (x0, w, dw), PathSpec((x0, complex(-6, 30.5))))
    kinds = {e.kind for e in tr.events}
    assert "ChartSwitch" in kinds and tr.brackets()
    z = locate_pole(p, tr, tr.brackets()[0])
    assert abs(z - tr.brackets()[0].data["estimate"]) < 1.0
    tr.to_csv(tmp_path / "t.csv")
    header = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert header == "x_re,x_im,chart,u_re,u_im,du_re,du_im,err_est"
    tr.write_events(tmp_path / "e.json")


def test_path_validation():
    with pytest.raises(ValueError):
        PathSpec((1 + 0j,))
    with pytest.raises(ValueError):
        PathSpec((1 + 0j, 0j))
    with pytest.raises(ValueError):
        PathSpec((1 + 0j, 2 + 0j), method="euler")


def test_initial_point_must_match():
    with pytest.raises(ValueError):
        integrate_path((1, -1, 1, 2), (3, -1, 0), PathSpec((4 + 0j, 5 + 0j)))
