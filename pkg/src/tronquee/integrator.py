"""Complex-path integration of the fifth Painleve equation.

The state is ``(u, du/dx)`` in one of two charts: ``W`` (``u = w``) or
``V`` (``u = 1/w``, which solves the equation with parameters
``(-beta, -alpha, -gamma, delta)``). The chart flips whenever ``|u|``
exceeds ``R_sw``, so poles of ``w`` show up as simple zeros of ``v``.

Paths are piecewise linear in ``x``; each segment is integrated in its
real arc-length parameter with an embedded Dormand-Prince 5(4) pair
(tableau and dense-output matrix taken from :mod:`scipy`) under PI step
control. ``method="dop853"`` swaps in scipy's 8(7) stepper.
"""
from __future__ import annotations

import cmath
import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.integrate import DOP853, RK45

from .errors import DegenerateZero, NewtonDiverged, NonFiniteState, StepUnderflow

log = logging.getLogger(__name__)

_A = [list(map(float, row)) for row in RK45.A]
_B = list(map(float, RK45.B))
_C = list(map(float, RK45.C))
_E = list(map(float, RK45.E))
_P = [list(map(float, row)) for row in RK45.P]

# PI controller constants (Hairer-Wanner DOPRI5 defaults)
_BETA = 0.04
_EXPO1 = 0.2 - _BETA * 0.75
_SAFE = 0.9
_FACC1 = 5.0   # 1/fac1, the largest allowed shrink
_FACC2 = 0.1   # 1/fac2, the largest allowed growth

Rhs = Callable[[complex, complex, complex], complex]


def make_rhs(params) -> Rhs:
    """``u'' = F(x, u, u')`` for parameter tuple-like ``params``."""
    if hasattr(params, "as_tuple"):
        a, b, g, d = params.as_tuple()
    else:
        a, b, g, d = params

    def rhs(x, w, wp):
        wm1 = w - 1
        return ((0.5 / w + 1 / wm1) * wp * wp - wp / x
                + wm1 * wm1 / (x * x) * (a * w + b / w) + g * w / x
                + d * w * (w + 1) / wm1)

    return rhs


def v_chart_params(params):
    """Parameters of the equation solved by ``1/w``."""
    a, b, g, d = params.as_tuple() if hasattr(params, "as_tuple") else params
    return (-b, -a, -g, d)


def to_other_chart(u: complex, du: complex) -> tuple[complex, complex]:
    """``(u, u') -> (1/u, -u'/u^2)``; the same map in both directions."""
    return 1 / u, -du / (u * u)


def arc_points(center: complex, radius: float, theta0: float, theta1: float,
               max_chord: float = 0.25) -> list[complex]:
    """Polygonal approximation of an arc, endpoints included."""
    length = abs(theta1 - theta0) * radius
    n = max(1, int(math.ceil(length / max_chord)))
    return [center + radius * cmath.exp(1j * (theta0 + (theta1 - theta0) * k / n))
            for k in range(n + 1)]


@dataclass(frozen=True)
class PathSpec:
    """Piecewise-linear path with its integration controls."""

    waypoints: tuple
    rtol: float = 1e-12
    atol: float = 1e-14
    max_step: float = 0.5
    R_sw: float = 10.0
    eps1: float = 1e-3
    method: str = "dopri5"
    detour_radius: float = 0.1
    bracket_radius: float = 1.0
    h_min: float = 1e-11

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.waypoints)
        object.__setattr__(self, "waypoints", pts)
        if len(pts) < 2:
            raise ValueError("a path needs at least two waypoints")
        for p in pts:
            if p == 0:
                raise ValueError("path passes through the fixed singularity x = 0")
        for a, b in zip(pts, pts[1:]):
            if a == b:
                raise ValueError("consecutive waypoints must differ")
        if self.method not in ("dopri5", "dop853"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.R_sw <= 1:
            raise ValueError("R_sw must exceed 1")

    def with_waypoints(self, pts) -> "PathSpec":
        return replace(self, waypoints=tuple(pts))


@dataclass(frozen=True)
class Sample:
    x: complex
    u: complex
    du: complex
    chart: str
    err_est: float = 0.0

    def w_state(self) -> tuple[complex, complex]:
        if self.chart == "W":
            return self.u, self.du
        return to_other_chart(self.u, self.du)


@dataclass(frozen=True)
class Event:
    kind: str  # ChartSwitch | PoleBracket | Failure
    x: complex
    data: dict = field(default_factory=dict)


@dataclass
class Trajectory:
    params: object
    samples: list = field(default_factory=list)
    events: list = field(default_factory=list)

    @property
    def final(self) -> Sample:
        return self.samples[-1]

    def final_w(self) -> tuple[complex, complex, complex]:
        s = self.final
        w, dw = s.w_state()
        return s.x, w, dw

    def brackets(self) -> list[Event]:
        return [e for e in self.events if e.kind == "PoleBracket"]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x_re", "x_im", "chart", "u_re", "u_im", "du_re", "du_im", "err_est"])
            for s in self.samples:
                wr.writerow([repr(s.x.real), repr(s.x.imag), s.chart, repr(s.u.real),
                             repr(s.u.imag), repr(s.du.real), repr(s.du.imag), repr(s.err_est)])

    def events_json(self) -> list:
        def enc(v):
            if isinstance(v, complex):
                return [v.real, v.imag]
            if isinstance(v, tuple):
                return [enc(t) for t in v]
            return v
        return [{"kind": e.kind, "x": enc(e.x), "data": {k: enc(v) for k, v in e.data.items()}}
                for e in self.events]

    def write_events(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.events_json(), fh, indent=1)


# ---------------------------------------------------------------------------
# steppers: both advance y = (u, u') in the real arc-length s of a segment


class _Stall(Exception):
    def __init__(self, s, y):
        self.s = s
        self.y = y


class _Dopri5:
    def __init__(self, f, s0, y0, s_end, h0, rtol, atol, max_step, h_min, cap=None):
        self.f = f
        self.s = s0
        self.y = y0
        self.s_end = s_end
        self.rtol = rtol
        self.atol = atol
        self.max_step = max_step
        self.h_min = h_min
        self.h = min(h0, max_step)
        self.k0 = f(s0, y0)
        self.facold = 1e-4
        self.cap = cap
        self.last = None

    def step(self):
        f = self.f
        s, (y0, y1) = self.s, self.y
        while True:
            h = min(self.h, self.max_step, self.s_end - s)
            if self.cap is not None:
                h = min(h, max(self.cap(self.y), self.h_min * 2))
            if h < self.h_min and self.s_end - s > self.h_min:
                raise _Stall(s, self.y)
            K = [self.k0]
            for i in range(1, 6):
                a = _A[i]
                d0 = y0 + h * sum(a[j] * K[j][0] for j in range(i))
                d1 = y1 + h * sum(a[j] * K[j][1] for j in range(i))
                K.append(f(s + _C[i] * h, (d0, d1)))
            n0 = y0 + h * sum(_B[j] * K[j][0] for j in range(6))
            n1 = y1 + h * sum(_B[j] * K[j][1] for j in range(6))
            k6 = f(s + h, (n0, n1))
            K.append(k6)
            e0 = h * sum(_E[j] * K[j][0] for j in range(7))
            e1 = h * sum(_E[j] * K[j][1] for j in range(7))
            sc0 = self.atol + self.rtol * max(abs(y0), abs(n0))
            sc1 = self.atol + self.rtol * max(abs(y1), abs(n1))
            err = math.sqrt(0.5 * ((abs(e0) / sc0) ** 2 + (abs(e1) / sc1) ** 2))
            if not math.isfinite(err):
                self.h = h * 0.1
                if self.h < self.h_min:
                    raise _Stall(s, self.y)
                continue
            fac11 = err ** _EXPO1 if err > 0 else 0.0
            if err <= 1.0:
                fac = fac11 / self.facold ** _BETA
                fac = max(_FACC2, min(_FACC1, fac / _SAFE))
                self.h = h / fac
                self.facold = max(err, 1e-4)
                self.last = (s, h, (y0, y1), K)
                self.s = s + h if self.s_end - (s + h) > 1e-14 * max(1.0, abs(self.s_end)) else self.s_end
                self.y = (n0, n1)
                self.k0 = k6
                return self.s, self.y, max(abs(e0), abs(e1))
            self.h = h / min(_FACC1, fac11 / _SAFE)

    def dense(self, theta: float) -> tuple[complex, complex]:
        s, h, (y0, y1), K = self.last
        out0, out1 = y0, y1
        for i in range(7):
            c = sum(_P[i][j] * theta ** (j + 1) for j in range(4))
            out0 += h * c * K[i][0]
            out1 += h * c * K[i][1]
        return out0, out1


class _Dop853:
    """Adapter around :class:`scipy.integrate.DOP853` with the same interface."""

    def __init__(self, f, s0, y0, s_end, h0, rtol, atol, max_step, h_min, cap=None):
        def fun(s, y):
            k = f(s, (complex(y[0]), complex(y[1])))
            return np.array(k, dtype=complex)

        self.solver = DOP853(fun, s0, np.array(y0, dtype=complex), s_end, max_step=max_step,
                             rtol=max(rtol, 1e-13), atol=atol, first_step=min(h0, s_end - s0))
        self.h_min = h_min
        self.s_end = s_end
        self.s = s0
        self.y = y0
        self._prev = (s0, y0)
        self._dense = None

    def step(self):
        prev = (self.s, self.y)
        msg = self.solver.step()
        if self.solver.status == "failed":
            raise _Stall(self.s, self.y)
        if msg is not None and self.solver.status != "finished":
            raise _Stall(self.s, self.y)
        self._prev = prev
        self.s = float(self.solver.t)
        self.y = (complex(self.solver.y[0]), complex(self.solver.y[1]))
        self._dense = self.solver.dense_output()
        if self.solver.step_size is not None and self.solver.step_size < self.h_min \
                and self.s < self.s_end:
            raise _Stall(self.s, self.y)
        return self.s, self.y, 0.0

    def dense(self, theta: float):
        s0 = self._prev[0]
        v = self._dense(s0 + theta * (self.s - s0))
        return complex(v[0]), complex(v[1])

    @property
    def last(self):
        return (self._prev[0], self.s - self._prev[0], self._prev[1], None)


_STEPPERS = {"dopri5": _Dopri5, "dop853": _Dop853}


# ---------------------------------------------------------------------------


def _segment(rhs_w, rhs_v, chart, a, b, u, du, path: PathSpec, traj: Trajectory | None,
             fixed_chart: bool = False, h0: float = 1e-3):
    """Integrate from ``a`` to ``b`` (straight line); returns end state.

    Records samples, chart switches and pole brackets into ``traj``.
    Raises :class:`_Stall` carrying the stall position in x.
    """
    L = abs(b - a)
    e = (b - a) / L
    x_of = lambda s: a + s * e  # noqa: E731
    s = 0.0
    while s < L:
        rhs = rhs_w if chart == "W" else rhs_v

        def f(s_, y, rhs=rhs):
            x = x_of(s_)
            return (e * y[1], e * rhs(x, y[0], y[1]))

        # state carried in s-derivative form
        y = (u, du)

        def cap(y_):
            d = abs(y_[0] - 1)
            if d < path.eps1:
                return 0.1 * d / max(abs(y_[1]), 1e-300)
            return math.inf

        st = _STEPPERS[path.method](f, s, y, L, h0, path.rtol, path.atol, path.max_step,
                                    path.h_min, cap if path.method == "dopri5" else None)
        switched = False
        while st.s < L:
            s_prev, y_prev = st.s, st.y
            try:
                s_new, (u, du), err = st.step()
            except _Stall as exc:
                raise _Stall(x_of(exc.s), (chart, exc.y[0], exc.y[1])) from None
            if not (cmath.isfinite(u) and cmath.isfinite(du)):
                raise NonFiniteState(f"non-finite state at x={x_of(s_new)}")
            x_new = x_of(s_new)
            if traj is not None:
                traj.samples.append(Sample(x_new, u, du, chart, err))
                if chart == "V":
                    _scan_bracket(st, x_of, s_prev, y_prev, s_new, traj, path)
            s = s_new
            h0 = getattr(st, "h", h0)
            if not fixed_chart and abs(u) > path.R_sw:
                nu, ndu = to_other_chart(u, du)
                new_chart = "V" if chart == "W" else "W"
                if traj is not None:
                    traj.events.append(Event("ChartSwitch", x_new, {"from": chart, "to": new_chart}))
                    traj.samples.append(Sample(x_new, nu, ndu, new_chart, 0.0))
                u, du, chart = nu, ndu, new_chart
                switched = True
                break
        if not switched:
            break
    return chart, u, du


def _scan_bracket(st, x_of, s0, y0, s1, traj: Trajectory, path: PathSpec):
    """Record a PoleBracket when the closest approach to a zero of ``v``
    along the path lies inside the step just taken."""
    v0, dv0 = y0
    if dv0 == 0:
        return
    x0, x1 = x_of(s0), x_of(s1)
    z = x0 - v0 / dv0
    tau = ((z - x0) / (x1 - x0)).real
    if not (0.0 <= tau < 1.0):
        return
    v, dv = st.dense(tau)
    if dv == 0:
        return
    xc = x0 + tau * (x1 - x0)
    z = xc - v / dv
    if abs(z - xc) < path.bracket_radius:
        traj.events.append(Event("PoleBracket", xc, {"v": v, "dv": dv, "estimate": z}))


def _detour(x_stall: complex, direction: complex, r: float, side: int = 1) -> list[complex]:
    """Semicircle of radius ``r`` around ``x_stall + r*direction``."""
    c = x_stall + r * direction
    th = cmath.phase(direction)
    return arc_points(c, r, th + math.pi, th + math.pi - side * math.pi, max_chord=r / 2)[1:]


def integrate_path(params, init, path: PathSpec) -> Trajectory:
    """Integrate from ``init = (x0, w, w')`` along ``path``.

    ``x0`` must equal the first waypoint. The state may start in either
    chart; it is moved to ``V`` immediately if ``|w| > R_sw``.
    """
    x0, w, dw = (complex(v) for v in init)
    if x0 != path.waypoints[0]:
        raise ValueError("initial x must equal the first waypoint")
    if not (cmath.isfinite(w) and cmath.isfinite(dw)):
        raise NonFiniteState("initial state is not finite")
    rhs_w = make_rhs(params)
    rhs_v = make_rhs(v_chart_params(params))
    traj = Trajectory(params)
    chart, u, du = "W", w, dw
    if abs(w) > path.R_sw:
        u, du = to_other_chart(w, dw)
        chart = "V"
    traj.samples.append(Sample(x0, u, du, chart, 0.0))
    pts = list(path.waypoints)
    i = 0
    detours = 0
    while i < len(pts) - 1:
        a, b = pts[i], pts[i + 1]
        try:
            chart, u, du = _segment(rhs_w, rhs_v, chart, a, b, u, du, path, traj)
            i += 1
        except _Stall as exc:
            xs = exc.s
            chart, u, du = exc.y
            detours += 1
            if detours > 20:
                raise StepUnderflow(f"repeated stalls near x={xs}", xs) from None
            direction = (b - a) / abs(b - a)
            r = path.detour_radius
            if abs(b - xs) <= 2 * r:
                raise StepUnderflow(f"step underflow at x={xs} too close to waypoint", xs) from None
            traj.events.append(Event("Failure", xs, {"reason": "step controller stalled",
                                                     "chart": chart, "u": u, "detour_radius": r}))
            log.info("step stall at x=%s (chart %s, u=%s); detouring", xs, chart, u)
            if traj.samples[-1].x != xs:
                traj.samples.append(Sample(xs, u, du, chart, 0.0))
            pts = pts[:i] + [xs] + _detour(xs, direction, r) + pts[i + 1:]
    return traj


# ---------------------------------------------------------------------------


def _rhs_for(params, chart):
    return make_rhs(params if chart == "W" else v_chart_params(params))


def integrate_fixed(rhs: Rhs, x0: complex, u: complex, du: complex, x1: complex,
                    rtol: float = 1e-13, atol: float = 1e-16, max_step: float = 0.5,
                    h0: float = 1e-3):
    """Integrate a single straight segment in a fixed chart (no switching)."""
    path = PathSpec((x0, x1), rtol=rtol, atol=atol, max_step=max_step, R_sw=1e300)
    _, u, du = _segment(rhs, rhs, "W", complex(x0), complex(x1), u, du, path, None,
                        fixed_chart=True, h0=h0)
    return u, du


def _hermite(x0, v0, d0, x1, v1, d1, t):
    """Cubic Hermite value and derivative at ``x0 + t (x1 - x0)``."""
    h = x1 - x0
    t2, t3 = t * t, t * t * t
    val = ((2 * t3 - 3 * t2 + 1) * v0 + (t3 - 2 * t2 + t) * h * d0
           + (-2 * t3 + 3 * t2) * v1 + (t3 - t2) * h * d1)
    der = ((6 * t2 - 6 * t) * v0 / h + (3 * t2 - 4 * t + 1) * d0
           + (-6 * t2 + 6 * t) * v1 / h + (3 * t2 - 2 * t) * d1)
    return val, der


def locate_pole(params, traj: Trajectory | None, bracket: Event, rhs_v: Rhs | None = None,
                tol: float = 1e-9, max_iter: int = 20, radius: float | None = None,
                dv_min: float = 1e-8, near: float = 1e-3) -> complex:
    """Refine a PoleBracket to a zero of ``v = 1/w``.

    Newton steps ``x <- x - v/v'`` with re-integration of the V-chart
    equation between iterates until the correction drops below ``near``.
    The field has a removable ``0/0`` at ``v = 0`` that double precision
    cannot evaluate right at the zero, so the last iterations integrate
    *through* the estimate in one step and read ``v`` and ``v'`` there from
    the cubic Hermite interpolant; the final pass doubles as the
    confirmation that ``|v| < tol``. ``rhs_v`` overrides the V-chart field
    (manufactured tests).
    """
    if bracket.kind != "PoleBracket":
        raise ValueError("locate_pole needs a PoleBracket event")
    if rhs_v is None:
        rhs_v = make_rhs(v_chart_params(params))
    radius = radius if radius is not None else 2.0
    x0 = complex(bracket.x)
    x, v, dv = x0, complex(bracket.data["v"]), complex(bracket.data["dv"])

    def advance(xa, va, dva, xb):
        return integrate_fixed(rhs_v, xa, va, dva, xb, rtol=1e-13, atol=1e-16 * abs(dva),
                               h0=abs(xb - xa))

    def check(z):
        if abs(z - x0) > radius or not cmath.isfinite(z):
            raise NewtonDiverged(f"Newton iterate {z} left the search disk around {x0}")

    for _ in range(max_iter):
        if abs(dv) < dv_min:
            raise DegenerateZero(f"v' nearly vanishes ({abs(dv):.2e}) near x={x}", x)
        z = x - v / dv
        check(z)
        if abs(z - x) < near:
            break
        v, dv = advance(x, v, dv, z)
        x = z
    else:
        raise NewtonDiverged(f"no convergence after {max_iter} Newton steps near {x0}")
    if v == 0:
        return x
    vm = v
    for _ in range(4):
        # step past z by a non-symmetric margin so no node sits on the zero
        far = z + 0.73 * (z - x) + near * (z - x) / abs(z - x)
        v2, dv2 = advance(x, v, dv, far)
        t = ((z - x) / (far - x)).real
        vm, dvm = _hermite(x, v, dv, far, v2, dv2, t)
        if abs(dvm) < dv_min:
            raise DegenerateZero(f"v' nearly vanishes ({abs(dvm):.2e}) at x={z}", z)
        step = vm / dvm
        z = z - step
        check(z)
        if abs(vm) < 1e-3 * tol or abs(step) < 1e-15 * max(1.0, abs(z)):
            break
    if abs(vm) >= tol:
        raise NewtonDiverged(f"|v| = {abs(vm):.2e} at the refined point {z}")
    return z
