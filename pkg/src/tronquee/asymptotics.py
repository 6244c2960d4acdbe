"""Connection constants, inner functions and pole arrays.

Conventions used throughout:

* ``xi = C exp(-x) x**(-sigma)`` with ``sigma`` as returned by the series
  engine; ``C`` multiplies block 1 of the table, whose leading
  coefficient is fixed to 1.
* For family I0 the inner variable is ``zeta = C_u exp(-x) x**(-q-2)``
  with ``C_u = C/m``; for III0 it is ``xi`` itself.
* Logarithms are principal.
"""
from __future__ import annotations

import cmath
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .errors import (
    AtSingularity,
    DegenerateArray,
    DegenerateZero,
    InconsistentJump,
    NewtonDiverged,
    NoPoleFound,
    OutsideConvergenceRegion,
    PoleOnApproach,
)
from .integrator import PathSpec, arc_points, integrate_path, locate_pole
from .series_engine import FamilySpec, Params5, compute_transseries
from .summation import sum_series, sum_transseries

log = logging.getLogger(__name__)

VARIANTS = ("a", "b", "bref")
XI_STAR_III0 = -4.0


# ---------------------------------------------------------------------------
# inner functions


def zeta_pair(params: Params5, spec: FamilySpec) -> tuple[complex, complex]:
    """Singular values of the I0 inner function ``Phi``; the ``+`` root first."""
    if spec.family != "I0":
        raise DegenerateArray("zeta pair exists for family I0 only")
    m, q = spec.m, spec.q
    s = m - q - 1
    if 2 * params.alpha == s * s:
        raise DegenerateArray("2 alpha = (m - q - 1)^2: the two arrays merge")
    r = cmath.sqrt(2 * params.alpha)
    return _clean((2 / m) / (s + r)), _clean((2 / m) / (s - r))


def _clean(z: complex) -> complex:
    """Drop signed zeros so principal logarithms land on ``+i pi``."""
    z = complex(z)
    return complex(z.real + 0.0, z.imag + 0.0)


def inner_constants(params: Params5, spec: FamilySpec) -> tuple[complex, complex]:
    """``(C1, C2)`` fixed by analyticity of ``Phi`` at ``zeta = 0``."""
    m, q = spec.m, spec.q
    s = m - q - 1
    d = 2 * params.alpha - s * s
    if d == 0:
        raise DegenerateArray("2 alpha = (m - q - 1)^2")
    return -2 * params.beta * d, -(2 / m) * s / d


def poles_from_constants(C1: complex, C2: complex, alpha: complex, m: complex):
    """Roots of ``8 alpha m^2 / C1^2 - (zeta - C2)^2``, ``+`` root first."""
    r = cmath.sqrt(8 * alpha) * m / C1
    return C2 + r, C2 - r


@dataclass(frozen=True)
class InnerModel:
    family: str
    alpha: complex
    m: complex = 0j
    zeta1: complex | None = None
    zeta2: complex | None = None
    C1: complex | None = None
    C2: complex | None = None
    xi_star: complex | None = None
    mu: float = 0.1

    @classmethod
    def build(cls, params: Params5, spec: FamilySpec) -> "InnerModel":
        if spec.family == "I0":
            z1, z2 = zeta_pair(params, spec)
            C1, C2 = inner_constants(params, spec)
            mu = 0.5 * min(abs(z1), abs(z2))
            return cls("I0", params.alpha, spec.m, z1, z2, C1, C2, None, mu)
        return cls("III0", params.alpha, xi_star=complex(XI_STAR_III0), mu=0.5 * abs(XI_STAR_III0))

    @property
    def singular_values(self) -> tuple:
        if self.family == "I0":
            return (self.zeta1, self.zeta2)
        return (self.xi_star,)


def inner_derivatives(model: InnerModel, z: complex, scale: float = 1.0):
    """``(F, F', F'')`` of the closed-form inner function at ``z``."""
    z = complex(z)
    if model.family == "I0":
        z1, z2 = model.zeta1, model.zeta2
        Q = (z - z1) * (z - z2)
        if abs(Q) < 1e-300:
            raise AtSingularity(f"Phi is singular at {z}")
        Qp = 2 * z - z1 - z2
        K = z1 * z2 * scale
        F = K * z / Q
        Fp = K * (Q - z * Qp) / Q ** 2
        Fpp = K * (-2 * z * Q - 2 * Qp * (Q - z * Qp)) / Q ** 3
        return F, Fp, Fpp
    t = z + 4
    if abs(t) < 1e-300:
        raise AtSingularity("F0 is singular at xi = -4")
    return (scale * 16 * z / t ** 2, scale * 16 * (4 - z) / t ** 3,
            scale * 32 * (z - 8) / t ** 4)


def inner_function(model: InnerModel, z: complex) -> complex:
    """``Phi(zeta)`` (I0) or ``F0(xi)`` (III0)."""
    return inner_derivatives(model, z)[0]


def inner_ode_residual(model: InnerModel, samples, scale: float = 1.0) -> float:
    """Largest absolute residual of the inner ODE over ``samples``.

    ``scale`` multiplies the closed form before substitution; any value other
    than 1 should break the equation (a mutation guard for the checker).
    """
    worst = 0.0
    for z in samples:
        z = complex(z)
        F, Fp, Fpp = inner_derivatives(model, z, scale)
        if model.family == "I0":
            am2 = model.alpha * model.m ** 2
            r = z * z * Fpp + z * Fp + 0.5 * F - am2 * F ** 3 - 1.5 * z * z * Fp * Fp / F
        else:
            r = (z * z * Fpp + z * Fp
                 - z * z * (3 * F - 4) * Fp * Fp / (2 * (F - 2) * (F - 1))
                 - 2 * F * (F - 1) / (F - 2))
        worst = max(worst, abs(r))
    return worst


# ---------------------------------------------------------------------------
# connection constants


@dataclass
class ConnectionEstimate:
    C_plus: complex
    C_minus: complex
    samples_plus: list = field(default_factory=list)
    samples_minus: list = field(default_factory=list)
    err_plus: float = math.inf
    err_minus: float = math.inf
    method: str = "inversion"
    seed: tuple = ()

    @property
    def error(self) -> float:
        return max(self.err_plus, self.err_minus)

    @property
    def jump(self) -> complex:
        return self.C_plus - self.C_minus

    def to_json(self) -> dict:
        enc = lambda z: [complex(z).real, complex(z).imag]  # noqa: E731
        return {
            "C_plus": enc(self.C_plus), "C_minus": enc(self.C_minus),
            "err_plus": self.err_plus, "err_minus": self.err_minus,
            "jump": enc(self.jump), "method": self.method,
            "samples_plus": [[T, enc(c)] for T, c in self.samples_plus],
            "samples_minus": [[T, enc(c)] for T, c in self.samples_minus],
            "seed": [enc(self.seed[0]), self.seed[1], self.seed[2]] if self.seed else [],
        }


def _block_sums(table, x: complex, K: int, orders, subtract: str):
    sums = []
    for k in range(K + 1):
        if k == 0 and subtract == "partial":
            sums.append(_partial_w0(table, x))
            continue
        (val, _), = sum_series(table.block(k), x, None, "borel-pade", orders)[0]
        sums.append(val)
    return sums


def _partial_w0(table, x: complex) -> complex:
    """Partial sum of ``w0`` through the power that the exponential term
    first competes with (``x**-(floor(Re sigma) + 1 - off1)``)."""
    off1 = table.block(1).offset
    last = -(int(math.floor(table.sigma.real)) - off1)
    w0 = table.w0
    return complex(sum(w0.coeff(e) * x ** e for e in range(w0.offset, last - 1, -1)))


def invert_transseries(table, w: complex, x: complex, K: int | None = None, orders=None,
                       subtract: str = "borel") -> complex:
    """Solve ``sum_k C^k E^k S_k(x) = w`` for ``C`` (``E = e^-x x^-sigma``)."""
    K = table.K if K is None else min(K, table.K)
    x = complex(x)
    S = _block_sums(table, x, K, orders, subtract)
    E = cmath.exp(-x) * x ** (-table.sigma)
    coeffs = [S[k] * E ** k for k in range(K + 1)]
    coeffs[0] -= w
    C = -coeffs[0] / coeffs[1]
    for _ in range(50):
        g = sum(c * C ** k for k, c in enumerate(coeffs))
        dg = sum(k * c * C ** (k - 1) for k, c in enumerate(coeffs) if k)
        step = g / dg
        C -= step
        if abs(step) <= 1e-15 * max(1.0, abs(C)):
            break
    return C


def _ratio(table, w: complex, x: complex, orders, subtract: str) -> complex:
    """Leading-order extraction ``(w - S0) x^sigma e^x / x^off1``."""
    S0 = _block_sums(table, x, 0, orders, subtract)[0]
    off1 = table.block(1).offset
    return (w - S0) * x ** table.sigma * cmath.exp(x) / x ** off1


def richardson(samples: list[tuple[float, complex]]) -> tuple[complex, float]:
    """Extrapolate ``c(T) = c_inf + a/T`` from the two largest ``T``."""
    (T1, c1), (T2, c2) = samples[-2], samples[-1]
    cinf = (T2 * c2 - T1 * c1) / (T2 - T1)
    return cinf, max(abs(cinf - c2), abs(c2 - c1))


def _measure(table, traj, T_values, side, extract, orders, subtract):
    out = []
    sgn = 1 if side == "upper" else -1
    for T in T_values:
        target = sgn * 1j * T
        hit = [s for s in traj.samples if abs(s.x - target) < 1e-9 * T]
        if not hit:
            raise RuntimeError(f"trajectory did not record x={target}")
        w, _ = hit[-1].w_state()
        if extract == "inversion":
            c = invert_transseries(table, w, target, orders=orders, subtract=subtract)
        else:
            c = _ratio(table, w, target, orders, subtract)
        out.append((T, c))
    return out


def connection_paths(x0: complex, T_values, cross_radius: float, side: str,
                     chord: float = 0.5) -> tuple[list, list]:
    """Waypoints to ``+iT`` and to ``-iT`` starting from ``x0``.

    The path to the near imaginary half-axis follows ``|x| = |x0|``; the
    path to the far one crosses the real axis on a small arc of radius
    ``cross_radius`` to limit amplification of the recessive mode.
    """
    r0 = abs(x0)
    th0 = cmath.phase(x0)
    sgn = 1 if side == "upper" else -1
    near = arc_points(0, r0, th0, sgn * math.pi / 2, chord)
    far_pts = [x0, cross_radius * cmath.exp(1j * th0)]
    far_pts += arc_points(0, cross_radius, th0, -sgn * math.pi / 2, chord)[1:]

    def up(pts, s):
        last = abs(pts[-1])
        for T in sorted(T_values):
            if T > last + 1e-12:
                pts.append(s * 1j * T)
                last = T
        return pts
    return up(near, sgn), up(far_pts, -sgn)


def estimate_connection(params: Params5, spec: FamilySpec, seed, table=None, *,
                        T_values=(20, 30, 40, 60), N: int = 44, K: int = 12,
                        orders=(20, 20), seed_angle: float = 0.3, cross_radius: float = 8.0,
                        extract: str = "inversion", subtract: str = "borel",
                        rtol: float = 1e-13, atol: float = 1e-16, mu: float = 0.1,
                        path_opts: dict | None = None) -> ConnectionEstimate:
    """Measure ``C+`` and ``C-`` of the solution seeded by ``seed``.

    ``seed = (C_seed, r0, side)``: the solution is the summed transseries
    with constant ``C_seed`` at ``x0 = r0 exp(+-i(pi/2 - seed_angle))``
    (``side`` is ``"upper"`` or ``"lower"``), where ``C_seed`` plays
    ``C+`` or ``C-`` respectively.
    """
    C_seed, r0, side = seed
    if side not in ("upper", "lower"):
        raise ValueError("side must be 'upper' or 'lower'")
    if spec.family == "I0" and spec.q.real <= 0 and subtract == "partial":
        raise ValueError("partial-sum subtraction needs Re q > 0")
    if table is None:
        table = compute_transseries(params, spec, N, K)
    sgn = 1 if side == "upper" else -1
    x0 = r0 * cmath.exp(1j * sgn * (math.pi / 2 - seed_angle))
    xi0 = abs(C_seed * cmath.exp(-x0) * x0 ** (-table.sigma))
    if xi0 >= mu:
        raise OutsideConvergenceRegion(f"|xi(x0)| = {xi0:.3g} >= {mu}")
    w0, dw0, _, _ = sum_transseries(table, C_seed, x0, orders=orders, mu=mu)
    opts = dict(rtol=rtol, atol=atol)
    opts.update(path_opts or {})
    near, far = connection_paths(x0, T_values, cross_radius, side)
    res = {}
    for name, pts, s in (("near", near, side), ("far", far, "lower" if side == "upper" else "upper")):
        traj = integrate_path(params, (x0, w0, dw0), PathSpec(tuple(pts), **opts))
        if traj.brackets():
            raise PoleOnApproach(f"pole bracket on the {name} connection path at "
                                 f"{traj.brackets()[0].x}")
        Ts = [T for T in T_values if any(abs(p - (1j if s == 'upper' else -1j) * T) < 1e-9
                                         for p in pts)]
        res[s] = _measure(table, traj, Ts, s, extract, orders, subtract)
    cp, ep = richardson(res["upper"])
    cm, em = richardson(res["lower"])
    return ConnectionEstimate(cp, cm, res["upper"], res["lower"], ep, em,
                              f"{extract}/{subtract}", (complex(C_seed), r0, side))


def stokes_difference(params: Params5, spec: FamilySpec, seeds=(0.2, 0.7), r0: float = 15.0,
                      table=None, floor: float = 1e-10, **kw):
    """Common ``C+ - C-`` from two seeds; raises InconsistentJump on mismatch.

    Returns ``(jump, err, estimates)``.
    """
    if table is None:
        table = compute_transseries(params, spec, kw.pop("N", 44), kw.pop("K", 12))
    ests = [estimate_connection(params, spec, (c, r0, "upper"), table, **kw) for c in seeds]
    j1, j2 = ests[0].jump, ests[1].jump
    e1 = ests[0].err_plus + ests[0].err_minus
    e2 = ests[1].err_plus + ests[1].err_minus
    if abs(j1 - j2) > 3 * (e1 + e2) + floor:
        raise InconsistentJump(f"jumps {j1} and {j2} differ by {abs(j1 - j2):.2e}")
    w1, w2 = 1 / max(e1, 1e-300), 1 / max(e2, 1e-300)
    return (w1 * j1 + w2 * j2) / (w1 + w2), max(abs(j1 - j2), min(e1, e2)), ests


# ---------------------------------------------------------------------------
# pole arrays


@dataclass(frozen=True)
class PolePrediction:
    n: int
    x: complex
    variant: str
    sub: int = 0  # 1 or 2 for the zeta_1 / zeta_2 arrays of I0, 0 for III0

    def to_json(self):
        return {"n": self.n, "x": [self.x.real, self.x.imag], "variant": self.variant,
                "sub": self.sub}


@dataclass(frozen=True)
class PoleReport:
    n: int
    predicted: complex
    located: complex | None
    gap: float
    variant: str
    sub: int = 0
    note: str = ""

    def csv_row(self):
        loc = self.located if self.located is not None else complex("nan+nanj")
        return [self.n, self.variant, self.sub, repr(self.predicted.real),
                repr(self.predicted.imag), repr(loc.real), repr(loc.imag), repr(self.gap)]


def _slope(spec: FamilySpec) -> complex:
    return -(spec.q + 2) if spec.family == "I0" else -spec.sigma


def predict_pole_array(params: Params5, spec: FamilySpec, C_plus: complex, n_range,
                       variant: str = "b", refine: bool = False) -> list[PolePrediction]:
    """Predicted pole positions.

    ``variant="a"``: the closed forms as printed (I0:
    ``2n pi i + (q+2) ln(2n pi i) + ln C - ln zeta``; III0:
    ``2n pi i - ln(2n pi i)/2 - i pi/2 - ln(-C/2)``). ``variant="b"``:
    the general singularity rule ``2n pi i + a1 ln(2n pi i) + ln C - ln s``
    with ``a1 = -(q+2)`` or ``-1/2`` and ``C`` in the inner normalization.
    ``refine`` (or ``variant="bref"``) solves
    ``x = 2n pi i + a1 ln x + ln C - ln s`` by fixed point iteration.
    """
    C_plus = _clean(C_plus)
    if C_plus == 0:
        raise ValueError("C_plus must be nonzero")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if spec.family == "I0":
        svals = list(enumerate(zeta_pair(params, spec), start=1))
        C_inner = _clean(C_plus / spec.m)
    else:
        svals = [(0, complex(XI_STAR_III0))]
        C_inner = C_plus
    a1 = _slope(spec)
    out = []
    for n in n_range:
        L = cmath.log(2 * n * math.pi * 1j)
        for sub, s in svals:
            if variant == "a":
                if spec.family == "I0":
                    x = 2j * n * math.pi + (spec.q + 2) * L + cmath.log(C_plus) - cmath.log(s)
                else:
                    x = 2j * n * math.pi - 0.5 * L - 0.5j * math.pi - cmath.log(_clean(-C_plus / 2))
            else:
                base = 2j * n * math.pi + cmath.log(C_inner) - cmath.log(s)
                x = base + a1 * L
                if refine or variant == "bref":
                    for _ in range(200):
                        nx = base + a1 * cmath.log(x)
                        if abs(nx - x) < 1e-12:
                            x = nx
                            break
                        x = nx
            out.append(PolePrediction(n, x, variant, sub))
    return out


def inner_variable(spec: FamilySpec, C: complex, x: complex) -> complex:
    """``zeta(x)`` (I0) or ``xi(x)`` (III0) for constant ``C``."""
    if spec.family == "I0":
        return C / spec.m * cmath.exp(-x) * x ** (-spec.q - 2)
    return C * cmath.exp(-x) * x ** (-spec.sigma)


def _dedupe(points, tol=1e-6):
    out = []
    for p in points:
        if all(abs(p - q) > tol * max(1.0, abs(p)) for q in out):
            out.append(p)
    return out


def locate_poles_near(params: Params5, spec: FamilySpec, table, C_plus: complex, targets,
                      *, seed_re: float = 8.0, overshoot: float = 3.0, orders=(12, 12),
                      rtol: float = 1e-12, atol: float = 1e-14, mu: float = 0.1,
                      bracket_radius: float = 1.0, comb=(-1.0, -0.5, 0.0, 0.5, 1.0),
                      merge: float = 0.25) -> tuple[list[complex], list]:
    """Collect located poles near ``targets``.

    For every target (targets closer than ``merge`` share lines) the
    solution is seeded at ``Re x = seed_re`` and integrated leftwards along
    horizontal lines offset by ``comb`` in ``Im x``, ending ``overshoot``
    past the target. Returns ``(poles, notes)``; ``notes`` lists
    DegenerateZero and Newton failures encountered on the way.
    """
    found, notes = [], []
    lines = []
    for tgt in targets:
        for d in comb:
            y = tgt.imag + d
            end = tgt.real - overshoot
            if any(abs(y - y0) < merge and abs(end - e0) < merge for y0, e0 in lines):
                continue
            lines.append((y, end))
    for y, end in lines:
        x0 = complex(max(seed_re, end + 2 + overshoot), y)
        w0, dw0, _, _ = sum_transseries(table, C_plus, x0, orders=orders, mu=mu)
        path = PathSpec((x0, complex(end, y)), rtol=rtol, atol=atol,
                        bracket_radius=bracket_radius)
        traj = integrate_path(params, (x0, w0, dw0), path)
        for br in traj.brackets():
            try:
                z = locate_pole(params, traj, br, radius=2 * bracket_radius + 1)
            except DegenerateZero as exc:
                notes.append(("DegenerateZero", exc.x))
                continue
            except NewtonDiverged as exc:
                notes.append(("NewtonDiverged", str(exc)))
                continue
            found.append(z)
    return _dedupe(found), notes


def _verify_one(args):
    params, spec, table, C_plus, n, radius, opts = args
    preds = {v: predict_pole_array(params, spec, C_plus, [n], v) for v in VARIANTS}
    targets = [p.x for v in VARIANTS for p in preds[v]]
    poles, notes = locate_poles_near(params, spec, table, C_plus, targets, **opts)
    reports = []
    for v in VARIANTS:
        ps = preds[v]
        if spec.family == "I0" and len(ps) == 2:
            assign = _pair_two(ps, poles)
        else:
            assign = [min(poles, key=lambda z: abs(z - p.x)) if poles else None for p in ps]
        for p, loc in zip(ps, assign):
            gap = abs(loc - p.x) if loc is not None else math.inf
            note = ""
            if loc is None or gap > radius:
                note = "NoPoleFound"
                loc, gap = (None, math.inf) if loc is None else (loc, gap)
            reports.append(PoleReport(n, p.x, loc, gap, v, p.sub, note))
    return n, reports, poles, notes


def _pair_two(preds, poles):
    """Conflict-free nearest assignment of two predictions to located poles."""
    if not poles:
        return [None, None]
    if len(poles) == 1:
        return [poles[0], poles[0]]
    best, pair = math.inf, None
    for i, a in enumerate(poles):
        for j, b in enumerate(poles):
            if i == j:
                continue
            cost = abs(a - preds[0].x) + abs(b - preds[1].x)
            if cost < best:
                best, pair = cost, (a, b)
    return list(pair)


@dataclass
class ArrayVerification:
    reports: list
    located: dict
    notes: dict
    best_variant: str

    def gaps(self, variant: str | None = None, sub: int | None = None) -> dict:
        v = variant or self.best_variant
        return {r.n: r.gap for r in self.reports if r.variant == v and (sub is None or r.sub == sub)}


def verify_pole_array(params: Params5, spec: FamilySpec, C_plus: complex, n_range, *,
                      table=None, radius: float = 2.0, workers: int = 1, N: int = 40,
                      K: int = 8, **opts) -> ArrayVerification:
    """Locate the first array of poles and compare with both prediction variants.

    Per-n jobs are independent; with ``workers > 1`` they run in separate
    processes and are reassembled in order of ``n``.
    """
    if table is None:
        table = compute_transseries(params, spec, N, K)
    jobs = [(params, spec, table, complex(C_plus), n, radius, opts) for n in n_range]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_verify_one, jobs))
    else:
        results = [_verify_one(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    reports, located, notes = [], {}, {}
    for n, reps, poles, nts in results:
        reports.extend(reps)
        located[n] = poles
        notes[n] = nts
    totals = {v: sum(r.gap for r in reports if r.variant == v) for v in VARIANTS}
    best = min(VARIANTS, key=lambda v: totals[v])
    for n in n_range:
        if all(r.note == "NoPoleFound" for r in reports if r.n == n and r.variant == best):
            log.warning("%s", NoPoleFound(f"no pole within {radius} of prediction n={n}"))
    return ArrayVerification(reports, located, notes, best)


def close_pairs(poles, max_sep: float = 1.0) -> list[tuple[complex, complex, float]]:
    """Pairs of located poles closer than ``max_sep`` (double-pole evidence)."""
    out = []
    for i, a in enumerate(poles):
        for b in poles[i + 1:]:
            if abs(a - b) < max_sep:
                out.append((a, b, abs(a - b)))
    return out


__all__ = [
    "InnerModel", "ConnectionEstimate", "PolePrediction", "PoleReport", "ArrayVerification",
    "zeta_pair", "inner_constants", "poles_from_constants", "inner_function",
    "inner_derivatives", "inner_ode_residual", "estimate_connection", "stokes_difference",
    "invert_transseries", "richardson", "predict_pole_array", "verify_pole_array",
    "inner_variable", "locate_poles_near", "close_pairs",
]
