"""Acceptance checks shared by the test suite and ``tronquee verify``.

Every check returns a :class:`CheckResult`; none of them raises on a
numerical miss. Library errors propagate so the caller can report them.
"""
from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .algebra import p5_terms, relative_residual, GradedSeries
from .asymptotics import (
    InnerModel,
    inner_constants,
    inner_ode_residual,
    poles_from_constants,
    stokes_difference,
    verify_pole_array,
    zeta_pair,
)
from .integrator import PathSpec, integrate_path
from .series_engine import (
    FamilySpec,
    Params5,
    compute_transseries,
    compute_w0,
    exponents,
    linearize,
    reorder_to_inner,
)
from .summation import optimal_truncation_sum, sum_series, sum_transseries, sum_transseries_full
from .transforms import SymmetryMap, apply_state, compose, map_params, map_state

I0_PARAMS = Params5(1, -0.5, 1, -0.5)
III0_PARAMS = Params5(1, -1, 1, 2)

ROUNDING = 16 * np.finfo(float).eps

TOL = {
    "series_residual": 1e-11,
    "sigma": 1e-12,
    "inner_coeff": 1e-12,
    "f2_coeff": 1e-10,
    "inner_ode": 1e-10,
    "zeta": 1e-12,
    "ode_residual": 1e-7,
    "sum_vs_integrate": 1e-8,
    "connection": 1e-6,
    "reciprocal": 1e-9,
    "pole_radius": 2.0,
    "pole_gap": 0.5,
}


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number}: {self.title} ({self.seconds:.1f}s)"


def _timed(number, title):
    def wrap(fn):
        def run(*a, **kw):
            t0 = time.perf_counter()
            passed, detail = fn(*a, **kw)
            return CheckResult(number, title, bool(passed), detail, time.perf_counter() - t0)
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run
    return wrap


def _families():
    return [("I0", I0_PARAMS), ("III0", III0_PARAMS)]


@_timed(1, "series residual and leading coefficients")
def check_series():
    detail, ok = {}, True
    for fam, p in _families():
        spec = FamilySpec.for_params(p, fam)
        w0 = compute_w0(p, spec, 20)
        res = float(np.max(relative_residual(GradedSeries(0, (w0,)), p)[0]))
        if fam == "I0":
            lead = [w0.coeff(-1)]
            expect = [cmath.sqrt(-2 * p.beta)]
        else:
            lead = [w0.coeff(0), w0.coeff(-1)]
            expect = [-1, p.gamma]
        exact = all(complex(a) == complex(b) for a, b in zip(lead, expect))
        detail[fam] = {"residual": res, "leading": [complex(v) for v in lead],
                       "exact": exact}
        ok &= res < TOL["series_residual"] and exact
    return ok, detail


@_timed(2, "exponent sigma from the linearization")
def check_sigma():
    detail, ok = {}, True
    for fam, p, branch, expect in [
        ("I0", I0_PARAMS, 1, I0_PARAMS.gamma + 2 * cmath.sqrt(-2 * I0_PARAMS.beta)),
        ("I0", I0_PARAMS, -1, I0_PARAMS.gamma - 2 * cmath.sqrt(-2 * I0_PARAMS.beta)),
        ("III0", III0_PARAMS, 1, 0.5),
    ]:
        spec = FamilySpec.for_params(p, fam, branch)
        w0 = compute_w0(p, spec, 24)
        _, sigma = exponents(spec, linearize(p, spec, w0))
        err = abs(sigma - expect)
        detail[f"{fam}{'+' if branch > 0 else '-'}"] = {"sigma": sigma, "expected": expect,
                                                        "error": err}
        ok &= err < TOL["sigma"]
    return ok, detail


@_timed(3, "reordered inner polynomials F0, F1, F2 (I0)")
def check_inner_structure():
    p = I0_PARAMS
    spec = FamilySpec.for_params(p, "I0")
    table = compute_transseries(p, spec, 30, 8)
    F = reorder_to_inner(table, 2, "xi")
    m, q = spec.m, spec.q
    f0_bad = max(abs(F[0][0]), abs(F[0][1] - 1), *(abs(c) for c in F[0][2:]))
    f1_tail = max((abs(c) for c in F[1][2:]), default=0.0)
    f2 = F[2][2] if len(F[2]) > 2 else math.nan
    f2_err = abs(f2 - m * (m - q - 1))
    detail = {"F0_deviation": f0_bad, "c1": complex(F[1][1]), "F1_tail": f1_tail,
              "F2_xi2": complex(f2), "F2_expected": complex(m * (m - q - 1)),
              "F2_error": f2_err}
    ok = (f0_bad < TOL["inner_coeff"] and f1_tail < TOL["inner_coeff"]
          and abs(F[1][0]) < TOL["inner_coeff"] and f2_err < TOL["f2_coeff"])
    return ok, detail


@_timed(4, "inner closed forms and singular values")
def check_inner_closed_forms():
    detail, ok = {}, True
    # I0: Phi
    p = I0_PARAMS
    spec = FamilySpec.for_params(p, "I0")
    model = InnerModel.build(p, spec)
    z1, z2 = zeta_pair(p, spec)
    grid = [0.5 * model.mu * cmath.exp(2j * math.pi * (k + 0.5) / 20) for k in range(20)]
    rphi = inner_ode_residual(model, grid)
    c1, c2 = inner_constants(p, spec)
    r1, r2 = poles_from_constants(c1, c2, p.alpha, spec.m)
    zerr = min(max(abs(r1 - z1), abs(r2 - z2)), max(abs(r1 - z2), abs(r2 - z1)))
    detail["Phi"] = {"ode_residual": rphi, "zeta": (z1, z2), "from_constants": (r1, r2),
                     "zeta_error": zerr}
    ok &= rphi < TOL["inner_ode"] and zerr < TOL["zeta"]
    # III0: F0 against the reordered transseries
    p = III0_PARAMS
    spec = FamilySpec.for_params(p, "III0")
    model = InnerModel.build(p, spec)
    grid = [2.0 * cmath.exp(2j * math.pi * (k + 0.5) / 20) for k in range(20)]
    rf0 = inner_ode_residual(model, grid)
    F0 = reorder_to_inner(compute_transseries(p, spec, 30, 8), 0, "xi")[0]
    taylor = [0.0] + [(k + 1) * (-0.25) ** k for k in range(len(F0) - 1)]
    cerr = max(abs(a - b) for a, b in zip(F0, taylor))
    detail["F0"] = {"ode_residual": rf0, "singular_value": model.xi_star,
                    "taylor_error": cerr}
    ok &= rf0 < TOL["inner_ode"] and model.xi_star == -4 and cerr < TOL["inner_coeff"] * 1e2
    return ok, detail


def _ode_residual(p, x, w, wp, wpp):
    terms = p5_terms(w, wp, wpp, p, x)
    return abs(sum(terms)) / max(abs(t) for t in terms)


@_timed(5, "Borel-Pade vs optimal truncation of w0")
def check_summation(radii=(12, 20, 30)):
    detail, ok = {}, True
    for fam, p in _families():
        spec = FamilySpec.for_params(p, fam)
        table = compute_transseries(p, spec, 44, 1)
        for r in radii:
            for sgn in (1, -1):
                x = r * cmath.exp(sgn * 0.25j * math.pi)
                (bp, ebp), = sum_series(table.w0, x)[0]
                opt = optimal_truncation_sum(table.w0, x, strict=False)
                diff = abs(bp - opt.value)
                (w, wp, wpp), _ = sum_transseries_full(table, 0, x)
                res = _ode_residual(p, x, w, wp, wpp)
                # rounding floor: a few ulps of the value itself
                agree = diff <= ebp + opt.err_est + ROUNDING * abs(bp)
                key = f"{fam} |x|={r} arg={'+' if sgn > 0 else '-'}pi/4"
                detail[key] = {"diff": diff, "err_borel": ebp, "err_optimal": opt.err_est,
                               "agree": agree, "ode_residual": res}
                ok &= agree and res < TOL["ode_residual"]
    return ok, detail


@_timed(6, "summed transseries vs integration (III0, C=0.3)")
def check_sum_vs_integrate():
    p = III0_PARAMS
    spec = FamilySpec.for_params(p, "III0")
    table = compute_transseries(p, spec, 44, 12)
    orders = (20, 20)
    w0, dw0, e0, _ = sum_transseries(table, 0.3, 15, orders=orders)
    traj = integrate_path(p, (15, w0, dw0), PathSpec((15 + 0j, 25 + 0j), rtol=1e-13, atol=1e-16))
    _, w1, _ = traj.final_w()
    ws, _, es, method = sum_transseries(table, 0.3, 25, orders=orders)
    diff = abs(w1 - ws)
    return diff < TOL["sum_vs_integrate"], {"diff": diff, "seed_err": e0, "sum_err": es,
                                            "method": method}


@_timed(7, "connection round trip and Stokes jump (III0)")
def check_connection(seeds=(0.2, 0.7)):
    p = III0_PARAMS
    spec = FamilySpec.for_params(p, "III0")
    jump, jerr, ests = stokes_difference(p, spec, seeds=seeds, floor=TOL["connection"])
    detail = {"jump": jump, "jump_spread": abs(ests[0].jump - ests[1].jump)}
    ok = detail["jump_spread"] < TOL["connection"]
    for c, e in zip(seeds, ests):
        miss = abs(e.C_plus - c)
        detail[f"seed {c}"] = {"C_plus": e.C_plus, "C_minus": e.C_minus, "miss": miss,
                               "err": e.err_plus}
        ok &= miss < TOL["connection"] and e.err_plus < TOL["connection"]
    return ok, detail


@_timed(8, "symmetry conjugation")
def check_symmetry():
    p = I0_PARAMS
    spec = FamilySpec.for_params(p, "I0")
    table = compute_transseries(p, spec, 40, 4)
    x0 = 12 + 5j
    w0, dw0, _, _ = sum_transseries(table, 0.5, x0)
    pts = tuple(x0 + 4j * k for k in range(6))
    opts = dict(rtol=1e-13, atol=1e-16)
    tw = integrate_path(p, (x0, w0, dw0), PathSpec(pts, **opts))
    R = SymmetryMap.reciprocal()
    _, v0, dv0 = map_state(R, x0, w0, dw0)
    tv = integrate_path(map_params(R, p), (x0, v0, dv0), PathSpec(pts, **opts))

    def at(traj, x):
        s = min(traj.samples, key=lambda s: abs(s.x - x))
        return s.w_state()[0]
    worst = max(abs(at(tw, x) * at(tv, x) - 1) for x in pts)
    lam = 0.5 + 0.5j
    S, Sinv = SymmetryMap.scale(lam), SymmetryMap.scale(1 / lam)
    ident = (map_params(R, map_params(R, p)) == p
             and map_params(Sinv, map_params(S, p)) == p
             and compose(R, R).is_identity and compose(S, Sinv).is_identity
             and compose(SymmetryMap.reflect(), SymmetryMap.reflect()).is_identity)
    state = (1.3 + 0.2j, 0.7 - 0.1j, 0.25j)
    ident &= apply_state(compose(R, S, R, Sinv), *state) == state
    return worst < TOL["reciprocal"] and ident, {"max |v w - 1|": worst, "identities": ident}


@_timed(9, "pole arrays (III0 C+=-2, I0 C+=1)")
def check_pole_arrays(workers=1):
    detail, ok = {}, True
    p = III0_PARAMS
    spec = FamilySpec.for_params(p, "III0")
    ver = verify_pole_array(p, spec, -2, [5, 10, 15], workers=workers,
                            radius=TOL["pole_radius"])
    g = ver.gaps()
    seq = [g[n] for n in (5, 10, 15)]
    dec = all(a > b for a, b in zip(seq, seq[1:]))
    detail["III0"] = {"best_variant": ver.best_variant, "gaps": g,
                      "all_variants": {v: ver.gaps(v) for v in ("a", "b", "bref")}}
    ok &= dec and all(s < TOL["pole_gap"] for s in seq)
    p = I0_PARAMS
    spec = FamilySpec.for_params(p, "I0")
    ver = verify_pole_array(p, spec, 1, [5, 10], workers=workers, radius=TOL["pole_radius"])
    best = ver.best_variant
    pairs = {}
    for n in (5, 10):
        reps = sorted((r for r in ver.reports if r.n == n and r.variant == best),
                      key=lambda r: r.sub)
        locs = [r.located for r in reps]
        good = (len(reps) == 2 and all(r.located is not None and r.gap <= TOL["pole_radius"]
                                       for r in reps) and locs[0] != locs[1])
        pairs[n] = {"located": locs, "gaps": [r.gap for r in reps], "paired": good}
        ok &= good
    detail["I0"] = {"best_variant": best, "pairs": pairs}
    return ok, detail


@_timed(10, "tri-truncated solution pole-free on left-half-plane rays")
def check_tritronquee(angles=(0.6, 0.75), r0=20.0, r1=50.0):
    detail, ok = {}, True
    for fam, p in _families():
        spec = FamilySpec.for_params(p, fam)
        table = compute_transseries(p, spec, 40, 1)
        for a in angles:
            e = cmath.exp(1j * math.pi * a)
            w0, dw0, _, _ = sum_transseries(table, 0, r0 * e)
            traj = integrate_path(p, (r0 * e, w0, dw0), PathSpec((r0 * e, r1 * e)))
            kinds = [ev.kind for ev in traj.events]
            poles = sum(k in ("PoleBracket", "ChartSwitch") for k in kinds)
            detail[f"{fam} arg={a}pi"] = {"pole_events": poles, "events": kinds}
            ok &= poles == 0
    return ok, detail


ALL_CHECKS = [check_series, check_sigma, check_inner_structure, check_inner_closed_forms,
              check_summation, check_sum_vs_integrate, check_connection, check_symmetry,
              check_pole_arrays, check_tritronquee]
QUICK = [c for c in ALL_CHECKS if c not in (check_connection, check_pole_arrays)]


def run_checks(checks=None, report=print) -> list[CheckResult]:
    out = []
    for chk in checks or ALL_CHECKS:
        res = chk()
        out.append(res)
        if report:
            report(res.line())
    return out
