"""Summation of divergent series and transseries.

Borel-Pade: the Borel transform ``B(p) = sum a_n p^(n-1)/(n-1)!`` of a
tail ``sum a_n x^-n`` is continued by a Pade approximant and Laplace
transformed along the ray ``arg p = phi``. Derivatives come for free:
the Borel transform of ``d/dx`` is multiplication by ``-p``.
"""
from __future__ import annotations

import cmath
import logging
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import mpmath
import numpy as np
from scipy import integrate, linalg

from .algebra import CSeries
from .errors import (
    InsufficientDepth,
    NoMinimum,
    OutsideConvergenceRegion,
    PadePoleOnRay,
    QuadratureFail,
)

log = logging.getLogger(__name__)

DEFAULT_ORDERS = {"double": (12, 12), "extended": (20, 20)}
DEFAULT_MU = 0.1
POLE_TUBE = 0.02
STOKES_MARGIN = 0.05


class SumValue(NamedTuple):
    value: complex
    err_est: float
    method: str


@dataclass(frozen=True)
class PadeApprox:
    """Rational approximant ``numerator(p) / denominator(p)``.

    Coefficients are stored in increasing powers; ``denominator[0] == 1``.
    """

    numerator: np.ndarray
    denominator: np.ndarray
    L: int
    M: int
    cond: float = 1.0

    def __call__(self, p):
        return np.polyval(self.numerator[::-1], p) / np.polyval(self.denominator[::-1], p)

    def poles(self) -> np.ndarray:
        d = np.trim_zeros(self.denominator[::-1], "f")
        if d.size <= 1:
            return np.zeros(0, dtype=complex)
        return np.roots(d)

    def taylor(self, n: int) -> np.ndarray:
        """First ``n`` Taylor coefficients of the approximant."""
        q = np.zeros(n, dtype=complex)
        q[: min(n, self.denominator.size)] = self.denominator[:n]
        p = np.zeros(n, dtype=complex)
        p[: min(n, self.numerator.size)] = self.numerator[:n]
        out = np.zeros(n, dtype=complex)
        for k in range(n):
            out[k] = p[k] - np.dot(q[1: k + 1], out[k - 1:: -1][:k])
        return out


def pade(coeffs, L: int, M: int, tol: float = 1e-14) -> PadeApprox:
    """Robust ``[L/M]`` Pade approximant of ``sum coeffs[k] p**k``.

    SVD based (Gonnet, Guttel and Trefethen): the degrees are lowered until
    the linearized system has full rank, which removes spurious pole-zero
    pairs. Coefficients of either tier are handled in double precision.
    """
    c = np.array([complex(v) for v in coeffs], dtype=complex)
    if c.size < L + M + 1:
        raise InsufficientDepth(f"[{L}/{M}] Pade needs {L + M + 1} coefficients, have {c.size}")
    c = c[: L + M + 1]
    scale = np.linalg.norm(c)
    ts = tol * scale
    if scale == 0 or np.all(np.abs(c[: L + 1]) <= ts):
        return PadeApprox(np.zeros(1, dtype=complex), np.ones(1, dtype=complex), 0, 0)
    m, n = L, M
    cond = 1.0
    while True:
        if n == 0:
            a = c[: m + 1].copy()
            b = np.ones(1, dtype=complex)
            break
        Z = linalg.toeplitz(c[: m + n + 1], np.r_[c[0], np.zeros(n)])
        Cm = Z[m + 1: m + n + 1, :]
        sv = np.linalg.svd(Cm, compute_uv=False)
        rho = int(np.sum(sv > ts))
        if rho == n:
            cond = float(sv[0] / sv[-1])
            _, _, Vh = np.linalg.svd(Cm)
            b = Vh.conj().T[:, n]
            # reweighting improves the accuracy of the null vector
            D = np.diag(np.abs(b) + np.sqrt(np.finfo(float).eps))
            Q, _ = np.linalg.qr((Cm @ D).conj().T, mode="complete")
            b = D @ Q[:, n]
            b /= np.linalg.norm(b)
            a = Z[: m + 1, : n + 1] @ b
            break
        m -= n - rho
        n = rho
        if m < 0:
            m, n = 0, 0
    lam = int(np.argmax(np.abs(b) > tol))
    b = b[lam:]
    a = a[lam:]
    keep_a = np.nonzero(np.abs(a) > tol * np.linalg.norm(a))[0]
    a = a[: keep_a[-1] + 1] if keep_a.size else np.zeros(1, dtype=complex)
    keep_b = np.nonzero(np.abs(b) > tol)[0]
    b = b[: keep_b[-1] + 1]
    a = a / b[0]
    b = b / b[0]
    return PadeApprox(a, b, a.size - 1, b.size - 1, cond)


def borel_coefficients(s: CSeries) -> list:
    """Taylor coefficients of the Borel transform of a decaying series."""
    if s.offset > -1:
        lead = [s.coeff(e) for e in range(s.offset, -1, -1)]
        if any(abs(v) > 0 for v in lead):
            raise ValueError("borel_pade_sum needs a pure decaying tail (offset <= -1)")
    out = []
    fact = 1
    for n in range(1, -s.last_exponent + 1):
        if n > 1:
            fact *= (n - 1)
        a = s.coeff(-n)
        if isinstance(a, (mpmath.mpc, mpmath.mpf)):
            out.append(a / fact)
        else:
            out.append(complex(a) / fact)
    return out


def _ray_distance(z: complex, phi: float) -> float:
    """Distance from ``z`` to the half-line ``r e^{i phi}``, ``r >= 0``."""
    t = (z * cmath.exp(-1j * phi)).real
    if t <= 0:
        return abs(z)
    return abs(z - t * cmath.exp(1j * phi))


def _laplace(approx: PadeApprox, x: complex, phi: float, power: int) -> tuple[complex, float]:
    """``int_0^{inf e^{i phi}} e^{-x p} p^power B(p) dp`` by adaptive Gauss-Kronrod."""
    e = cmath.exp(1j * phi)
    rate = x * e
    if rate.real <= 0:
        raise QuadratureFail(f"Laplace ray arg {phi:.3f} does not decay for x={x}")
    num = approx.numerator[::-1]
    den = approx.denominator[::-1]

    def f(r):
        p = r * e
        return cmath.exp(-rate * r) * p ** power * (np.polyval(num, p) / np.polyval(den, p)) * e

    split = 1.0 if rate.real < 40 else 40.0 / rate.real
    tot = 0j
    err = 0.0
    for a, b in ((0.0, split), (split, np.inf)):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, abserr = integrate.quad(f, a, b, complex_func=True, epsabs=1e-17,
                                         epsrel=1e-13, limit=200)
        tot += val
        err += abs(abserr)
    if not np.isfinite(tot.real) or not np.isfinite(tot.imag):
        raise QuadratureFail("non-finite Laplace integral")
    return tot, err


def _check_poles(approx: PadeApprox, x: complex, phi: float, tube: float):
    rate = (x * cmath.exp(1j * phi)).real
    reach = 40.0 / rate if rate > 0 else np.inf
    num = approx.numerator[::-1]
    dden = np.polyder(approx.denominator[::-1])
    # residues below this are Froissart doublets; they do not disturb the integral
    floor = 1e-12 * max(1.0, float(np.max(np.abs(approx.numerator))))
    for z in approx.poles():
        if abs(z) < reach + 1 and _ray_distance(z, phi) < tube * (1 + abs(z)):
            res = abs(np.polyval(num, z) / np.polyval(dden, z))
            if res < floor:
                continue
            raise PadePoleOnRay(f"Pade pole {z:.4g} within tube of ray arg {phi:.3f}")


def borel_pade_sum(s: CSeries, x: complex, phi: float, orders: tuple[int, int] | None = None,
                   derivs: int = 0, tube: float = POLE_TUBE):
    """Borel-Pade sum of the decaying series ``s`` at ``x`` along ``arg p = phi``.

    Returns ``(value, err_est)``; with ``derivs > 0`` returns a list of
    ``(value, err_est)`` for the function and its first ``derivs``
    derivatives.
    """
    x = complex(x)
    if orders is None:
        orders = DEFAULT_ORDERS[s.tier]
    L, M = orders
    coeffs = borel_coefficients(s)
    if all(abs(c) == 0 for c in coeffs):
        zero = (0j, 0.0)
        return zero if derivs == 0 else [zero] * (derivs + 1)
    avail = len(coeffs)
    if L + M + 1 > avail:
        M = min(M, (avail - 1) // 2)
        L = avail - 1 - M
    main = pade(coeffs, L, M)
    _check_poles(main, x, phi, tube)
    lower = pade(coeffs, L - 1, max(M - 1, 0)) if L > 1 else None
    out = []
    for d in range(derivs + 1):
        val, qerr = _laplace(main, x, phi, d)
        val *= (-1) ** d
        sens = 0.0
        if lower is not None:
            try:
                v2, _ = _laplace(lower, x, phi, d)
                sens = abs(val - (-1) ** d * v2)
            except QuadratureFail:
                sens = abs(val)
        out.append((val, qerr + sens))
    return out[0] if derivs == 0 else out


def optimal_truncation_sum(s: CSeries, x: complex, strict: bool = True) -> SumValue:
    """Partial sum up to (excluding) the least term.

    ``err_est`` is the modulus of the first omitted term. When the terms are
    still decreasing at the available depth, or never decrease, the result is
    flagged with :class:`NoMinimum` (raised if ``strict``, otherwise returned
    with method ``"optimal-flagged"``).
    """
    t = s.terms(x)
    mags = np.abs(t)
    # the least term among terms beyond the first nonzero one
    nz = np.nonzero(mags)[0]
    if nz.size == 0:
        return SumValue(0j, 0.0, "optimal")
    first = int(nz[0])
    k = first + int(np.argmin(mags[first:]))
    value = complex(np.sum(t[:k]))
    err = float(mags[k])
    flagged = (k == mags.size - 1) or (k == first + 1 and mags[first + 1] >= mags[first])
    if k == first:
        flagged = True
        value = complex(np.sum(t[: first + 1]))
        err = float(mags[first + 1]) if first + 1 < mags.size else float(mags[first])
    if flagged:
        msg = f"no interior least term at |x|={abs(x):.3g} with depth {s.order}"
        if strict:
            raise NoMinimum(msg, value, err)
        return SumValue(value, err, "optimal-flagged")
    return SumValue(value, err, "optimal")


def _split(s: CSeries) -> tuple[CSeries | None, CSeries | None]:
    """Split into the part with exponents >= 0 and the decaying tail."""
    if s.offset < 0:
        return None, s
    if s.last_exponent > -1:
        return s, None
    return CSeries(s.offset, s.coeffs[: s.offset + 1]), CSeries(-1, s.coeffs[s.offset + 1:])


def default_phi(x: complex) -> float:
    """Laplace direction opposite to ``arg x`` (the standard lateral choice)."""
    return -cmath.phase(x)


def sum_series(s: CSeries, x: complex, phi: float | None = None, method: str = "borel-pade",
               orders=None, derivs: int = 0, max_rotations: int = 3):
    """Sum ``s`` (any offset) and optionally its derivatives.

    Returns a list of ``(value, err_est)`` of length ``derivs + 1`` and the
    method actually used.
    """
    x = complex(x)
    if phi is None:
        phi = default_phi(x)
    head, tail = _split(s)
    vals = [[0j, 0.0] for _ in range(derivs + 1)]
    if head is not None:
        h = head
        for d in range(derivs + 1):
            vals[d][0] += complex(h.evaluate(x))
            h = h.d_dx()
    used = method
    if tail is not None:
        res = None
        if method == "borel-pade":
            angle = phi
            # rotate within the same half of the Borel plane if a Pade pole sits on the ray
            sign = -1.0 if phi < 0 else 1.0
            for attempt in range(max_rotations + 1):
                try:
                    res = borel_pade_sum(tail, x, angle, orders, derivs=derivs)
                    break
                except PadePoleOnRay as exc:
                    log.debug("%s; rotating", exc)
                    angle = angle + sign * 0.15 * (attempt + 1) * (-1) ** attempt
                    if (x * cmath.exp(1j * angle)).real <= 0 or angle * sign <= 0:
                        break
            if res is None:
                used = "optimal"
        if res is None:
            used = "optimal"
            tl = tail
            res = []
            for d in range(derivs + 1):
                sv = optimal_truncation_sum(tl, x, strict=False)
                res.append((sv.value, sv.err_est))
                tl = tl.d_dx()
        if derivs == 0 and not isinstance(res, list):
            res = [res]
        for d in range(derivs + 1):
            vals[d][0] += res[d][0]
            vals[d][1] += res[d][1]
    return [tuple(v) for v in vals], used


def sum_transseries(table, C: complex, x: complex, phi: float | None = None,
                    K_used: int | None = None, mu: float = DEFAULT_MU, method: str = "borel-pade",
                    orders=None):
    """Evaluate the Borel summed transseries and its derivative at ``x``.

    ``C`` is the constant of the lateral representation selected by ``phi``:
    ``phi < 0`` (default when ``arg x > 0``) gives the upper representation
    (``C = C+``), ``phi > 0`` the lower one. On the Stokes line with no
    ``phi`` the two lateral sums with the same ``C`` are averaged and
    ``method`` is reported as ``"stokes-average"``.

    Returns ``(w, w_prime, err_est, method)``.
    """
    x = complex(x)
    if phi is None and cmath.phase(x) == 0:
        up = sum_transseries(table, C, x, -0.4, K_used, mu, method, orders)
        dn = sum_transseries(table, C, x, 0.4, K_used, mu, method, orders)
        return ((up[0] + dn[0]) / 2, (up[1] + dn[1]) / 2,
                max(up[2], dn[2]) + abs(up[0] - dn[0]) / 2, "stokes-average")
    if phi is None:
        phi = default_phi(x)
    K = table.K if K_used is None else min(K_used, table.K)
    sigma = table.sigma
    xi = complex(C) * cmath.exp(-x) * x ** (-sigma) if C != 0 else 0j
    if abs(xi) >= mu:
        raise OutsideConvergenceRegion(f"|C e^-x x^-sigma| = {abs(xi):.3g} >= mu = {mu}")
    w = 0j
    wp = 0j
    err = 0.0
    used = method
    last_mag = 0.0
    for k in range(K + 1):
        if k > 0 and xi == 0:
            break
        vals, how = sum_series(table.block(k), x, phi, method, orders, derivs=1)
        (S, eS), (dS, edS) = vals
        if how != method:
            used = how
        xk = xi ** k
        w += xk * S
        wp += xk * (dS - k * (1 + sigma / x) * S)
        err += abs(xk) * (eS + edS)
        last_mag = abs(xk * S)
    if xi != 0 and K > 0:
        err += last_mag * abs(xi) / max(1e-300, 1 - min(abs(xi) / mu, 0.99))
    return w, wp, err, used


def sum_transseries_full(table, C, x, phi=None, K_used=None, mu=DEFAULT_MU, method="borel-pade",
                         orders=None):
    """Like :func:`sum_transseries` but returns ``w, w', w''`` with errors."""
    x = complex(x)
    if phi is None:
        phi = default_phi(x)
    K = table.K if K_used is None else min(K_used, table.K)
    sigma = table.sigma
    xi = complex(C) * cmath.exp(-x) * x ** (-sigma) if C != 0 else 0j
    if abs(xi) >= mu:
        raise OutsideConvergenceRegion(f"|xi| = {abs(xi):.3g} >= mu = {mu}")
    w = wp = wpp = 0j
    err = 0.0
    for k in range(K + 1):
        if k > 0 and xi == 0:
            break
        (S, e0), (S1, e1), (S2, e2) = sum_series(table.block(k), x, phi, method, orders, derivs=2)[0]
        g = -k * (1 + sigma / x)
        gp = k * sigma / x ** 2
        xk = xi ** k
        w += xk * S
        wp += xk * (S1 + g * S)
        wpp += xk * (S2 + 2 * g * S1 + (g * g + gp) * S)
        err += abs(xk) * (e0 + e1 + e2)
    return (w, wp, wpp), err
