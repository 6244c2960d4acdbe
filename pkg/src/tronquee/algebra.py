"""Truncated series in 1/x and graded transseries arithmetic.

A :class:`CSeries` stores ``sum_n c_n x**(offset - n)`` for ``n = 0..N``.
Coefficients beyond ``N`` are *unknown*, not zero, so every binary
operation truncates its result to the depth both operands can vouch for.
A :class:`GradedSeries` is a polynomial in the exponential scale
``xi = C exp(-x) x**(-sigma)`` whose coefficients are :class:`CSeries`.

Two coefficient tiers are supported: ``"double"`` (``complex128``) and
``"extended"`` (``mpmath.mpc`` in numpy object arrays, about 34 digits).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import mpmath
import numpy as np

from .errors import TruncationExhausted, ZeroLeadingCoefficient

TIERS = ("double", "extended")
EXTENDED_DPS = 34


def set_extended_precision(dps: int = EXTENDED_DPS) -> None:
    """Raise the global mpmath working precision used by the extended tier."""
    mpmath.mp.dps = max(mpmath.mp.dps, dps)


def coeff_array(values, tier: str = "double") -> np.ndarray:
    if tier == "double":
        return np.array([complex(v) for v in values], dtype=complex)
    if tier == "extended":
        set_extended_precision()
        out = np.empty(len(values), dtype=object)
        for i, v in enumerate(values):
            out[i] = mpmath.mpc(v)
        return out
    raise ValueError(f"unknown precision tier {tier!r}")


def tier_of(arr: np.ndarray) -> str:
    return "extended" if arr.dtype == object else "double"


def _zeros(n: int, dtype) -> np.ndarray:
    if dtype == object:
        out = np.empty(n, dtype=object)
        out[:] = mpmath.mpc(0)
        return out
    return np.zeros(n, dtype=complex)


def _common_dtype(a: np.ndarray, b: np.ndarray):
    return object if (a.dtype == object or b.dtype == object) else complex


def _scalar(c, dtype):
    return mpmath.mpc(c) if dtype == object else complex(c)


@dataclass(frozen=True, eq=False)
class CSeries:
    """Truncated series ``sum_{n=0}^{N} coeffs[n] * x**(offset - n)``."""

    offset: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs)
        if c.dtype != object:
            c = c.astype(complex)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a non-empty 1-D sequence")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "offset", int(self.offset))

    # construction -----------------------------------------------------
    @classmethod
    def from_coeffs(cls, offset: int, coeffs: Iterable, tier: str = "double") -> "CSeries":
        return cls(offset, coeff_array(list(coeffs), tier))

    @classmethod
    def zero(cls, last_exponent: int, tier: str = "double") -> "CSeries":
        """Canonical zero series known through ``x**last_exponent``."""
        return cls(last_exponent, coeff_array([0], tier))

    @classmethod
    def monomial(cls, exponent: int, order: int, coeff=1, tier: str = "double") -> "CSeries":
        return cls(exponent, coeff_array([coeff] + [0] * order, tier))

    # basic properties -------------------------------------------------
    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @property
    def last_exponent(self) -> int:
        """Smallest exponent whose coefficient is known."""
        return self.offset - self.order

    @property
    def tier(self) -> str:
        return tier_of(self.coeffs)

    def coeff(self, exponent: int):
        """Coefficient of ``x**exponent`` (zero above the offset)."""
        if exponent < self.last_exponent:
            raise TruncationExhausted(
                f"x^{exponent} is below the validity depth x^{self.last_exponent}")
        if exponent > self.offset:
            return _scalar(0, self.coeffs.dtype)
        return self.coeffs[self.offset - exponent]

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def normalize(self, tol: float = 0.0) -> "CSeries":
        """Strip leading zeros so that ``coeffs[0] != 0``.

        Entries with ``|c| <= tol`` count as zero. An all-zero series becomes
        the canonical zero known through the same exponent.
        """
        for i, c in enumerate(self.coeffs):
            if abs(c) > tol:
                return CSeries(self.offset - i, self.coeffs[i:]) if i else self
        return CSeries(self.last_exponent, self.coeffs[-1:] * 0)

    def truncate(self, order: int) -> "CSeries":
        if order > self.order:
            raise TruncationExhausted(f"cannot extend depth {self.order} to {order}")
        return CSeries(self.offset, self.coeffs[: order + 1])

    def truncate_below(self, last_exponent: int) -> "CSeries":
        """Drop coefficients of exponents smaller than ``last_exponent``."""
        if last_exponent < self.last_exponent:
            raise TruncationExhausted(
                f"series only known through x^{self.last_exponent}, asked x^{last_exponent}")
        if last_exponent > self.offset:
            return CSeries.zero(last_exponent, self.tier)
        return self.truncate(self.offset - last_exponent)

    def to_tier(self, tier: str) -> "CSeries":
        if tier == self.tier:
            return self
        if tier == "double":
            return CSeries(self.offset, np.array([complex(c) for c in self.coeffs]))
        return CSeries(self.offset, coeff_array(list(self.coeffs), tier))

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, GradedSeries):
            return NotImplemented
        if not isinstance(other, CSeries):
            return self._add_scalar(other)
        top = max(self.offset, other.offset)
        last = max(self.last_exponent, other.last_exponent)
        dtype = _common_dtype(self.coeffs, other.coeffs)
        out = _zeros(top - last + 1, dtype)
        for s in (self, other):
            hi = s.offset
            n = hi - last + 1
            if n > 0:
                out[top - hi: top - hi + n] = out[top - hi: top - hi + n] + s.coeffs[:n]
        return CSeries(top, out)

    __radd__ = __add__

    def _add_scalar(self, c):
        if c == 0:
            return self
        if self.last_exponent > 0:
            return self
        top = max(self.offset, 0)
        out = _zeros(top - self.last_exponent + 1, self.coeffs.dtype)
        out[top - self.offset:] = self.coeffs
        out[top] = out[top] + _scalar(c, self.coeffs.dtype)
        return CSeries(top, out)

    def __neg__(self):
        return CSeries(self.offset, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, CSeries):
            if isinstance(other, GradedSeries):
                return NotImplemented
            return CSeries(self.offset, self.coeffs * _scalar(other, self.coeffs.dtype))
        n = min(self.order, other.order)
        a = self.coeffs[: n + 1]
        b = other.coeffs[: n + 1]
        if a.dtype != b.dtype:
            a = a.astype(object) if a.dtype != object else a
            b = b.astype(object) if b.dtype != object else b
        prod = np.convolve(a, b)[: n + 1]
        return CSeries(self.offset + other.offset, prod)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, CSeries):
            return self * other.invert()
        return self * (1 / _scalar(other, self.coeffs.dtype))

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = None
        base = self
        while n:
            if n & 1:
                result = base if result is None else result * base
            n >>= 1
            if n:
                base = base * base
        return result if result is not None else one(self.order, self.tier)

    def add_term(self, exponent: int, c) -> "CSeries":
        """Add the exact monomial ``c * x**exponent``."""
        if exponent < self.last_exponent:
            return self
        return self + CSeries.monomial(exponent, exponent - self.last_exponent, c, self.tier)

    def shift(self, j: int) -> "CSeries":
        """Multiply by ``x**j``."""
        return CSeries(self.offset + j, self.coeffs)

    def invert(self) -> "CSeries":
        return series_invert(self)

    def d_dx(self) -> "CSeries":
        return d_dx(self)

    # evaluation / io --------------------------------------------------
    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        z = 1 / x
        acc = 0
        for c in self.coeffs[::-1]:
            acc = acc * z + c
        return acc * x ** self.offset

    def terms(self, x) -> np.ndarray:
        """Individual terms ``c_n x**(offset-n)`` as complex numbers."""
        x = complex(x)
        return np.array([complex(c) * x ** (self.offset - n) for n, c in enumerate(self.coeffs)])

    def allclose(self, other: "CSeries", rtol=1e-12, atol=0.0) -> bool:
        d = (self - other)
        scale = max(float(np.max(np.abs(self.coeffs.astype(complex)))),
                    float(np.max(np.abs(other.coeffs.astype(complex)))))
        return bool(np.all(np.abs(d.coeffs.astype(complex)) <= atol + rtol * scale))

    def to_json(self) -> dict:
        return {"offset": self.offset,
                "coeffs": [[float(complex(c).real), float(complex(c).imag)] for c in self.coeffs]}

    @classmethod
    def from_json(cls, data: dict, tier: str = "double") -> "CSeries":
        vals = [complex(re, im) for re, im in data["coeffs"]]
        return cls.from_coeffs(data["offset"], vals, tier)

    def __repr__(self):
        head = ", ".join(f"{complex(c):.6g}" for c in self.coeffs[:4])
        more = ", ..." if self.order >= 4 else ""
        return f"CSeries(offset={self.offset}, order={self.order}, [{head}{more}])"


def one(order: int, tier: str = "double") -> CSeries:
    return CSeries.monomial(0, order, 1, tier)


def series_mul(a: CSeries, b: CSeries) -> CSeries:
    return a * b


def series_invert(a: CSeries) -> CSeries:
    """Multiplicative inverse, truncated to the depth of ``a``."""
    a = a.normalize()
    c = a.coeffs
    if c[0] == 0:
        raise ZeroLeadingCoefficient("series has no invertible leading term at its working depth")
    n = c.size
    out = _zeros(n, c.dtype)
    inv0 = 1 / c[0]
    out[0] = inv0
    for k in range(1, n):
        out[k] = -np.dot(c[1: k + 1], out[k - 1:: -1][:k]) * inv0
    return CSeries(-a.offset, out)


def d_dx(a: CSeries) -> CSeries:
    exps = np.arange(a.offset, a.offset - a.order - 1, -1)
    if a.coeffs.dtype == object:
        new = np.array([int(e) * c for e, c in zip(exps, a.coeffs)], dtype=object)
    else:
        new = exps * a.coeffs
    return CSeries(a.offset - 1, new)


# ---------------------------------------------------------------------------
# graded series


@dataclass(frozen=True, eq=False)
class GradedSeries:
    """``sum_{k=0}^{K} xi**k * blocks[k]`` with ``xi = C e^{-x} x^{-sigma}``.

    A ``None`` block is an exact zero. ``K = len(blocks) - 1`` is the
    truncation order in ``xi``.
    """

    sigma: complex
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(self.blocks)
        if not blocks:
            raise ValueError("need at least block 0")
        for b in blocks:
            if b is not None and not isinstance(b, CSeries):
                raise TypeError("blocks must be CSeries or None")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "sigma", complex(self.sigma))

    @property
    def K(self) -> int:
        return len(self.blocks) - 1

    def block(self, k: int) -> CSeries | None:
        return self.blocks[k]

    def truncate(self, K: int) -> "GradedSeries":
        if K > self.K:
            raise TruncationExhausted(f"cannot extend graded order {self.K} to {K}")
        return GradedSeries(self.sigma, self.blocks[: K + 1])

    def _check(self, other: "GradedSeries"):
        if other.sigma != self.sigma:
            raise ValueError("graded series with different sigma cannot be combined")

    def __add__(self, other):
        if isinstance(other, GradedSeries):
            self._check(other)
            K = min(self.K, other.K)
            out = []
            for a, b in zip(self.blocks[: K + 1], other.blocks[: K + 1]):
                out.append(b if a is None else (a if b is None else a + b))
            return GradedSeries(self.sigma, out)
        if other == 0:
            return self
        b0 = self.blocks[0]
        if b0 is None:
            raise TruncationExhausted("cannot add a scalar to an exactly-zero block without depth")
        return GradedSeries(self.sigma, (b0 + other,) + self.blocks[1:])

    __radd__ = __add__

    def __neg__(self):
        return GradedSeries(self.sigma, [None if b is None else -b for b in self.blocks])

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, GradedSeries):
            self._check(other)
            K = min(self.K, other.K)
            out = [None] * (K + 1)
            for i, a in enumerate(self.blocks[: K + 1]):
                if a is None:
                    continue
                for j, b in enumerate(other.blocks[: K + 1 - i]):
                    if b is None:
                        continue
                    p = a * b
                    out[i + j] = p if out[i + j] is None else out[i + j] + p
            return GradedSeries(self.sigma, out)
        if isinstance(other, CSeries):
            return GradedSeries(self.sigma, [None if b is None else b * other for b in self.blocks])
        return GradedSeries(self.sigma, [None if b is None else b * other for b in self.blocks])

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 1:
            raise ValueError("only positive integer powers are supported")
        out = self
        for _ in range(n - 1):
            out = out * self
        return out

    def shift(self, j: int) -> "GradedSeries":
        return GradedSeries(self.sigma, [None if b is None else b.shift(j) for b in self.blocks])

    def d_dx(self) -> "GradedSeries":
        return graded_d_dx(self)

    def to_json(self) -> dict:
        return {"sigma": [self.sigma.real, self.sigma.imag],
                "blocks": [None if b is None else b.to_json() for b in self.blocks]}

    @classmethod
    def from_json(cls, data: dict, tier: str = "double") -> "GradedSeries":
        s = complex(*data["sigma"])
        return cls(s, [None if b is None else CSeries.from_json(b, tier) for b in data["blocks"]])


def graded_d_dx(a: GradedSeries) -> GradedSeries:
    """Derivative using ``d/dx xi**k = -k (1 + sigma/x) xi**k``."""
    out = []
    for k, b in enumerate(a.blocks):
        if b is None:
            out.append(None)
        elif k == 0:
            out.append(d_dx(b))
        else:
            out.append(d_dx(b) - k * (b + a.sigma * b.shift(-1)))
    return GradedSeries(a.sigma, out)


# ---------------------------------------------------------------------------
# the fifth Painleve equation with denominators cleared


def _mulx(obj, j: int, x):
    if j == 0:
        return obj
    if isinstance(obj, (CSeries, GradedSeries)):
        return obj.shift(j)
    return obj * x ** j


def p5_terms(w, wp, wpp, params, x=None) -> list:
    """The six additive terms of ``2 x^2 w (w-1) * (P_V rhs - w'')``, negated.

    Their sum is the cleared residual ``P(x, w, w', w'')``. ``w, wp, wpp``
    may be numbers (then ``x`` is required), :class:`CSeries` or
    :class:`GradedSeries`.
    """
    a, b, g, d = params.alpha, params.beta, params.gamma, params.delta
    w_m1 = w - 1
    ww1 = w * w_m1
    w2 = w * w
    return [
        _mulx(2 * ww1 * wpp, 2, x),
        _mulx(-(3 * w - 1) * (wp * wp), 2, x),
        _mulx(2 * ww1 * wp, 1, x),
        -2 * (w_m1 * w_m1 * w_m1) * (a * w2 + b),
        _mulx(-2 * g * w2 * w_m1, 1, x),
        _mulx(-2 * d * w2 * (w + 1), 2, x),
    ]


def p5_cleared(w, wp, wpp, params, x=None):
    terms = p5_terms(w, wp, wpp, params, x)
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total


def p5_rhs(x, w, wp, params):
    """Right side of the rational form, ``w''`` as a function of ``(x, w, w')``."""
    a, b, g, d = params.alpha, params.beta, params.gamma, params.delta
    return ((1 / (2 * w) + 1 / (w - 1)) * wp * wp - wp / x
            + (w - 1) ** 2 / x ** 2 * (a * w + b / w) + g * w / x
            + d * w * (w + 1) / (w - 1))


def p5_polynomial_residual(W: GradedSeries, params, depth: int | None = None) -> GradedSeries:
    """Cleared residual ``P(x, W, W', W'')`` of a graded candidate solution.

    ``depth`` optionally demands that every nonzero residual block be known
    to at least that many terms; :class:`TruncationExhausted` otherwise.
    """
    if isinstance(W, CSeries):
        W = GradedSeries(0, (W,))
    Wp = graded_d_dx(W)
    Wpp = graded_d_dx(Wp)
    R = p5_cleared(W, Wp, Wpp, params)
    if depth is not None:
        for k, blk in enumerate(R.blocks):
            if blk is not None and blk.order < depth:
                raise TruncationExhausted(
                    f"residual block {k} only known to depth {blk.order} < {depth}")
    return R


def residual_scale(W: GradedSeries, params) -> GradedSeries:
    """Blockwise max modulus of the six residual terms, for relative checks."""
    if isinstance(W, CSeries):
        W = GradedSeries(0, (W,))
    Wp = graded_d_dx(W)
    Wpp = graded_d_dx(Wp)
    terms = p5_terms(W, Wp, Wpp, params)
    R = p5_cleared(W, Wp, Wpp, params)
    out = []
    for k, rb in enumerate(R.blocks):
        if rb is None:
            out.append(None)
            continue
        mag = np.zeros(rb.order + 1)
        for t in terms:
            tb = t.blocks[k]
            if tb is None:
                continue
            for n in range(rb.order + 1):
                e = rb.offset - n
                if tb.last_exponent <= e <= tb.offset:
                    mag[n] = max(mag[n], abs(complex(tb.coeffs[tb.offset - e])))
        out.append(CSeries(rb.offset, mag.astype(complex)))
    return GradedSeries(W.sigma, out)


def relative_residual(W: GradedSeries, params) -> list[np.ndarray]:
    """Per-block arrays of ``|residual coeff| / max |term coeff|`` at each order."""
    R = p5_polynomial_residual(W, params)
    S = residual_scale(W, params)
    out = []
    for rb, sb in zip(R.blocks, S.blocks):
        if rb is None:
            out.append(np.zeros(0))
            continue
        r = np.abs(rb.coeffs.astype(complex))
        s = np.abs(sb.coeffs.astype(complex))
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(s > 0, r / np.where(s > 0, s, 1), np.where(r > 0, np.inf, 0.0))
        out.append(rel)
    return out


def dumps_series(s: CSeries) -> str:
    return json.dumps(s.to_json())


def loads_series(text: str, tier: str = "double") -> CSeries:
    return CSeries.from_json(json.loads(text), tier)


def random_series(rng: np.random.Generator, offset: int, order: int, lead=None,
                  tier: str = "double") -> CSeries:
    vals = rng.normal(size=order + 1) + 1j * rng.normal(size=order + 1)
    if lead is not None:
        vals[0] = lead
    return CSeries.from_coeffs(offset, vals, tier)


__all__ = [
    "CSeries", "GradedSeries", "TIERS", "coeff_array", "d_dx", "dumps_series",
    "graded_d_dx", "loads_series", "one", "p5_cleared", "p5_polynomial_residual",
    "p5_rhs", "p5_terms", "random_series", "relative_residual", "residual_scale",
    "series_invert", "series_mul", "set_extended_precision",
]
