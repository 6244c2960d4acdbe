"""Symmetries of the fifth Painleve equation.

* ``Reciprocal``: ``1/w`` solves the equation with ``(-beta, -alpha, -gamma, delta)``.
* ``Scale(lam)``: ``w(lam x)`` solves it with ``(alpha, beta, gamma lam, delta lam^2)``.
* ``Reflect``: ``w(-x)`` solves it with ``(alpha, beta, -gamma, delta)``.

Each map acts on parameters and on pointwise states ``(x, w, w')`` so that
a solution's graph is carried to the graph of the transformed solution.
"""
from __future__ import annotations

from dataclasses import dataclass

from .algebra import CSeries
from .errors import ZeroScale, ZeroState
from .series_engine import Params5

KINDS = ("Reciprocal", "Scale", "Reflect")


@dataclass(frozen=True)
class SymmetryMap:
    kind: str
    lam: complex = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown symmetry {self.kind!r}")
        object.__setattr__(self, "lam", complex(self.lam))
        if self.kind == "Scale" and self.lam == 0:
            raise ZeroScale("Scale needs a nonzero factor")

    @classmethod
    def reciprocal(cls) -> "SymmetryMap":
        return cls("Reciprocal")

    @classmethod
    def scale(cls, lam: complex) -> "SymmetryMap":
        return cls("Scale", lam)

    @classmethod
    def reflect(cls) -> "SymmetryMap":
        return cls("Reflect")

    def inverse(self) -> "SymmetryMap":
        if self.kind == "Scale":
            return SymmetryMap("Scale", 1 / self.lam)
        return self

    @property
    def description(self) -> str:
        return {
            "Reciprocal": "(x, w, w') -> (x, 1/w, -w'/w^2)",
            "Scale": f"(x, w, w') -> (x/{self.lam}, w, {self.lam} w')",
            "Reflect": "(x, w, w') -> (-x, w, -w')",
        }[self.kind]


def map_params(m: SymmetryMap, p: Params5) -> Params5:
    a, b, g, d = p.as_tuple()
    if m.kind == "Reciprocal":
        return Params5(-b, -a, -g, d)
    if m.kind == "Scale":
        if m.lam == 0:
            raise ZeroScale("Scale needs a nonzero factor")
        return Params5(a, b, g * m.lam, d * m.lam ** 2)
    return Params5(a, b, -g, d)


def map_state(m: SymmetryMap, x: complex, w: complex, w_prime: complex):
    """Image of the point ``(x, w(x), w'(x))`` on the transformed solution."""
    x, w, w_prime = complex(x), complex(w), complex(w_prime)
    if m.kind == "Reciprocal":
        if w == 0:
            raise ZeroState("Reciprocal is undefined at w = 0")
        return x, 1 / w, -w_prime / (w * w)
    if m.kind == "Scale":
        if m.lam == 0:
            raise ZeroScale("Scale needs a nonzero factor")
        return x / m.lam, w, m.lam * w_prime
    return -x, w, -w_prime


def map_series(m: SymmetryMap, s: CSeries) -> CSeries:
    """Image of a power series in ``1/x`` (``Scale`` and ``Reflect`` rescale
    coefficients, ``Reciprocal`` inverts)."""
    if m.kind == "Reciprocal":
        return s.invert()
    # w(c x) with c = lam (Scale) or -1 (Reflect): coefficient of x^e gains c^e
    c = m.lam if m.kind == "Scale" else -1.0
    coeffs = [s.coeffs[n] * c ** (s.offset - n) for n in range(s.order + 1)]
    return CSeries.from_coeffs(s.offset, coeffs, s.tier)


@dataclass(frozen=True)
class Composite:
    """Normal form of a composition: optional ``Reciprocal`` then ``Scale(lam)``.

    ``Reflect`` is ``Scale(-1)`` and ``Reciprocal`` commutes with every
    scaling, so any word in the three maps reduces to this form.
    """

    reciprocal: bool = False
    lam: complex = 1.0

    @property
    def is_identity(self) -> bool:
        return not self.reciprocal and self.lam == 1

    def maps(self) -> list[SymmetryMap]:
        out = [SymmetryMap.reciprocal()] if self.reciprocal else []
        if self.lam != 1:
            out.append(SymmetryMap.scale(self.lam))
        return out


def compose(*maps: SymmetryMap) -> Composite:
    """Reduce ``maps`` (applied left to right) to a :class:`Composite`."""
    rec, lam = False, complex(1.0)
    for m in maps:
        if m.kind == "Reciprocal":
            rec = not rec
        elif m.kind == "Scale":
            lam *= m.lam
        else:
            lam *= -1
    return Composite(rec, lam)


def apply_params(c: Composite, p: Params5) -> Params5:
    for m in c.maps():
        p = map_params(m, p)
    return p


def apply_state(c: Composite, x, w, w_prime):
    x, w, w_prime = complex(x), complex(w), complex(w_prime)
    for m in c.maps():
        x, w, w_prime = map_state(m, x, w, w_prime)
    return x, w, w_prime
