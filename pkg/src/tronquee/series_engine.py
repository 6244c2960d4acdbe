"""Formal power series and transseries solutions of the fifth Painleve equation.

Everything here runs on the cleared residual polynomial from
:mod:`tronquee.algebra`; no normal form is derived by hand. Coefficients are
found order by order: each new unknown enters the residual linearly at its
own pivot row, so a triangular back-substitution suffices.

Conventions
-----------
* ``I0``: ``delta = -1/2``, ``w ~ m/x`` with ``m**2 = -2 beta``.
* ``III0``: ``delta = 2``, ``w ~ -1 + gamma/x``.
* The exponential scale is ``xi = C exp(-x) x**(-sigma)`` where ``sigma`` is
  the decay exponent of the *relative* perturbation ``dw / w0``. Block ``k``
  of the table starts at the same power of ``x`` as ``w0`` and block 1 has
  leading coefficient exactly 1.
"""
from __future__ import annotations

import cmath
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .algebra import (
    CSeries,
    GradedSeries,
    coeff_array,
    d_dx,
    p5_cleared,
    p5_polynomial_residual,
    relative_residual,
)
from .errors import (
    DegenerateBranch,
    InsufficientDepth,
    InvalidParameters,
    NoConvergence,
    RateNotUnit,
    ResonanceCollision,
)

log = logging.getLogger(__name__)

FAMILIES = ("I0", "III0")
NORMALIZED_DELTA = {"I0": -0.5, "III0": 2.0}

# slack beyond the requested depth used while solving; trimmed afterwards
_WORK_PAD = 2
_PIVOT_RTOL = 1e-9


@dataclass(frozen=True)
class Params5:
    """Parameters ``(alpha, beta, gamma, delta)`` of the fifth Painleve equation."""

    alpha: complex
    beta: complex
    gamma: complex
    delta: complex

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if self.alpha * self.beta * self.delta == 0:
            raise InvalidParameters("alpha*beta*delta must be nonzero")

    def as_tuple(self) -> tuple:
        return (self.alpha, self.beta, self.gamma, self.delta)

    def to_json(self) -> list:
        return [[v.real, v.imag] for v in self.as_tuple()]

    @classmethod
    def from_json(cls, data) -> "Params5":
        return cls(*(complex(re, im) for re, im in data))


@dataclass(frozen=True)
class FamilySpec:
    """Family tag plus the derived exponent data.

    Use :meth:`for_params`; ``m`` is the chosen branch of ``sqrt(-2 beta)``
    (family I0 only) and ``q = gamma + 2m``.
    """

    family: str
    m: complex = 0j
    q: complex = 0j
    sigma: complex = 0j
    delta_normalized: float = 0.0
    branch: int = 1

    @classmethod
    def for_params(cls, params: Params5, family: str, branch: int = 1) -> "FamilySpec":
        if family not in FAMILIES:
            raise InvalidParameters(f"unknown family {family!r}")
        if params.gamma == 0:
            raise InvalidParameters("truncated solutions here require gamma != 0")
        if branch not in (1, -1):
            raise InvalidParameters("branch must be +1 or -1")
        if family == "I0":
            if params.beta == 0:
                raise DegenerateBranch("beta = 0 gives no square-root branch")
            m = branch * cmath.sqrt(-2 * params.beta)
            q = params.gamma + 2 * m
            return cls("I0", m, q, q, NORMALIZED_DELTA["I0"], branch)
        return cls("III0", 0j, -0.5 + 0j, 0.5 + 0j, NORMALIZED_DELTA["III0"], branch)

    @property
    def lead_offset(self) -> int:
        """Power of ``x`` at which ``w0`` (and every table block) starts."""
        return -1 if self.family == "I0" else 0

    def nondegenerate(self, params: Params5) -> bool:
        return bool(2 * params.alpha != (self.m - self.q - 1) ** 2)


# ---------------------------------------------------------------------------
# linear responses of the residual


def _dual(a: CSeries, da: CSeries | None) -> GradedSeries:
    return GradedSeries(0, (a, da))


def linear_response(w0: CSeries, h: CSeries, params: Params5, rate: int = 0,
                    sigma: complex = 0) -> CSeries:
    """Residual response to ``w0 + eps * xi**rate * h``, coefficient of ``eps``.

    With ``rate = 0`` this is the Frechet derivative of the cleared
    residual at ``w0`` applied to ``h``; with ``rate = k`` the derivative
    acting on ``h`` carries the ``xi**k`` factor.
    """
    if rate == 0:
        w1, w2 = d_dx(w0), d_dx(d_dx(w0))
        h1, h2 = d_dx(h), d_dx(d_dx(h))
        R = p5_cleared(_dual(w0, h), _dual(w1, h1), _dual(w2, h2), params)
        return R.blocks[1]
    blocks = [w0] + [None] * (rate - 1) + [h]
    R = p5_polynomial_residual(GradedSeries(sigma, blocks), params)
    return R.blocks[rate]


def _partials(w0: CSeries, params: Params5):
    """Series of dP/dw, dP/dw', dP/dw'' evaluated along ``w0``."""
    w1, w2 = d_dx(w0), d_dx(d_dx(w0))
    unit = CSeries.monomial(0, w0.order, 1, w0.tier)
    out = []
    for slot in range(3):
        args = [_dual(w0, None), _dual(w1, None), _dual(w2, None)]
        args[slot] = _dual((w0, w1, w2)[slot], unit)
        out.append(p5_cleared(*args, params).blocks[1])
    return out


def _leading_row(s: CSeries, scale: float) -> int | None:
    for n, c in enumerate(s.coeffs):
        if abs(c) > _PIVOT_RTOL * scale:
            return s.offset - n
    return None


def _solve_block(forcing: CSeries, columns: list[CSeries], fixed: dict[int, complex],
                 tier: str, where: str) -> list:
    """Triangular solve of ``forcing + sum_n b_n columns[n] = 0``.

    ``fixed`` maps unknown indices to preset values (normalizations). The
    pivot row of unknown ``n`` sits a fixed distance below its monomial; the
    distance is read off the first free unknown, whose column is still
    small enough for a relative zero test, and reused for the rest.
    """
    values = coeff_array([0] * len(columns), tier)
    shift = None
    for n, col in enumerate(columns):
        if n in fixed:
            values[n] = fixed[n]
            continue
        if shift is None:
            scale = float(np.max(np.abs(col.coeffs[:4].astype(complex))))
            row = _leading_row(col, scale)
            if row is None:
                raise ResonanceCollision(f"{where}: unknown {n} has no pivot")
            shift = row - col.offset
        row = col.offset + shift
        if row < forcing.last_exponent or row < col.last_exponent:
            raise InsufficientDepth(f"{where}: pivot row x^{row} for unknown {n} beyond residual depth")
        piv = col.coeff(row)
        above = [abs(col.coeff(r)) for r in range(col.offset, row, -1)]
        if abs(piv) == 0 or (above and max(above) > 1e-6 * abs(piv)):
            raise ResonanceCollision(f"{where}: singular or non-triangular pivot at unknown {n}")
        acc = forcing.coeff(row)
        for j in range(n):
            if row >= columns[j].last_exponent:
                acc = acc + values[j] * columns[j].coeff(row)
        values[n] = -acc / piv
    return list(values)


# ---------------------------------------------------------------------------
# public operations


def compute_w0(params: Params5, spec: FamilySpec, N: int, tier: str = "double") -> CSeries:
    """Formal power series solution through ``x**(-N)``.

    For I0 the result is ``sum_{n=1}^{N} w_{0;n} x^{-n}`` with
    ``w_{0;1} = m``; for III0 it is ``-1 + sum_{n=1}^{N} w_{0;n} x^{-n}``.
    """
    if N < 2:
        raise InvalidParameters("depth N must be at least 2")
    e = spec.lead_offset
    lead = spec.m if spec.family == "I0" else -1
    n_coeffs = N + e + 1  # number of coefficients from x^e down to x^-N
    work = n_coeffs + _WORK_PAD
    coeffs = [lead] + [0] * (work - 1)
    coeffs = list(coeff_array(coeffs, tier))
    shift = None
    for n in range(1, work):
        W = CSeries(e, coeff_array(coeffs[: n + 1], tier))
        R = p5_polynomial_residual(W, params).blocks[0]
        col = linear_response(W, CSeries.monomial(e - n, n, 1, tier), params)
        if shift is None:
            scale = float(np.max(np.abs(col.coeffs[:4].astype(complex))))
            lead_row = _leading_row(col, scale)
            if lead_row is None:
                raise NoConvergence(f"order {n}: linearized operator vanishes")
            shift = lead_row - col.offset
        row = col.offset + shift
        if row < R.last_exponent:
            raise NoConvergence(f"order {n}: pivot row beyond residual depth")
        # rows above the pivot must already balance
        for ex in range(R.offset, row, -1):
            ref = max(1.0, abs(R.coeff(row)), abs(col.coeff(row) * coeffs[n - 1]))
            if abs(R.coeff(ex)) > 1e-8 * ref:
                raise NoConvergence(f"order {n}: residual at x^{ex} does not vanish "
                                    f"(leading balance fails; check delta normalization)")
        piv = col.coeff(row)
        if abs(piv) == 0:
            raise NoConvergence(f"order {n}: singular linear solve")
        coeffs[n] = -R.coeff(row) / piv
    return CSeries(e, coeff_array(coeffs, tier)).truncate(n_coeffs - 1)


def linearize(params: Params5, spec: FamilySpec, w0: CSeries):
    """Coefficients of ``h'' + a(x) h' = b(x) h`` for ``w = w0 (1 + h)``.

    Returns ``(a, b)`` as series; ``b = 1 + b1/x + ...`` after the family's
    delta normalization.
    """
    if w0.order < 2:
        raise InsufficientDepth("w0 must carry at least three coefficients")
    A0, A1, A2 = _partials(w0, params)
    w1, w2 = d_dx(w0), d_dx(d_dx(w0))
    denom = (A2 * w0).normalize(tol=0.0)
    a = (2 * A2 * w1 + A1 * w0) / denom
    b = -(A2 * w2 + A1 * w1 + A0 * w0) / denom
    b0 = b.coeff(0) if b.last_exponent <= 0 else None
    if b0 is None or abs(b0 - 1) > 1e-9 or b.offset > 0 and abs(b.coeff(b.offset)) > 1e-9:
        raise RateNotUnit(f"leading linearized rate squared is {b0}; rescale delta "
                          f"to {spec.delta_normalized}")
    return a, b


def exponents(spec: FamilySpec, lin) -> tuple[complex, complex]:
    """Rate ``lambda`` and power shift ``sigma`` of the decaying perturbation."""
    a, b = lin
    lam = cmath.sqrt(complex(b.coeff(0)))
    if abs(a.coeff(0)) > 1e-9:
        raise RateNotUnit("first-derivative coefficient has a constant term")
    sigma = (complex(a.coeff(-1)) + complex(b.coeff(-1))) / 2
    return lam, sigma


@dataclass(frozen=True, eq=False)
class TransseriesTable:
    """Doubly indexed transseries coefficients of a truncated solution."""

    spec: FamilySpec
    params: Params5
    table: GradedSeries
    N: int
    K: int
    tier: str = "double"
    meta: dict = field(default_factory=dict)

    @property
    def sigma(self) -> complex:
        return self.table.sigma

    @property
    def w0(self) -> CSeries:
        return self.table.blocks[0]

    def block(self, k: int) -> CSeries:
        return self.table.blocks[k]

    def residual(self) -> list[np.ndarray]:
        return relative_residual(self.table, self.params)

    def max_relative_residual(self) -> float:
        return max((float(np.max(r)) if r.size else 0.0) for r in self.residual())

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "family": self.spec.family,
            "m": [self.spec.m.real, self.spec.m.imag],
            "branch": self.spec.branch,
            "sigma": [self.sigma.real, self.sigma.imag],
            "N": self.N,
            "K": self.K,
            "tier": self.tier,
            "blocks": [b.to_json() for b in self.table.blocks],
        }

    @classmethod
    def from_json(cls, data: dict) -> "TransseriesTable":
        params = Params5.from_json(data["params"])
        spec = FamilySpec.for_params(params, data["family"], data.get("branch", 1))
        tier = data.get("tier", "double")
        blocks = [CSeries.from_json(b, tier) for b in data["blocks"]]
        sigma = complex(*data["sigma"])
        return cls(spec, params, GradedSeries(sigma, blocks), data["N"], data["K"], tier)


def compute_transseries(params: Params5, spec: FamilySpec, N: int, K: int,
                        tier: str = "double") -> TransseriesTable:
    """Solve for blocks ``0..K`` of the transseries, each through ``x**(-N)``."""
    if K < 1:
        raise InvalidParameters("K must be at least 1")
    work_N = N + _WORK_PAD
    w0 = compute_w0(params, spec, work_N + 1, tier)
    _, sigma = exponents(spec, linearize(params, spec, w0))
    expected = spec.sigma
    if abs(sigma - expected) > 1e-8 * (1 + abs(expected)):
        log.warning("machine sigma %s differs from closed form %s", sigma, expected)
    e = spec.lead_offset
    n_coeffs = work_N + e + 1
    blocks: list[CSeries] = [w0.truncate(n_coeffs - 1)]
    for k in range(1, K + 1):
        placeholder = CSeries(e, coeff_array([0] * n_coeffs, tier))
        base = GradedSeries(sigma, blocks + [placeholder])
        forcing = p5_polynomial_residual(base, params).blocks[k]
        columns = [linear_response(blocks[0], CSeries.monomial(e - n, n_coeffs - 1, 1, tier),
                                   params, rate=k, sigma=sigma)
                   for n in range(n_coeffs)]
        fixed = {0: 1} if k == 1 else {}
        try:
            vals = _solve_block(forcing, columns, fixed, tier, f"block {k}")
        except InsufficientDepth:
            # the last couple of unknowns may lack rows; solve what is determined
            vals = _solve_block(forcing, columns[:-_WORK_PAD], fixed, tier, f"block {k}")
            vals = vals + [0] * _WORK_PAD
        blocks.append(CSeries(e, coeff_array(vals, tier)))
    final_n = N + e + 1
    trimmed = [b.truncate(final_n - 1) for b in blocks]
    table = TransseriesTable(spec, params, GradedSeries(sigma, trimmed), N, K, tier)
    return table


# ---------------------------------------------------------------------------
# inner (two-scale) reordering


def normalized_blocks(table: TransseriesTable) -> tuple[list[CSeries], complex]:
    """Blocks of the normalized variable ``u`` and the factor ``C_u / C``.

    I0: ``w = (m/x)(1 - q/x + u)``; III0: ``w = -1 + gamma/x + u``. Blocks
    are rescaled so that ``u``'s block 1 has leading coefficient 1.
    """
    spec, params = table.spec, table.params
    b = table.table.blocks
    if spec.family == "I0":
        m, q = spec.m, spec.q
        u0 = (b[0].shift(1) * (1 / m) - 1).add_term(-1, q)
        factor = 1 / m
        uk = [b[k].shift(1) * (m ** (k - 1)) for k in range(1, len(b))]
    else:
        u0 = (b[0] + 1).add_term(-1, -params.gamma)
        factor = 1.0
        uk = list(b[1:])
    return [u0] + uk, factor


def reorder_to_inner(table: TransseriesTable, M: int, scale: str = "xi") -> list[np.ndarray]:
    """Inner polynomials from the reordered transseries.

    ``scale="xi"`` returns ``[F_0, ..., F_M]`` with
    ``F_m(xi) = sum_k xi**k s_{k,m}``, coefficients indexed by ``k``.
    ``scale="zeta"`` (I0 only) returns ``[Phi, Phi_{-1}, Phi_0, ...,
    Phi_{M-2}]`` for the arrangement ``x^2 Phi(zeta) + sum_n x^{-n}
    Phi_n(zeta)`` with ``zeta = xi / x**2``.
    """
    blocks, _ = normalized_blocks(table)
    K = len(blocks) - 1
    out = []
    if scale == "xi":
        for m_ in range(M + 1):
            row = []
            for k in range(K + 1):
                blk = blocks[k]
                if blk.offset > 0 and any(abs(c) > 1e-12 for c in blk.coeffs[: blk.offset]):
                    raise InsufficientDepth(f"block {k} has positive powers of x")
                if -m_ < blk.last_exponent:
                    if k <= 1:
                        raise InsufficientDepth(f"F_{m_} needs x^{-m_} from block {k}")
                    break
                row.append(complex(blk.coeff(-m_)))
            out.append(np.array(row, dtype=complex))
        return out
    if scale == "zeta":
        if table.spec.family != "I0":
            raise InsufficientDepth("the zeta scale is defined for family I0 only")
        for n in range(-2, M - 1):
            row = []
            for k in range(K + 1):
                blk = blocks[k].shift(2 * k)
                if -n < blk.last_exponent:
                    break
                row.append(complex(blk.coeff(-n)))
            if len(row) < 2:
                raise InsufficientDepth(f"Phi_{n} needs more depth")
            out.append(np.array(row, dtype=complex))
        return out
    raise ValueError(f"unknown scale {scale!r}")


# ---------------------------------------------------------------------------
# on-disk cache


def cache_key(params: Params5, spec: FamilySpec, N: int, K: int, tier: str) -> str:
    payload = json.dumps({
        "params": [[repr(v.real), repr(v.imag)] for v in params.as_tuple()],
        "family": spec.family, "branch": spec.branch, "N": N, "K": K, "tier": tier,
    }, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def cached_transseries(params: Params5, spec: FamilySpec, N: int, K: int,
                       cache_dir: str | Path | None, tier: str = "double") -> TransseriesTable:
    """Like :func:`compute_transseries` but reusing ``cache_dir/<hash>.json``."""
    if cache_dir is None or tier != "double":
        return compute_transseries(params, spec, N, K, tier)
    path = Path(cache_dir) / f"{cache_key(params, spec, N, K, tier)}.json"
    if path.exists():
        return TransseriesTable.from_json(json.loads(path.read_text()))
    table = compute_transseries(params, spec, N, K, tier)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(table.to_json()))
    tmp.replace(path)
    return table

