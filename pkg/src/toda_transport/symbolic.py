"""Exact conductance moment generating functions.

The MGF of the conductance for ideal leads lives in the ring of functions
``sum_k exp(-k z) L_k(z)`` with ``L_k`` Laurent polynomials over the
rationals.  This module builds it as a Hankel determinant of moment
functions, checks the Toda lattice identity exactly, inverts the Laplace
transform into the piecewise-polynomial conductance density, and evaluates
MGFs numerically at arbitrary precision.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations

import mpmath
import numpy as np

from .params import LeadConfig, as_fraction, conductance_variance, effective_config, normalization_c
from .polys import (exp_series, padd, peval, pintegrate, preflect, pscale,
                    pshift, ps_det, ps_log, psub, trim)

__all__ = [
    "ExpLaurentFn",
    "ShapeError",
    "PiecewisePolyDensity",
    "moment_fn",
    "mgf_hankel",
    "mgf_taylor",
    "toda_residual",
    "toda_check",
    "density_from_mgf",
    "eval_mgf",
    "cumulants_from_series",
]


class ShapeError(ArithmeticError):
    """An ExpLaurentFn does not have the shape an operation requires."""


def _frac_str(c) -> str:
    c = Fraction(c)
    return f"{c.numerator}/{c.denominator}"


class ExpLaurentFn:
    """Finite sum ``sum_k exp(-k z) * sum_q c_{k,q} z^q``.

    Coefficients are exact rationals (Python ints are accepted and kept as
    such, which is much faster for the integer-valued determinants).
    Instances are treated as immutable.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        for k, lp in (terms or {}).items():
            row = {int(q): c for q, c in lp.items() if c != 0}
            if row:
                clean[int(k)] = row
        self.terms = clean

    @classmethod
    def constant(cls, c) -> "ExpLaurentFn":
        return cls({0: {0: c}})

    @classmethod
    def monomial(cls, k: int, q: int, c=1) -> "ExpLaurentFn":
        return cls({k: {q: c}})

    # -- ring operations --------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        out = {k: dict(lp) for k, lp in self.terms.items()}
        for k, lp in other.terms.items():
            row = out.setdefault(k, {})
            for q, c in lp.items():
                row[q] = row.get(q, 0) + c
        return ExpLaurentFn(out)

    __radd__ = __add__

    def __neg__(self):
        return ExpLaurentFn({k: {q: -c for q, c in lp.items()} for k, lp in self.terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, ExpLaurentFn):
            if other == 0:
                return ExpLaurentFn()
            return ExpLaurentFn({k: {q: c * other for q, c in lp.items()} for k, lp in self.terms.items()})
        out: dict[int, dict[int, object]] = {}
        for k1, lp1 in self.terms.items():
            items1 = list(lp1.items())
            for k2, lp2 in other.terms.items():
                row = out.setdefault(k1 + k2, {})
                for q2, c2 in lp2.items():
                    for q1, c1 in items1:
                        q = q1 + q2
                        row[q] = row.get(q, 0) + c1 * c2
        return ExpLaurentFn(out)

    __rmul__ = __mul__

    def derivative(self) -> "ExpLaurentFn":
        """d/dz, using d(e^{-kz} z^q) = e^{-kz} (q z^{q-1} - k z^q)."""
        out: dict[int, dict[int, object]] = {}
        for k, lp in self.terms.items():
            row = out.setdefault(k, {})
            for q, c in lp.items():
                if q:
                    row[q - 1] = row.get(q - 1, 0) + q * c
                if k:
                    row[q] = row.get(q, 0) - k * c
        return ExpLaurentFn(out)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = ExpLaurentFn.constant(other)
        if not isinstance(other, ExpLaurentFn):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        return hash(tuple(sorted((k, tuple(sorted(lp.items()))) for k, lp in self.terms.items())))

    def __repr__(self):
        return f"ExpLaurentFn({self.to_dict()})"

    # -- inspection ----------------------------------------------------------
    @property
    def min_power(self) -> int:
        return min((q for lp in self.terms.values() for q in lp), default=0)

    @property
    def max_power(self) -> int:
        return max((q for lp in self.terms.values() for q in lp), default=0)

    @property
    def max_k(self) -> int:
        return max(self.terms, default=0)

    def series(self, order: int) -> list[Fraction]:
        """Exact Taylor coefficients at ``z = 0`` up to ``z^order``.

        Raises ShapeError if the negative powers do not cancel (i.e. the
        function is not analytic at the origin).
        """
        lo = min(self.min_power, 0)
        span = order - lo
        acc = [Fraction(0)] * (span + 1)
        for k, lp in self.terms.items():
            ek = exp_series(k, span)
            for q, c in lp.items():
                base = q - lo
                for i in range(span + 1 - base):
                    acc[base + i] += c * ek[i]
        singular = acc[:-lo] if lo < 0 else []
        for i, c in enumerate(singular):
            if c != 0:
                raise ShapeError(f"non-cancelling singular term z^{lo + i}")
        return acc[len(singular):]

    def scaled_to_unit(self) -> "ExpLaurentFn":
        """Divide by the value at 0 so that the series has constant term 1."""
        c0 = self.series(0)[0]
        return self * (1 / Fraction(c0))

    # -- numerics ---------------------------------------------------------
    def _direct(self, z):
        total = mpmath.mpf(0)
        for k, lp in self.terms.items():
            inner = mpmath.fsum(mpmath.mpf(Fraction(c).numerator) / Fraction(c).denominator * z ** q
                                for q, c in lp.items())
            total += mpmath.exp(-k * z) * inner
        return total

    # -- serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        return {str(k): {str(q): _frac_str(c) for q, c in sorted(lp.items())}
                for k, lp in sorted(self.terms.items())}

    @classmethod
    def from_dict(cls, data: dict) -> "ExpLaurentFn":
        return cls({int(k): {int(q): Fraction(c) for q, c in lp.items()} for k, lp in data.items()})

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ExpLaurentFn":
        return cls.from_dict(json.loads(text))


def _coerce(x) -> ExpLaurentFn:
    return x if isinstance(x, ExpLaurentFn) else ExpLaurentFn.constant(x)


def _ring_det(matrix):
    """Determinant by Laplace expansion memoised over column subsets.

    No division is needed, so it works over any commutative ring; the cost is
    O(n 2^n) ring multiplications, fine for n <= 8.
    """
    size = len(matrix)
    if size == 0:
        return ExpLaurentFn.constant(1)
    # prev[cols] = minor on the first len(cols) rows and the given columns
    prev = {(): ExpLaurentFn.constant(1)}
    for r in range(size):
        cur = {}
        for cols in combinations(range(size), r + 1):
            acc = ExpLaurentFn()
            for pos, c in enumerate(cols):
                sub = cols[:pos] + cols[pos + 1:]
                term = matrix[r][c] * prev[sub]
                acc = acc - term if (r + pos) % 2 else acc + term
            cur[cols] = acc
        prev = cur
    return prev[tuple(range(size))]


def moment_fn(m: int, nu) -> ExpLaurentFn:
    """``int_0^1 T^(nu+m) exp(-z T) dT`` in closed form.

    ``a! z^-(a+1) (1 - e^-z sum_{l<=a} z^l / l!)`` with ``a = nu + m``; all
    coefficients are integers.
    """
    a = int(as_fraction(nu)) + m
    if a < 0:
        raise ValueError(f"m + nu must be non-negative, got {a}")
    fa = math.factorial(a)
    terms = {0: {-(a + 1): fa}, 1: {}}
    for ell in range(a + 1):
        terms[1][ell - a - 1] = -(fa // math.factorial(ell))
    return ExpLaurentFn(terms)


@lru_cache(maxsize=None)
def _mgf_hankel_cached(n: int, nu: int) -> ExpLaurentFn:
    if n == 0:
        return ExpLaurentFn.constant(Fraction(1))
    moments = [moment_fn(i, nu) for i in range(2 * n - 1)]
    det = _ring_det([[moments[j + k] for k in range(n)] for j in range(n)])
    scale = Fraction(math.factorial(n)) / normalization_c(n, nu)
    return det * scale


def mgf_hankel(cfg: LeadConfig) -> ExpLaurentFn:
    """Conductance MGF ``F_n^(nu)(z)`` as an exact ExpLaurentFn (integer nu)."""
    if not cfg.integer_nu or cfg.nu < 0:
        raise ValueError("mgf_hankel needs a non-negative integer nu")
    return _mgf_hankel_cached(cfg.n, int(cfg.nu))


def mgf_taylor(cfg: LeadConfig, order: int) -> list[Fraction]:
    """Taylor coefficients of the MGF at the origin, computed independently.

    Works directly with the power series of the moment integrals
    ``sum_i (-z)^i / (i! (nu + m + i + 1))`` and a power-series determinant,
    normalised by its value at 0; valid for any rational ``nu > -1``.
    """
    if cfg.n == 0:
        return [Fraction(1)] + [Fraction(0)] * order
    nu = cfg.nu
    mom = [[Fraction((-1) ** i, math.factorial(i)) / (nu + m + i + 1) for i in range(order + 1)]
           for m in range(2 * cfg.n - 1)]
    det = ps_det([[mom[j + k] for k in range(cfg.n)] for j in range(cfg.n)], order)
    c0 = det[0]
    return [c / c0 for c in det]


def cumulants_from_series(coeffs, L: int) -> list[Fraction]:
    """Cumulants ``kappa_1..kappa_L`` from the MGF series of ``<exp(-z X)>``."""
    logs = ps_log(list(coeffs), L)
    return [(-1) ** ell * math.factorial(ell) * logs[ell] for ell in range(1, L + 1)]


def toda_residual(cfg: LeadConfig, var=None) -> ExpLaurentFn:
    """``F_n F_n'' - (F_n')^2 - var F_{n-1} F_{n+1}`` as an exact element."""
    if cfg.n < 1:
        raise ValueError("the lattice identity needs n >= 1")
    if var is None:
        var = conductance_variance(cfg.n, cfg.nu)
    F = mgf_hankel(cfg)
    d1 = F.derivative()
    d2 = d1.derivative()
    lower = mgf_hankel(cfg.shifted(-1))
    upper = mgf_hankel(cfg.shifted(+1))
    return F * d2 - d1 * d1 - (lower * upper) * as_fraction(var)


def toda_check(cfg: LeadConfig, var=None) -> bool:
    """True iff the Toda lattice residual is identically zero."""
    return toda_residual(cfg, var).is_zero()


@dataclass(frozen=True)
class PiecewisePolyDensity:
    """Conductance density on ``(0, n)`` as piecewise polynomials.

    On ``(k, k+1)`` the density is ``sum_{j<=k} h_j(g - j)``; equivalently
    ``sum_k sgn(g - k) pi_k(g - k)`` over the whole interval.
    """

    n: int
    nu: int
    heaviside_polys: tuple
    sgn_polys: tuple

    def piece(self, k: int):
        """Polynomial in ``g`` valid on ``(k, k+1)``."""
        acc = []
        for j in range(k + 1):
            acc = padd(acc, pshift(self.heaviside_polys[j], -j))
        return acc

    def pdf(self, g):
        # pieces are re-expanded about their midpoints: the expanded form in g
        # cancels catastrophically in floating point for n >= 4
        g = np.asarray(g, dtype=float)
        out = np.zeros_like(g)
        for k in range(self.n):
            local = [float(c) for c in pshift(self.piece(k), Fraction(2 * k + 1, 2))]
            mask = (g > k) & (g <= k + 1) if k else (g >= 0) & (g <= 1)
            if local:
                out[mask] = np.polynomial.polynomial.polyval(g[mask] - (k + 0.5), local)
        return out

    def pdf_sgn(self, g: float) -> float:
        """Evaluate through the sgn representation (for cross-checks)."""
        total = 0.0
        for k, pk in enumerate(self.sgn_polys):
            x = g - k
            total += math.copysign(1.0, x) * float(peval(pk, Fraction(x)))
        return total

    def total_mass(self) -> Fraction:
        mass = Fraction(0)
        for k in range(self.n):
            anti = pintegrate(self.piece(k))
            mass += peval(anti, Fraction(k + 1)) - peval(anti, Fraction(k))
        return mass

    def closure_residual(self):
        """``sum_k pi_k(g - k)`` as a polynomial in g (identically zero)."""
        acc = []
        for k, pk in enumerate(self.sgn_polys):
            acc = padd(acc, pshift(pk, -k))
        return acc

    def reflection_residuals(self):
        """``pi_{n-k}(x) + pi_k(-x)`` for every k (all zero when nu = 0)."""
        return [padd(self.sgn_polys[self.n - k], preflect(self.sgn_polys[k]))
                for k in range(self.n + 1)]

    def to_dict(self) -> dict:
        enc = lambda p: [_frac_str(c) for c in p]  # noqa: E731
        return {"n": self.n, "nu": self.nu,
                "heaviside_polys": [enc(p) for p in self.heaviside_polys],
                "sgn_polys": [enc(p) for p in self.sgn_polys]}

    @classmethod
    def from_dict(cls, data: dict) -> "PiecewisePolyDensity":
        dec = lambda p: [Fraction(c) for c in p]  # noqa: E731
        return cls(int(data["n"]), int(data["nu"]),
                   tuple(dec(p) for p in data["heaviside_polys"]),
                   tuple(dec(p) for p in data["sgn_polys"]))


def density_from_mgf(F: ExpLaurentFn, cfg: LeadConfig) -> PiecewisePolyDensity:
    """Inverse Laplace transform of an ideal-lead MGF.

    ``e^{-kz} z^{-m}`` maps to ``Theta(g-k) (g-k)^{m-1} / (m-1)!``.
    """
    n, nu = cfg.n, int(cfg.nu)
    if n < 1:
        raise ValueError("density needs n >= 1")
    if F.max_power >= 0:
        raise ShapeError(f"non-negative power z^{F.max_power} left after normalisation")
    if F.max_k > n:
        raise ShapeError(f"exponential index {F.max_k} exceeds n = {n}")
    h = []
    for k in range(n + 1):
        poly = [Fraction(0)] * (n * (n + nu))
        for q, c in F.terms.get(k, {}).items():
            m = -q
            if m - 1 >= len(poly):
                poly.extend([Fraction(0)] * (m - len(poly)))
            poly[m - 1] += Fraction(c) / math.factorial(m - 1)
        h.append(trim(poly))
    pis = [pscale(hk, Fraction(1, 2)) for hk in h[:n]]
    # closure: sum_k pi_k(g - k) == 0 fixes pi_n
    acc = []
    for k, pk in enumerate(pis):
        acc = padd(acc, pshift(pk, n - k))
    pi_n = pscale(acc, -1)
    if psub(pi_n, pscale(h[n], Fraction(1, 2))):
        raise ShapeError("density does not vanish beyond g = n")
    pis.append(pi_n)
    return PiecewisePolyDensity(n, nu, tuple(h[:n]), tuple(pis))


def eval_mgf(F: ExpLaurentFn, z, precision: int = 53, taylor_radius: float = 0.5):
    """Numerical value of F at real z with ``precision`` bits.

    Near the origin the exact Taylor polynomial of order ``4 p + 20`` is used
    (p the pole order) to avoid the ``e^{-kz}/z^p`` cancellation; elsewhere
    the direct sum is evaluated with working precision raised until two
    successive results agree.
    """
    if precision < 53:
        raise ValueError("precision must be at least 53 bits")
    zf = Fraction(z)
    p = max(0, -F.min_power)
    if abs(zf) < Fraction(taylor_radius).limit_denominator(10 ** 6):
        coeffs = F.series(4 * p + 20)
        with mpmath.workprec(precision + 20):
            zz = mpmath.mpf(zf.numerator) / zf.denominator
            acc = mpmath.mpf(0)
            for c in reversed(coeffs):
                acc = acc * zz + mpmath.mpf(c.numerator) / c.denominator
            result = acc
        return _round(result, precision)
    if zf == 0:
        raise ValueError("z = 0 on the direct path; use the series")
    wp = precision + 32 + 4 * p
    last = None
    for _ in range(8):
        with mpmath.workprec(wp):
            zz = mpmath.mpf(zf.numerator) / zf.denominator
            val = F._direct(zz)
        if last is not None:
            with mpmath.workprec(wp):
                if abs(val - last) <= abs(val) * mpmath.mpf(2) ** (-(precision + 8)):
                    return _round(val, precision)
        last = val
        wp *= 2
    raise ArithmeticError("evaluation did not stabilise")


def _round(x, precision: int):
    with mpmath.workprec(precision):
        val = +x
    return float(val) if precision == 53 else val


def ideal_mgf(n: int, nu) -> ExpLaurentFn:
    """Shorthand for ``mgf_hankel(effective_config(n, nu))``."""
    return mgf_hankel(effective_config(n, nu))
