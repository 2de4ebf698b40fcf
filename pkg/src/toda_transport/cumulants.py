"""Exact cumulants of the conductance and the noise power.

Conductance cumulants come from a nonlinear three-term recurrence seeded by
the mean and the variance.  Joint cumulants of conductance and noise power
come from a two-dimensional recurrence whose coefficients are polynomials in
the thermodynamic factor ``f``; they are kept as exact polynomials in ``f``
(:class:`FEtaPoly`) and only evaluated at the reporting boundary.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .params import SHOT, LeadConfig, as_fraction, effective_config, thermo_factor
from .symbolic import cumulants_from_series, mgf_taylor

__all__ = [
    "SingularRecurrenceError",
    "BoundaryDepthError",
    "CumulantSeq",
    "FEtaPoly",
    "JointCumulantTable",
    "conductance_cumulants",
    "cumulant_recurrence_residual",
    "kappa3_closed",
    "kappa3_printed",
    "joint_cumulants",
    "joint_recurrence_residual",
    "shot_limit",
    "shot_recurrence_residual",
    "shot_cumulants_symmetric",
    "shot_cumulants_printed",
    "noise_power_closed_forms",
]


class SingularRecurrenceError(ArithmeticError):
    """The leading coefficient ``s^2 - l^2`` of the cumulant recurrence vanishes."""

    def __init__(self, order: int, cfg: LeadConfig):
        self.order = order
        self.cfg = cfg
        super().__init__(
            f"recurrence-singular order: the coefficient of kappa_{order + 1} vanishes at l = {order} "
            f"(2n + nu = {cfg.s}) for {cfg}; pass fallback=True to take kappa_{order + 1} "
            "from the exact MGF series")


class BoundaryDepthError(ValueError):
    """Not enough conductance cumulants to fill the requested joint table."""


@dataclass(frozen=True)
class CumulantSeq:
    """Conductance cumulants ``kappa_1 .. kappa_L``; ``seq[l]`` is 1-based.

    ``series_orders`` lists the orders taken from the MGF Taylor series
    because the recurrence is singular there.
    """

    cfg: LeadConfig
    values: tuple
    series_orders: tuple = ()

    def __getitem__(self, ell: int) -> Fraction:
        if not 1 <= ell <= len(self.values):
            raise IndexError(f"cumulant order {ell} outside 1..{len(self.values)}")
        return self.values[ell - 1]

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    @property
    def L(self) -> int:
        return len(self.values)


# -- conductance cumulants --------------------------------------------------

def _seeds(cfg: LeadConfig):
    s = cfg.s
    k1 = Fraction(cfg.p) / s
    k2 = k1 * k1 / (s * s - 1)
    return k1, k2


def _recurrence_rest(kap, s, ell: int) -> Fraction:
    """Everything in the recurrence at order ``ell`` except the kappa_{ell+1} term.

    ``kap`` is 1-based (``kap[0]`` unused).
    """
    rest = s * (2 * ell - 1) * ell * kap[ell] + ell * (ell - 1) * (ell - 2) * kap[ell - 1]
    quad = 0
    for j in range(ell):
        quad += (3 * j + 1) * (j - ell) ** 2 * math.comb(ell, j) * kap[j + 1] * kap[ell - j]
    return rest - 2 * quad


@lru_cache(maxsize=64)
def _series_cumulants(n: int, nu: Fraction, L: int) -> tuple:
    return tuple(cumulants_from_series(mgf_taylor(effective_config(n, nu), L), L))


def conductance_cumulants(cfg: LeadConfig, L: int, fallback: bool = True) -> CumulantSeq:
    """Exact conductance cumulants ``kappa_1 .. kappa_L``.

    Parameters
    ----------
    cfg : LeadConfig
        ``nu`` may be any rational >= -1/2 (the half-integer values enter
        the shot-noise factorisation).
    L : int
        Highest order.
    fallback : bool
        At the order ``l = 2n + nu`` the recurrence cannot be solved for
        ``kappa_{l+1}``.  With ``fallback`` the missing cumulant is read off
        the exact Taylor series of the MGF and the recurrence continues;
        otherwise :class:`SingularRecurrenceError` is raised.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    if cfg.n == 0:
        return CumulantSeq(cfg, tuple(Fraction(0) for _ in range(L)))
    s = cfg.s
    k1, k2 = _seeds(cfg)
    kap = [Fraction(0), k1, k2]
    used_series = []
    for ell in range(2, L):
        lead = (s * s - ell * ell) * (ell + 1)
        rest = _recurrence_rest(kap, s, ell)
        if lead == 0:
            if not fallback:
                raise SingularRecurrenceError(ell, cfg)
            if rest != 0:
                # the equation degenerates to 0 = rest; anything else means a bug upstream
                raise ArithmeticError(f"inconsistent recurrence at singular order {ell}: residual {rest}")
            kap.append(_series_cumulants(cfg.n, cfg.nu, L)[ell])
            used_series.append(ell + 1)
        else:
            kap.append(-rest / lead)
    return CumulantSeq(cfg, tuple(kap[1:L + 1]), tuple(used_series))


def cumulant_recurrence_residual(seq: CumulantSeq, ell: int) -> Fraction:
    """Left-hand side of the recurrence at order ``ell`` (needs ``L > ell``)."""
    kap = [Fraction(0), *seq.values]
    s = seq.cfg.s
    return (s * s - ell * ell) * (ell + 1) * kap[ell + 1] + _recurrence_rest(kap, s, ell)


def kappa3_closed(cfg: LeadConfig) -> Fraction:
    """Third conductance cumulant in closed form.

    ``-2 nu^2 kappa_2 / (s (s^2 - 4))`` with ``s = 2n + nu``; it follows from
    the recurrence at ``l = 2`` and vanishes for symmetric leads.
    """
    k1, k2 = _seeds(cfg)
    s = cfg.s
    return -2 * cfg.nu ** 2 * k2 / (s * (s * s - 4))


def kappa3_printed(cfg: LeadConfig) -> Fraction:
    """The frequently quoted form ``-nu^2 kappa_1^2 / (2n + nu)``.

    Kept for comparison only: it agrees with the exact third cumulant for
    ``nu = 0`` and differs otherwise (for ``n = 1, nu = 1`` the exact value
    is ``-1/135``).
    """
    k1, _ = _seeds(cfg)
    return -cfg.nu ** 2 * k1 * k1 / cfg.s


# -- polynomials in the thermodynamic factor -------------------------------

class FEtaPoly:
    """Exact polynomial in the thermodynamic factor ``f``.

    ``coeffs[j]`` multiplies ``f**j``.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=()):
        c = [Fraction(x) for x in coeffs]
        while c and c[-1] == 0:
            c.pop()
        self.coeffs = tuple(c)

    @classmethod
    def f(cls) -> "FEtaPoly":
        return cls((0, 1))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, j: int) -> Fraction:
        return self.coeffs[j] if 0 <= j < len(self.coeffs) else Fraction(0)

    def __call__(self, f):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * f + (c if isinstance(f, Fraction) else float(c))
        return acc

    def __add__(self, other):
        other = _fpoly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return FEtaPoly([self.coeff(i) + other.coeff(i) for i in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return FEtaPoly([-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-_fpoly(other))

    def __rsub__(self, other):
        return _fpoly(other) - self

    def __mul__(self, other):
        other = _fpoly(other)
        if not self.coeffs or not other.coeffs:
            return FEtaPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return FEtaPoly(out)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        scalar = as_fraction(scalar)
        return FEtaPoly([c / scalar for c in self.coeffs])

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = FEtaPoly([other])
        if not isinstance(other, FEtaPoly):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"FEtaPoly({[str(c) for c in self.coeffs]})"

    def to_strings(self) -> list[str]:
        return [f"{c.numerator}/{c.denominator}" for c in self.coeffs]

    @classmethod
    def from_strings(cls, items) -> "FEtaPoly":
        return cls([Fraction(x) for x in items])


def _fpoly(x) -> FEtaPoly:
    return x if isinstance(x, FEtaPoly) else FEtaPoly([as_fraction(x)])


# -- joint cumulants --------------------------------------------------------

@dataclass(frozen=True)
class JointCumulantTable:
    """Joint cumulants ``<<G^l P^m>>`` as polynomials in ``f``.

    ``entries`` covers ``0 <= l <= Lmax``, ``0 <= m <= Mmax`` except (0, 0);
    ``boundary_order`` is the highest conductance cumulant that was needed.
    """

    cfg: LeadConfig
    Lmax: int
    Mmax: int
    entries: dict
    boundary_order: int
    boundary: CumulantSeq = field(repr=False)
    triangle: dict = field(default_factory=dict, repr=False, compare=False)

    def residuals(self) -> dict:
        """Recurrence residuals (finite temperature and shot limit) at every
        ``(l, m)`` whose terms all lie in the working triangle."""
        K = self.triangle
        shot = {key: p.coeff(key[1]) for key, p in K.items()}
        out = {}
        for (l, m) in K:
            needed = [(l + 2, m), (l + 1, m), (l, m + 1)]
            if m:
                needed += [(l + 4, m - 1)]
            if all(k in K for k in needed):
                out[(l, m)] = (joint_recurrence_residual(K, self.cfg.s, l, m),
                               shot_recurrence_residual(shot, self.cfg.s, l, m))
        return out

    def __getitem__(self, key) -> FEtaPoly:
        return self.entries[key]

    def evaluate(self, eta) -> dict:
        """Entries at a finite ``eta`` as floats; ``eta = inf`` gives the shot limit."""
        tf = thermo_factor(eta)
        if tf is SHOT:
            return {k: float(v) for k, v in shot_limit(self).items()}
        return {k: p(tf.f_eta) for k, p in self.entries.items()}

    def to_json_records(self) -> list[dict]:
        return [{"l": l, "m": m, "poly": p.to_strings()} for (l, m), p in sorted(self.entries.items())]

    def to_json(self) -> str:
        return json.dumps(self.to_json_records(), indent=1)

    @classmethod
    def from_json_records(cls, cfg: LeadConfig, records) -> "JointCumulantTable":
        entries = {(int(r["l"]), int(r["m"])): FEtaPoly.from_strings(r["poly"]) for r in records}
        Lmax = max(l for l, _ in entries)
        Mmax = max(m for _, m in entries)
        boundary_order = Lmax + 2 * Mmax
        return cls(cfg, Lmax, Mmax, entries, boundary_order,
                   conductance_cumulants(cfg, max(boundary_order, 2)))

    def to_csv(self, eta) -> str:
        values = self.evaluate(eta)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["l", "m", "eta", "value"])
        for (l, m) in sorted(values):
            w.writerow([l, m, eta, repr(values[(l, m)])])
        return buf.getvalue()


def joint_cumulants(cfg: LeadConfig, Lmax: int, Mmax: int, boundary: CumulantSeq | None = None,
                    fallback: bool = True) -> JointCumulantTable:
    """Solve the two-dimensional recurrence for ``<<G^l P^m>>``.

    Column ``m`` of the working triangle holds orders up to
    ``Lmax + 2 (Mmax - m)``, so the conductance cumulants are needed up to
    ``Lmax + 2 Mmax``.  A ``boundary`` that is too short raises
    :class:`BoundaryDepthError` naming the required order.
    """
    if Lmax < 0 or Mmax < 0:
        raise ValueError("Lmax and Mmax must be non-negative")
    depth = Lmax + 2 * Mmax
    if boundary is None:
        boundary = conductance_cumulants(cfg, max(depth, 2), fallback=fallback)
    elif boundary.L < depth:
        raise BoundaryDepthError(
            f"joint table up to (l, m) = ({Lmax}, {Mmax}) needs conductance cumulants to order {depth}, "
            f"got {boundary.L}")
    s = cfg.s
    f = FEtaPoly.f()
    f2 = f * f
    zero = FEtaPoly()
    K: dict = {(0, 0): zero}
    for ell in range(1, depth + 1):
        K[(ell, 0)] = FEtaPoly([boundary[ell]])
    for m in range(Mmax):
        for ell in range(Lmax + 2 * (Mmax - m - 1) + 1):
            rhs = 2 * s * f * K[(ell + 2, m)] + 2 * (ell + 2 * m + 1) * K[(ell + 1, m)]
            if m:
                rhs = rhs - m * (f2 * K[(ell + 4, m - 1)] + (1 - f2) * K[(ell + 2, m - 1)])
                quad = zero
                for i in range(m):
                    bi = math.comb(m - 1, i)
                    for j in range(ell + 1):
                        quad = quad + (bi * math.comb(ell, j)) * (K[(j + 2, i)] * K[(ell - j + 2, m - i - 1)])
                rhs = rhs - 6 * m * f2 * quad
            K[(ell, m + 1)] = rhs / (2 * ell + 3 * m + 2)
    entries = {(l, m): K[(l, m)] for l in range(Lmax + 1) for m in range(Mmax + 1) if (l, m) != (0, 0)}
    return JointCumulantTable(cfg, Lmax, Mmax, entries, depth, boundary, K)


def joint_recurrence_residual(K, s, ell: int, m: int) -> FEtaPoly:
    """Left-hand side of the joint recurrence at ``(ell, m)``; ``K`` maps keys to FEtaPoly."""
    f = FEtaPoly.f()
    f2 = f * f
    get = lambda key: K.get(key, FEtaPoly())  # noqa: E731
    out = -2 * s * f * get((ell + 2, m)) - 2 * (ell + 2 * m + 1) * get((ell + 1, m)) \
        + (2 * ell + 3 * m + 2) * get((ell, m + 1))
    if m:
        out = out + m * (f2 * get((ell + 4, m - 1)) + (1 - f2) * get((ell + 2, m - 1)))
        quad = FEtaPoly()
        for i in range(m):
            for j in range(ell + 1):
                quad = quad + (math.comb(m - 1, i) * math.comb(ell, j)) * (get((j + 2, i)) * get((ell - j + 2, m - i - 1)))
        out = out + 6 * m * f2 * quad
    return out


def shot_limit(table: JointCumulantTable) -> dict:
    """Zero-temperature joint cumulants ``<<G^l P_shot^m>>``.

    Since ``f / eta -> 1`` and ``deg kappa_{l,m} <= m``, the limit of
    ``kappa_{l,m} / eta^m`` is the coefficient of ``f^m``.
    """
    return {key: p.coeff(key[1]) for key, p in table.entries.items()}


def shot_recurrence_residual(shot: dict, s, ell: int, m: int) -> Fraction:
    """Left-hand side of the zero-temperature joint recurrence at ``(ell, m)``."""
    get = lambda key: shot.get(key, Fraction(0))  # noqa: E731
    out = -2 * s * get((ell + 2, m)) + (2 * ell + 3 * m + 2) * get((ell, m + 1))
    if m:
        out += m * (get((ell + 4, m - 1)) - get((ell + 2, m - 1)))
        quad = Fraction(0)
        for i in range(m):
            for j in range(ell + 1):
                quad += math.comb(m - 1, i) * math.comb(ell, j) * get((j + 2, i)) * get((ell - j + 2, m - i - 1))
        out += 6 * m * quad
    return out


def shot_cumulants_symmetric(n: int, L: int) -> list[Fraction]:
    """Shot-noise cumulants for symmetric leads from half-integer conductance cumulants.

    ``kappa_l(P_shot) = (n/4) delta_{l,1} + (-1)^l 4^{-l}
    (kappa_l^{(ceil(n/2), -1/2)} + kappa_l^{(floor(n/2), +1/2)})``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    parts = []
    for m, nu in ((-(-n // 2), Fraction(-1, 2)), (n // 2, Fraction(1, 2))):
        cfg = effective_config(m, nu)
        # 2m + nu is never an integer, so the recurrence has no singular order
        assert cfg.s.denominator != 1
        parts.append(conductance_cumulants(cfg, L, fallback=False))
    out = []
    for ell in range(1, L + 1):
        k = Fraction((-1) ** ell, 4 ** ell) * (parts[0][ell] + parts[1][ell])
        if ell == 1:
            k += Fraction(n, 4)
        out.append(k)
    return out


def shot_cumulants_printed(n: int) -> tuple[Fraction, Fraction, Fraction]:
    """The three widely quoted closed forms for symmetric-lead shot noise.

    The first two agree with the exact engine; the third does not (for
    ``n = 1`` the exact value is ``-1/3780``, against ``1/5184`` here) and is
    kept so the disagreement stays visible.
    """
    q = 4 * n * n
    k1 = Fraction(n ** 3, 2 * (q - 1))
    k2 = Fraction(n * n * (4 * n ** 4 - 9 * n * n + 3), 8 * (q - 1) ** 2 * (q - 9))
    k3 = Fraction(n * n * (16 * n ** 6 - 24 * n ** 4 + 9 * n * n + 1), 128 * (q - 1) ** 4)
    return k1, k2, k3


def noise_power_closed_forms(cfg: LeadConfig, ell: int, f=None, kappa: CumulantSeq | None = None) -> dict:
    """Low-order joint cumulants in closed form, in terms of conductance cumulants.

    Returns a dict of FEtaPoly (exact, in the indeterminate ``f``) or, when
    ``f`` is given, their values there.  Keys:

    ``mean_noise``            <<P>>
    ``mean_noise_thermal``    <<P>> written through channel numbers
    ``joint_m1``              <<G^ell P>>
    ``noise_variance``        <<P^2>>
    ``joint_m2``              <<G^ell P^2>>
    ``mean_shot``, ``joint_m1_shot``, ``shot_variance``, ``joint_m2_shot``
                              the zero-temperature counterparts (rationals)
    """
    if kappa is None:
        kappa = conductance_cumulants(cfg, max(ell + 4, 4))
    k = kappa
    s = cfg.s
    F = FEtaPoly.f()
    F2 = F * F
    d = 2 * ell + 5
    quad = sum((math.comb(ell, j) * k[j + 2] * k[ell + 2 - j] for j in range(ell + 1)), Fraction(0))
    out = {
        "mean_noise": s * F * k[2] + k[1],
        "mean_noise_thermal": Fraction(cfg.p) / s * (1 + Fraction(cfg.p) / (s * s - 1) * F),
        "joint_m1": k[ell + 1] + s * F * k[ell + 2] / (ell + 1),
        "noise_variance": (Fraction(2, 3) * s * s - 1) * F2 * k[4] / 5 + s * F * k[3]
        + (1 + F2 / 5) * k[2] - Fraction(6, 5) * F2 * k[2] ** 2,
        "joint_m2": (2 * s * s / (ell + 3) - 1) * F2 * k[ell + 4] / d + 2 * s * F * k[ell + 3] / (ell + 2)
        + (1 + F2 / d) * k[ell + 2] - 6 * F2 * quad / d,
        "mean_shot": s * k[2],
        "joint_m1_shot": s * k[ell + 2] / (ell + 1),
        "shot_variance": ((Fraction(2, 3) * s * s - 1) * k[4] + k[2] - 6 * k[2] ** 2) / 5,
        "joint_m2_shot": ((2 * s * s / (ell + 3) - 1) * k[ell + 4] + k[ell + 2] - 6 * quad) / d,
    }
    out = {key: (v if isinstance(v, FEtaPoly) else Fraction(v)) for key, v in out.items()}
    if f is None:
        return out
    return {key: (v(f) if isinstance(v, FEtaPoly) else float(v)) for key, v in out.items()}
