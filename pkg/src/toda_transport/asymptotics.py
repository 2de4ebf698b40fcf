"""Large-n expansions of conductance, joint and noise-power cumulants.

Everything here is exact rational arithmetic when ``n`` and ``f`` are
rational, so the difference between the exact engine and an expansion can
be measured far below double-precision cancellation.

Conventions.  With ``chi_l = (-1)^l kappa_l / Gamma(l)`` and
``delta chi_l = a_l/(4n)^l + b_l/(4n)^(l+1) + c_l/(4n)^(l+2) + ...`` the
conductance cumulants are

    kappa_l = (2n+nu)/4 [l=1] + 1/16 [l=2]
              + (-1)^l Gamma(l) (a_l/(4n)^l (1 - nu l / 2n) + c_l/(4n)^(l+2)).

The factor ``(-1)^l`` on the ``a_l`` term matters for odd ``l`` and
``nu != 0``: for ``l = 1`` the exact mean ``n(n+nu)/(2n+nu)`` has the
correction ``-nu^2/(8n)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cumulants import conductance_cumulants, joint_cumulants
from .params import LeadConfig, as_fraction, effective_config

__all__ = [
    "AsymptoticCumulant",
    "a_coeff",
    "b_coeff",
    "c_coeff",
    "kappa_asymptotic",
    "chi_values",
    "chi_recurrence_residuals",
    "chi_recurrence_check",
    "joint_asymptotic",
    "noise_power_asymptotic",
    "measured_order",
    "convergence_sweep",
    "sweep_to_csv",
]


def a_coeff(ell: int, nu) -> Fraction:
    """``a_l(nu) = (1 + (-1)^l (1 - 4 nu^2)) / 8``."""
    nu = as_fraction(nu)
    return (1 + (-1) ** ell * (1 - 4 * nu * nu)) / Fraction(8)


def b_coeff(ell: int, nu) -> Fraction:
    """``b_l(nu) = -l nu / 4 (1 + (-1)^l (1 - 4 nu^2))``."""
    nu = as_fraction(nu)
    return -ell * nu / 4 * (1 + (-1) ** ell * (1 - 4 * nu * nu))


def c_coeff(ell: int, nu) -> Fraction:
    """Coefficient of the ``(4n)^-(l+2)`` term of ``delta chi_l``."""
    nu = as_fraction(nu)
    q = 3 * (3 * ell * ell - 4)
    even = 12 * nu * nu * (2 * ell + 3) + q
    odd = (1 - 4 * nu * nu) * (4 * nu * nu * (ell + 1) * (ell - 7) - q)
    return Fraction(ell, 96) * (even - (-1) ** ell * odd)


@dataclass(frozen=True)
class AsymptoticCumulant:
    """An assembled expansion at one ``n`` together with its ingredients."""

    ell: int
    m: int
    n: int
    nu: Fraction
    f_eta: object
    a: Fraction | None
    b: Fraction | None
    c: Fraction | None
    value: object


def kappa_asymptotic(ell: int, cfg: LeadConfig, with_c: bool = True,
                     alternating: bool = True) -> AsymptoticCumulant:
    """Large-n expansion of the conductance cumulant ``kappa_l``.

    Parameters
    ----------
    with_c : bool
        Include the ``(4n)^-(l+2)`` term.
    alternating : bool
        Put the ``(-1)^l`` factor on the ``a_l, b_l`` terms.  ``False``
        reproduces the variant without it, which is wrong at odd ``l`` for
        ``nu != 0`` and is kept for comparison.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    n, nu = cfg.n, cfg.nu
    four_n = Fraction(4 * n)
    a, b, c = a_coeff(ell, nu), b_coeff(ell, nu), c_coeff(ell, nu)
    g = math.factorial(ell - 1)
    sgn = (-1) ** ell
    value = Fraction(0)
    if ell == 1:
        value += (2 * n + nu) / Fraction(4)
    if ell == 2:
        value += Fraction(1, 16)
    value += (sgn if alternating else 1) * g * (a / four_n ** ell + b / four_n ** (ell + 1))
    if with_c:
        value += sgn * g * c / four_n ** (ell + 2)
    return AsymptoticCumulant(ell, 0, n, nu, None, a, b, c if with_c else None, value)


def chi_values(cfg: LeadConfig, L: int) -> list[Fraction]:
    """``chi_0 .. chi_L`` with ``chi_0 = n(n+nu)``."""
    kap = conductance_cumulants(cfg, L)
    return [Fraction(cfg.p)] + [Fraction((-1) ** l, math.factorial(l - 1)) * kap[l] for l in range(1, L + 1)]


def chi_recurrence_residuals(chi, s, L: int) -> list:
    """Residuals of the chi-form recurrence for ``l = 0 .. L-1``.

    ``(l+1)(l^2 - s^2) chi_{l+1} + s(2l-1) chi_l - (l-2) chi_{l-1}
    + 2 sum_{j<l} (l-j)(3j+1) chi_{j+1} chi_{l-j}`` with ``chi_{-1} = 0``.
    """
    out = []
    for ell in range(L):
        prev = chi[ell - 1] if ell >= 1 else 0
        r = (ell + 1) * (ell * ell - s * s) * chi[ell + 1] + s * (2 * ell - 1) * chi[ell] - (ell - 2) * prev
        for j in range(ell):
            r += 2 * (ell - j) * (3 * j + 1) * chi[j + 1] * chi[ell - j]
        out.append(r)
    return out


def chi_recurrence_check(cfg: LeadConfig, L: int) -> list[Fraction]:
    """Residuals of the chi-form recurrence on the exact cumulants (all zero)."""
    return chi_recurrence_residuals(chi_values(cfg, L), cfg.s, L)


def joint_asymptotic(ell: int, m: int, n: int, f_eta) -> AsymptoticCumulant:
    """Large-n joint cumulant ``<<G^l P^m>>`` for symmetric leads.

    Gaussian part plus the leading non-Gaussian correction
    ``(l+m-1)! / (8 (4n)^(l+m)) [(f/2+1)^m + (-1)^l (f/2-1)^m]``.
    """
    if ell + m < 1:
        raise ValueError("need l + m >= 1")
    f = f_eta
    half = Fraction(1, 2) if isinstance(f, Fraction) else 0.5
    gauss = 0
    if (ell, m) == (1, 0):
        gauss = Fraction(n, 2)
    elif (ell, m) == (0, 1):
        gauss = Fraction(n, 2) * (1 + f / 4)
    elif (ell, m) in ((1, 1), (2, 0)):
        gauss = Fraction(1, 16)
    elif (ell, m) == (0, 2):
        gauss = Fraction(1, 16) * (1 + f * f / 8)
    corr = Fraction(math.factorial(ell + m - 1), 8 * (4 * n) ** (ell + m)) \
        * ((f * half + 1) ** m + (-1) ** ell * (f * half - 1) ** m)
    return AsymptoticCumulant(ell, m, n, Fraction(0), f, None, None, None, gauss + corr)


def noise_power_asymptotic(ell: int, n: int, f_eta):
    """Large-n cumulant of the noise power ``4P`` for symmetric leads.

    ``2n(1 + f/4)[l=1] + (1 + f^2/8)[l=2] + (l-1)!/(8 n^l) [(f/2-1)^l + (f/2+1)^l]``.
    This is ``4^l`` times :func:`joint_asymptotic` at ``(0, l)``, i.e. the
    cumulants of ``P`` in units of ``theta G_0`` rather than ``4 theta G_0``.
    """
    f = f_eta
    half = Fraction(1, 2) if isinstance(f, Fraction) else 0.5
    value = 0
    if ell == 1:
        value += 2 * n * (1 + f / 4)
    if ell == 2:
        value += 1 + f * f / 8
    value += Fraction(math.factorial(ell - 1), 8 * n ** ell) * ((f * half - 1) ** ell + (f * half + 1) ** ell)
    return value


def measured_order(ns, errors) -> float:
    """Least-squares slope of ``-log|err|`` against ``log n``.

    Returns ``inf`` when every error is exactly zero and ``nan`` for a
    single point.
    """
    e = np.array([abs(float(x)) for x in errors])
    if np.all(e == 0):
        return math.inf
    if len(e) < 2:
        return math.nan
    if np.any(e == 0):
        return math.inf
    slope = np.polyfit(np.log(np.asarray(ns, dtype=float)), np.log(e), 1)[0]
    return float(-slope)


def convergence_sweep(kind: str, ell: int, nu=0, m: int = 0, f_eta=Fraction(0),
                      ns=(8, 16, 32, 64), **kw) -> list[dict]:
    """Exact-versus-expansion rows over an ``n`` sweep.

    ``kind`` is ``"conductance"`` (``kappa_asymptotic``), ``"joint"`` or
    ``"noise"``.  Each row carries ``(l, m, n, exact, asymptotic, abs_err)``;
    every row gets the overall ``measured_order``.
    """
    rows = []
    for n in ns:
        cfg = effective_config(n, nu)
        if kind == "conductance":
            exact = conductance_cumulants(cfg, ell)[ell]
            approx = kappa_asymptotic(ell, cfg, **kw).value
        elif kind == "joint":
            exact = joint_cumulants(cfg, ell, m)[(ell, m)](f_eta)
            approx = joint_asymptotic(ell, m, n, f_eta).value
        elif kind == "noise":
            exact = 4 ** ell * joint_cumulants(cfg, 0, ell)[(0, ell)](f_eta)
            approx = noise_power_asymptotic(ell, n, f_eta)
        else:
            raise ValueError(f"unknown sweep kind {kind!r}")
        rows.append({"l": ell, "m": m, "n": n, "exact": exact, "asymptotic": approx,
                     "abs_err": abs(exact - approx)})
    order = measured_order([r["n"] for r in rows], [r["abs_err"] for r in rows])
    for r in rows:
        r["measured_order"] = order
    return rows


def sweep_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["l", "m", "n", "exact", "asymptotic", "abs_err", "measured_order"])
    for r in rows:
        w.writerow([r["l"], r["m"], r["n"], repr(float(r["exact"])), repr(float(r["asymptotic"])),
                    repr(float(r["abs_err"])), repr(r["measured_order"])])
    return buf.getvalue()
