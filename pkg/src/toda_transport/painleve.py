"""Numerical sigma-function of Painleve V and reconstruction of log-MGFs.

The logarithmic derivative ``sigma(z) = n(n+nu) + z d/dz log F(z)`` of the
conductance MGF solves the Jimbo-Miwa-Okamoto sigma form of Painleve V.  Its
derivative form is explicit in the third derivative,

    z^2 s''' = -z s'' - 6 z s'^2 + 4 s s' + (z^2 - 2 S z + nu^2) s' + (S - z) s,

with ``S = 2n + nu``, and is what we integrate.  The second-order form is
only used as a residual monitor.  Near the origin the solution is seeded
from its exact Taylor series, whose coefficients are the conductance
cumulants.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp

from .cumulants import conductance_cumulants
from .params import LeadConfig, effective_config
from .polys import pmul, psub, padd, pscale, trim

__all__ = [
    "SigmaSeries",
    "SigmaSolution",
    "IntegrationError",
    "sigma_series",
    "integrate_chazy",
    "jmo_residual",
    "jmo_series_residual",
    "chazy_series_residual",
    "log_mgf_from_sigma",
    "shot_mgf_symmetric",
]


class IntegrationError(RuntimeError):
    """The ODE integration failed; ``last_z`` is the last point reached."""

    def __init__(self, message: str, last_z: float):
        super().__init__(f"{message} (last good z = {last_z:.6g})")
        self.last_z = last_z


@dataclass(frozen=True)
class SigmaSeries:
    """Exact Taylor coefficients of sigma at the origin, lowest power first."""

    cfg: LeadConfig
    coefficients: tuple

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def derivative_coeffs(self, k: int) -> list[Fraction]:
        c = list(self.coefficients)
        for _ in range(k):
            c = [i * c[i] for i in range(1, len(c))]
        return c

    def evaluate(self, z: float, derivative: int = 0) -> float:
        acc = 0.0
        for c in reversed(self.derivative_coeffs(derivative)):
            acc = acc * z + float(c)
        return acc

    def log_mgf(self, z: float) -> float:
        """``int_0^z (sigma - n(n+nu)) / t dt`` term by term."""
        acc = 0.0
        for i in range(len(self.coefficients) - 1, 0, -1):
            acc = acc * z + float(self.coefficients[i]) / i
        return acc * z

    def truncation_bound(self, z: float) -> float:
        """Size of the last retained term, used as the seed error estimate."""
        return abs(float(self.coefficients[-1])) * abs(z) ** self.order


def sigma_series(cfg: LeadConfig, order: int, fallback: bool = True) -> SigmaSeries:
    """Taylor series of sigma from the conductance cumulants.

    ``sigma = n(n+nu) + sum_l (-1)^l kappa_l z^l / (l-1)!``.  Orders past the
    singular order of the cumulant recurrence need ``fallback``.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    kap = conductance_cumulants(cfg, order, fallback=fallback)
    coeffs = [Fraction(cfg.p)]
    for ell in range(1, order + 1):
        coeffs.append(Fraction((-1) ** ell, math.factorial(ell - 1)) * kap[ell])
    return SigmaSeries(cfg, tuple(coeffs))


def jmo_residual(cfg: LeadConfig, z, sigma, dsigma, d2sigma):
    """Residual of the second-order sigma form.

    ``(z s'')^2 - [s - z s' + 2 s'^2 + S s']^2 + 4 s'^2 (s' + n)(s' + n + nu)``.
    Works elementwise on floats, arrays, Fractions or mpmath numbers.
    """
    n, nu = cfg.n, cfg.nu
    S = cfg.s
    if not isinstance(z, Fraction):
        nu, S = float(nu), float(S)
    bracket = sigma - z * dsigma + 2 * dsigma * dsigma + S * dsigma
    return (z * d2sigma) ** 2 - bracket * bracket + 4 * dsigma * dsigma * (dsigma + n) * (dsigma + n + nu)


def _series_ops(series: SigmaSeries):
    s0 = list(series.coefficients)
    s1 = series.derivative_coeffs(1)
    s2 = series.derivative_coeffs(2)
    s3 = series.derivative_coeffs(3)
    z = [Fraction(0), Fraction(1)]
    return s0, s1, s2, s3, z


def jmo_series_residual(series: SigmaSeries) -> list[Fraction]:
    """Exact residual of the second-order form for the truncated series.

    Coefficients up to ``z^(order-1)`` must vanish; higher ones are
    truncation artefacts and are dropped.
    """
    cfg = series.cfg
    s0, s1, s2, _, z = _series_ops(series)
    S, n, nu = cfg.s, cfg.n, cfg.nu
    zs2 = pmul(z, s2)
    bracket = padd(padd(psub(s0, pmul(z, s1)), pscale(pmul(s1, s1), 2)), pscale(s1, S))
    last = pmul(pmul(pscale(pmul(s1, s1), 4), padd(s1, [n])), padd(s1, [n + nu]))
    res = padd(psub(pmul(zs2, zs2), pmul(bracket, bracket)), last)
    return (list(res) + [Fraction(0)] * series.order)[: series.order]


def chazy_series_residual(series: SigmaSeries) -> list[Fraction]:
    """Exact residual of the third-order form for the truncated series (low orders)."""
    cfg = series.cfg
    s0, s1, s2, s3, z = _series_ops(series)
    S, nu = cfg.s, cfg.nu
    z2 = [0, 0, 1]
    lhs = pmul(z2, s3)
    rhs = pscale(pmul(z, s2), -1)
    rhs = padd(rhs, pscale(pmul(z, pmul(s1, s1)), -6))
    rhs = padd(rhs, pscale(pmul(s0, s1), 4))
    rhs = padd(rhs, pmul([nu * nu, -2 * S, 1], s1))
    rhs = padd(rhs, pmul([S, -1], s0))
    res = trim(psub(lhs, rhs))
    return (list(res) + [Fraction(0)] * series.order)[: series.order - 1]


def _chazy_rhs(cfg: LeadConfig):
    S = float(cfg.s)
    nu2 = float(cfg.nu) ** 2
    p = float(cfg.p)

    def rhs(z, y):
        s, ds, d2s, _ = y
        d3s = (-z * d2s - 6 * z * ds * ds + 4 * s * ds + (z * z - 2 * S * z + nu2) * ds + (S - z) * s) / (z * z)
        return [ds, d2s, d3s, (s - p) / z]

    return rhs


@dataclass(frozen=True)
class SigmaSolution:
    """Trajectory of sigma on ``[z0, z1]`` with ``log F`` carried along.

    On ``[z0, handoff]`` the values come from the seed series, beyond it from
    the integrator.  ``grid`` holds the series samples and the accepted
    steps; ``__call__`` evaluates the state ``sigma, sigma', sigma'', log F``
    anywhere in range.
    """

    cfg: LeadConfig
    grid: np.ndarray
    sigma: np.ndarray
    dsigma: np.ndarray
    d2sigma: np.ndarray
    log_mgf: np.ndarray
    seed: SigmaSeries
    z0: float
    z1: float
    rtol: float
    atol: float
    handoff: float
    _segments: list = field(default_factory=list, repr=False, compare=False)

    def __call__(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if np.any(z < self.z0 - 1e-15) or np.any(z > self.z1 + 1e-12):
            raise ValueError(f"z outside the trajectory [{self.z0}, {self.z1}]")
        out = np.empty((4, z.size))
        for a, b, dense in self._segments:
            mask = (z >= a) & (z <= b)
            if mask.any():
                out[:, mask] = dense(z[mask])
        return out

    def jmo_residuals(self) -> np.ndarray:
        return jmo_residual(self.cfg, self.grid, self.sigma, self.dsigma, self.d2sigma)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["z", "sigma", "dsigma", "jmo_residual"])
        for row in zip(self.grid, self.sigma, self.dsigma, self.jmo_residuals()):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _auto_handoff(series: SigmaSeries, z0: float, z1: float, cap: float = 2.0) -> float:
    """Largest point where the seed series is accurate to ~1e-18.

    The radius of convergence is estimated root-test style from the last
    nonzero coefficients.
    """
    c = series.coefficients
    N = series.order
    tail = [abs(float(c[k])) ** (-1.0 / k) for k in range(max(1, N - 8), N + 1) if c[k] != 0]
    radius = min(tail) if tail else np.inf
    zh = radius * 1e-18 ** (1.0 / N)
    return float(min(max(zh, z0), cap, z1))


def integrate_chazy(cfg: LeadConfig, z0: float = 0.05, z1: float = 5.0, tol: float = 1e-12,
                    seed_order: int = 12, handoff="auto") -> SigmaSolution:
    """Integrate the third-order sigma equation from its Taylor seed.

    Parameters
    ----------
    z0, z1 : float
        Trajectory interval, ``0 < z0 < z1``.
    tol : float
        Relative tolerance of the embedded 8(5,3) Runge-Kutta pair, in
        ``[1e-13, 1e-6]``; the absolute tolerance is ``tol * 1e-2``.
    seed_order : int
        Minimum order of the Taylor seed (>= 6).
    handoff : "auto", float or None
        Where the ODE takes over from the series.  Near the origin the
        equation admits the analytic family ``sigma + c z^(2n+nu+1) + ...``,
        so a seed error at ``z`` grows like ``(z'/z)^(2n+nu+1)`` downstream.
        ``"auto"`` raises the seed order to 48 and hands off where that
        series is still accurate to ~1e-18 (at most ``z = 2``); ``None``
        integrates literally from ``z0`` with ``seed_order`` terms.

    The step is capped at ``z/10`` while ``z`` doubles from the handoff
    point below 1.  ``log F`` is integrated as a fourth state component,
    ``d log F / dz = (sigma - n(n+nu)) / z``.
    """
    if not 0 < z0 < z1:
        raise ValueError("need 0 < z0 < z1")
    if not 1e-13 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-13, 1e-6]")
    if seed_order < 6:
        raise ValueError("seed order must be >= 6")
    if handoff is None:
        seed = sigma_series(cfg, seed_order)
        zh = z0
    else:
        seed = sigma_series(cfg, max(seed_order, 48) if handoff == "auto" else seed_order)
        zh = _auto_handoff(seed, z0, z1) if handoff == "auto" else float(min(max(handoff, z0), z1))

    def series_state(z):
        z = np.atleast_1d(z)
        return np.array([[seed.evaluate(t, k) for t in z] for k in range(3)] + [[seed.log_mgf(t) for t in z]])

    segments = []
    grid = list(np.geomspace(z0, zh, 24)) if zh > z0 else [z0]
    states = list(series_state(np.array(grid)).T)
    if zh > z0:
        segments.append((z0, zh, series_state))
    y = series_state(zh)[:, 0]
    rhs = _chazy_rhs(cfg)
    atol = tol * 1e-2
    a = zh
    while a < z1:
        b = min(2 * a, z1) if a < 1.0 else z1
        max_step = a / 10 if a < 1.0 else np.inf
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=tol, atol=atol,
                        max_step=max_step, dense_output=True)
        if sol.status != 0:
            last = float(sol.t[-1]) if sol.t.size else a
            hint = "; try a larger z0" if a == zh else ""
            raise IntegrationError(f"integration failed: {sol.message}{hint}", last)
        if not np.all(np.isfinite(sol.y)):
            bad = int(np.argmax(~np.all(np.isfinite(sol.y), axis=0)))
            raise IntegrationError("non-finite state", float(sol.t[max(bad - 1, 0)]))
        segments.append((a, b, sol.sol))
        grid.extend(sol.t[1:])
        states.extend(sol.y[:, 1:].T)
        y = sol.y[:, -1]
        a = b
    st = np.array(states).T
    return SigmaSolution(cfg, np.array(grid), st[0], st[1], st[2], st[3], seed, z0, z1, tol, atol,
                         zh, segments)


def log_mgf_from_sigma(sol: SigmaSolution, z: float) -> float:
    """``log F(z) = int_0^z (sigma(t) - n(n+nu)) / t dt``.

    Below ``z0`` the seed series is integrated term by term; above it the
    integral is the carried fourth component of the trajectory.
    """
    if z < 0:
        raise ValueError("z must be non-negative")
    if z <= sol.handoff:
        return sol.seed.log_mgf(z)
    if z > sol.z1 + 1e-12:
        raise ValueError(f"z = {z} beyond the trajectory end {sol.z1}")
    return float(sol(z)[3, 0])


def shot_mgf_symmetric(n: int, z: float, tol: float = 1e-12, z0: float = 0.05) -> float:
    """``<exp(z P_shot)>`` for symmetric leads with ``n`` channels each.

    ``log = n z / 4 + log F_{floor(n/2), +1/2}(z/4) + log F_{ceil(n/2), -1/2}(z/4)``,
    each conductance-type factor reconstructed from its own sigma function.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if z < 0:
        raise ValueError("z must be non-negative")
    t = z / 4
    total = n * z / 4
    for m, nu in ((n // 2, Fraction(1, 2)), (-(-n // 2), Fraction(-1, 2))):
        if m == 0 or t == 0:
            continue
        cfg = effective_config(m, nu)
        if t <= z0:
            total += sigma_series(cfg, 24).log_mgf(t)
        else:
            total += log_mgf_from_sigma(integrate_chazy(cfg, z0, t, tol), t)
    return math.exp(total)
