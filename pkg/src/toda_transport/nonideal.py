"""A cavity with one tunnel-coupled lead.

The left lead has ``N_L`` channels, each with tunnel probability
``Gamma = 1 - gamma2`` (so the average scattering matrix of that lead is
``sqrt(gamma2)`` times the identity); the right lead with ``N_R >= N_L``
channels is ideal.  The reflection eigenvalues have a density built from a
determinant of Gauss hypergeometric functions, and the conductance MGF is a
determinant of one-dimensional integrals that forms a two-dimensional Toda
lattice in ``(z, gamma2)``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import mpmath
import numpy as np

from .params import ConfigurationError, default_precision, normalization_c
from .quadrature import QuadratureError, adaptive_gauss_legendre, composite_rule

__all__ = [
    "TunnelConfig",
    "Toda2DFrame",
    "tunnel_config",
    "gauss_2f1_transport",
    "gauss_2f1_series",
    "jpdf_normalization",
    "jpdf_reflection",
    "reflection_density",
    "group_integral_single",
    "m11_derivative",
    "mgf_nonideal",
    "mgf_nonideal_symmetric_form",
    "u_sequence",
    "toda2d_frame",
    "toda2d_check",
    "mgf_records",
]


@dataclass(frozen=True)
class TunnelConfig:
    """Channel counts and ``gamma2 = 1 - Gamma`` of the tunnel-coupled lead."""

    N_L: int
    N_R: int
    gamma2: float

    def __post_init__(self):
        if self.N_L < 1 or self.N_R < 1:
            raise ConfigurationError("channel counts must be positive")
        if self.N_R < self.N_L:
            raise ConfigurationError(f"the ideal lead needs N_R >= N_L, got ({self.N_L}, {self.N_R})")
        if not 0.0 <= self.gamma2 < 1.0:
            raise ConfigurationError(f"gamma2 must lie in [0, 1), got {self.gamma2}")

    @property
    def nu(self) -> int:
        return self.N_R - self.N_L

    @property
    def tunnel_probability(self) -> float:
        return 1.0 - self.gamma2


def tunnel_config(N_L: int, N_R: int, gamma2: float = 0.0) -> TunnelConfig:
    return TunnelConfig(int(N_L), int(N_R), float(gamma2))


# -- hypergeometric functions -----------------------------------------------

def _terminating_coeffs(N_R: int, k: int):
    """``[(-N_R)_j]^2 / ((k)_j j!)`` for ``j = 0..N_R``; all positive."""
    out = [Fraction(1)]
    for j in range(N_R):
        out.append(out[-1] * Fraction((j - N_R) ** 2, (k + j) * (j + 1)))
    return out


def gauss_2f1_transport(N_R: int, k: int, x, precision: int | None = None):
    """``2F1(N_R+k, N_R+k; k; x)`` through Euler's transformation.

    ``(1-x)^(-2 N_R - k) sum_{j<=N_R} [(-N_R)_j]^2 / ((k)_j j!) x^j``.  The
    sum has positive terms for ``x >= 0``, so double precision is already
    accurate to rounding; ``precision`` (bits, default from
    ``TODA_TRANSPORT_PRECISION``) above 53 switches to mpmath.
    Accepts scalars or arrays (double path only).
    """
    if k < 1 or N_R < 0:
        raise ValueError("need k >= 1 and N_R >= 0")
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr >= 1.0):
        raise ValueError("x must be < 1 (the physical domain is gamma2 * R < 1)")
    prec = default_precision() if precision is None else precision
    coeffs = _terminating_coeffs(N_R, k)
    if prec > 53:
        if x_arr.ndim:
            raise ValueError("extended precision path takes scalars")
        with mpmath.workprec(prec):
            xx = mpmath.mpf(float(x))
            poly = mpmath.fsum(mpmath.mpf(c.numerator) / c.denominator * xx ** j for j, c in enumerate(coeffs))
            return poly * (1 - xx) ** (-2 * N_R - k)
    poly = np.polynomial.polynomial.polyval(x_arr, [float(c) for c in coeffs])
    out = poly * (1.0 - x_arr) ** (-2 * N_R - k)
    return float(out) if out.ndim == 0 else out


def gauss_2f1_series(a, b, c, x: float, tol: float = 1e-16, max_terms: int = 100000) -> float:
    """Plain power series of ``2F1(a, b; c; x)``; a test oracle for ``|x| < 1``."""
    if abs(x) >= 1:
        raise ValueError("series needs |x| < 1")
    term, total = 1.0, 1.0
    for j in range(max_terms):
        term *= (a + j) * (b + j) / ((c + j) * (j + 1)) * x
        total += term
        if abs(term) <= tol * abs(total):
            return total
    raise ArithmeticError("hypergeometric series did not converge")


# -- reflection eigenvalue density ------------------------------------------

def jpdf_normalization(N_L: int, N_R: int) -> Fraction:
    """``c(N_L, N_R)`` of the reflection density.

    ``N_L! N_R! / (N_L+N_R)! prod_j 1/(j!)^2 prod_j (N_R+j)!/(N_R-j)!``; it
    equals ``1 / c_{N_L, N_R - N_L}`` of the ideal-lead density.
    """
    f = math.factorial
    c = Fraction(f(N_L) * f(N_R), f(N_L + N_R))
    for j in range(1, N_L + 1):
        c *= Fraction(f(N_R + j), f(j) ** 2 * f(N_R - j))
    return c


def _vandermonde(R):
    """``prod_{j<k} (R_k - R_j)`` along the last axis."""
    out = np.ones(R.shape[:-1])
    for j, k in combinations(range(R.shape[-1]), 2):
        out = out * (R[..., k] - R[..., j])
    return out


def jpdf_reflection(R, cfg: TunnelConfig):
    """Joint density of the ``N_L`` reflection eigenvalues.

    ``R`` has shape ``(N_L,)`` or ``(batch, N_L)`` with entries strictly in
    ``(0, 1)``.  The density is normalised over the full cube (unordered
    eigenvalues).
    """
    R = np.asarray(R, dtype=float)
    single = R.ndim == 1
    R = np.atleast_2d(R)
    if R.shape[-1] != cfg.N_L:
        raise ValueError(f"expected {cfg.N_L} eigenvalues, got {R.shape[-1]}")
    if np.any(R <= 0) or np.any(R >= 1):
        raise ValueError("reflection eigenvalues must lie strictly inside (0, 1)")
    NL, NR, g2 = cfg.N_L, cfg.N_R, cfg.gamma2
    mat = np.empty(R.shape + (NL,))
    for k in range(1, NL + 1):
        mat[..., k - 1] = R ** (k - 1) * gauss_2f1_transport(NR, k, g2 * R)
    det = np.linalg.det(mat)
    pref = float(jpdf_normalization(NL, NR)) * (1.0 - g2) ** (NL * (NL + NR))
    out = pref * _vandermonde(R) * np.prod((1.0 - R) ** (NR - NL), axis=-1) * det
    if np.any(~np.isfinite(out)):
        raise ArithmeticError("non-finite density value (determinant overflow)")
    return float(out[0]) if single else out


def reflection_density(R, cfg: TunnelConfig):
    """One-point density of a reflection eigenvalue (``N_L <= 2``)."""
    R = np.atleast_1d(np.asarray(R, dtype=float))
    if cfg.N_L == 1:
        return jpdf_reflection(R[:, None], cfg)
    if cfg.N_L == 2:
        out = np.empty_like(R)
        for i, r in enumerate(R):
            f = lambda s: jpdf_reflection(np.stack([np.full_like(s, r), s], axis=1), cfg)  # noqa: E731
            out[i] = adaptive_gauss_legendre(f, 0.0, 1.0, rtol=1e-10)
        return out
    raise NotImplementedError("one-point density implemented for N_L <= 2")


def group_integral_single(N_R: int, gamma2: float, R: float) -> float:
    """``N_L = 1`` group integral by quadrature over the phase.

    ``(1/2pi) int |1 - gamma sqrt(R) e^{i theta}|^{-2(N_R+1)} d theta``, which
    should equal ``2F1(N_R+1, N_R+1; 1; gamma2 R)``.
    """
    rho = math.sqrt(gamma2 * R)
    f = lambda th: np.abs(1.0 - rho * np.exp(1j * th)) ** (-2 * (N_R + 1))  # noqa: E731
    return adaptive_gauss_legendre(f, 0.0, 2 * math.pi, rtol=1e-13) / (2 * math.pi)


# -- conductance MGF ---------------------------------------------------------

def m11_derivative(cfg: TunnelConfig, z: float, gamma2: float, a: int, b: int, rule=None,
                   rtol: float = 1e-13) -> float:
    """``d^a/dz^a d^b/d(gamma2)^b`` of ``int_0^1 e^{zR} (1-R)^nu 2F1(N_R+1, N_R+1; 1; gamma2 R) dR``.

    Differentiating under the integral: ``d/dz`` brings down ``R``; the
    ``gamma2`` derivatives of the hypergeometric function are closed form,
    ``[(N_R+1)_b]^2 / b! R^b 2F1(N_R+1+b, N_R+1+b; 1+b; gamma2 R)``.
    With ``rule = (nodes, weights)`` a fixed rule is used instead of
    adaptive refinement.
    """
    NR, nu = cfg.N_R, cfg.nu
    poch = math.prod(range(NR + 1, NR + 1 + b))
    coef = poch * poch / math.factorial(b)

    def f(R):
        return coef * np.exp(z * R) * (1.0 - R) ** nu * R ** (a + b) * gauss_2f1_transport(NR, 1 + b, gamma2 * R)

    if rule is not None:
        x, w = rule
        return float(np.dot(w, f(x)))
    try:
        return adaptive_gauss_legendre(f, 0.0, 1.0, rtol=rtol)
    except QuadratureError as exc:
        raise QuadratureError(f"entry (a={a}, b={b}): {exc}") from None


def _det(mat: np.ndarray) -> float:
    cond = np.linalg.cond(mat)
    if cond > 1e10:
        warnings.warn(f"ill-conditioned {mat.shape[0]}x{mat.shape[0]} determinant (condition {cond:.2e})",
                      RuntimeWarning, stacklevel=3)
    return float(np.linalg.det(mat))


def mgf_nonideal(cfg: TunnelConfig, z: float, rtol: float = 1e-13) -> float:
    """``<exp(-z G)>`` for one tunnel-coupled lead.

    ``N_L! c(N_L, N_R) (1-gamma2)^(N_L(N_L+N_R)) e^{-N_L z} det M`` with
    ``M_jk = int_0^1 e^{zR} (1-R)^nu R^{j+k-2} 2F1(N_R+k, N_R+k; k; gamma2 R) dR``.
    """
    NL, NR, g2 = cfg.N_L, cfg.N_R, cfg.gamma2
    M = np.empty((NL, NL))
    for j in range(1, NL + 1):
        for k in range(1, NL + 1):
            def f(R, j=j, k=k):
                return np.exp(z * R) * (1.0 - R) ** cfg.nu * R ** (j + k - 2) * gauss_2f1_transport(NR, k, g2 * R)
            try:
                M[j - 1, k - 1] = adaptive_gauss_legendre(f, 0.0, 1.0, rtol=rtol)
            except QuadratureError as exc:
                raise QuadratureError(f"entry ({j}, {k}): {exc}") from None
    pref = math.factorial(NL) * float(jpdf_normalization(NL, NR)) * (1.0 - g2) ** (NL * (NL + NR))
    return pref * math.exp(-NL * z) * _det(M)


def _tilde_c(NL: int, NR: int) -> Fraction:
    """Constant in front of the mixed-derivative determinant (without the gamma factor)."""
    f = math.factorial
    c = f(NL) * Fraction(f(NL + NR), f(NL) * f(NR))
    for j in range(NL):
        c /= f(j)
    for j in range(1, NL + 1):
        c *= Fraction(f(NR) ** 2, f(NR - j) * f(NR + j))
    return c


def mgf_nonideal_symmetric_form(cfg: TunnelConfig, z: float) -> float:
    """The MGF as ``c_tilde (1-gamma2)^(N_L(N_L+N_R)) e^{-N_L z} u_{N_L}(z, gamma2)``.

    The entries of ``M`` are mixed derivatives of ``M_11`` up to column
    factors; ``c_tilde`` collects them with the density normalisation.
    """
    NL, NR, g2 = cfg.N_L, cfg.N_R, cfg.gamma2
    u = u_sequence(cfg, z, g2, NL)[NL]
    return float(_tilde_c(NL, NR)) * (1.0 - g2) ** (NL * (NL + NR)) * math.exp(-NL * z) * u


def u_sequence(cfg: TunnelConfig, z: float, gamma2: float, kmax: int, rule=None) -> list[float]:
    """``u_0 .. u_kmax`` with ``u_k = det[d_z^{j-1} d_{gamma2}^{i-1} M_11]_{j,i<=k}``."""
    if not 0.0 <= gamma2 < 1.0:
        raise ValueError("gamma2 must lie in [0, 1)")
    size = kmax
    D = np.empty((size, size))
    for a in range(size):
        for b in range(size):
            D[a, b] = m11_derivative(cfg, z, gamma2, a, b, rule=rule)
    out = [1.0]
    for k in range(1, kmax + 1):
        out.append(float(np.linalg.det(D[:k, :k])))
    return out


@dataclass(frozen=True)
class Toda2DFrame:
    """``u_{n-1}, u_n, u_{n+1}`` at the centre and ``log u_n`` on the stencil."""

    n: int
    z: float
    gamma2: float
    h: float
    u_prev: float
    u: float
    u_next: float
    log_u_stencil: tuple
    mixed_derivative: float

    @property
    def residual(self) -> float:
        return abs(self.mixed_derivative - self.u_prev * self.u_next / self.u ** 2)


def toda2d_frame(cfg: TunnelConfig, z: float, gamma2: float, h: float, n: int | None = None,
                 rule=None) -> Toda2DFrame:
    """Evaluate the pieces of the two-dimensional Toda identity at one point.

    The mixed derivative of ``log u_n`` uses the four-point central stencil
    ``(z +- h, gamma2 +- h)``; all entries use one fixed composite rule so
    that the quadrature error does not pollute the finite differences.
    """
    n = cfg.N_L if n is None else n
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0.0 <= gamma2 - h and gamma2 + h < 1.0):
        raise ValueError("stencil leaves the domain 0 <= gamma2 < 1")
    rule = rule or composite_rule(0.0, 1.0, panels=8, order=40)
    centre = u_sequence(cfg, z, gamma2, n + 1, rule)
    logs = []
    for dz, dg in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        un = u_sequence(cfg, z + dz * h, gamma2 + dg * h, n, rule)[n]
        if un <= 0:
            raise ArithmeticError(f"u_{n} = {un} <= 0 at (z, gamma2) = ({z + dz * h}, {gamma2 + dg * h})")
        logs.append(math.log(un))
    mixed = (logs[0] - logs[1] - logs[2] + logs[3]) / (4 * h * h)
    return Toda2DFrame(n, z, gamma2, h, centre[n - 1], centre[n], centre[n + 1], tuple(logs), mixed)


def toda2d_check(cfg: TunnelConfig, z: float, gamma2: float, h: float, n: int | None = None) -> float:
    """``|d^2 log u_n / dz d gamma2 - u_{n-1} u_{n+1} / u_n^2|`` by finite differences."""
    return toda2d_frame(cfg, z, gamma2, h, n).residual


def mgf_records(cfg: TunnelConfig, zs) -> list[dict]:
    return [{"NL": cfg.N_L, "NR": cfg.N_R, "gamma2": cfg.gamma2, "z": float(z), "mgf": mgf_nonideal(cfg, float(z))}
            for z in zs]


def mgf_json(cfg: TunnelConfig, zs) -> str:
    return json.dumps(mgf_records(cfg, zs), indent=1)


def density_csv(cfg: TunnelConfig, grid) -> str:
    grid = np.asarray(grid, dtype=float)
    vals = reflection_density(grid, cfg)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["R", "pdf"])
    for r, p in zip(grid, vals):
        w.writerow([repr(float(r)), repr(float(p))])
    return buf.getvalue()
