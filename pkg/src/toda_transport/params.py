"""Lead configuration, thermodynamic crossover factor and exact normalisations.

All rationals are :class:`fractions.Fraction` instances.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

__all__ = [
    "ConfigurationError",
    "LeadConfig",
    "ThermoFactor",
    "SHOT",
    "ShotLimit",
    "lead_config",
    "effective_config",
    "thermo_factor",
    "normalization_c",
    "conductance_variance",
    "as_fraction",
    "default_precision",
]


class ConfigurationError(ValueError):
    """Raised for invalid channel counts or ensemble parameters."""


def as_fraction(x) -> Fraction:
    """Convert ints, Fractions and ``"p/q"`` strings to Fraction (floats are refused)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


@dataclass(frozen=True)
class LeadConfig:
    """Channel counts of the two leads.

    ``n`` and ``nu`` are the parameters everything else depends on. ``N_L`` and
    ``N_R`` are ``None`` for effective configurations (half-integer ``nu``) that
    do not correspond to a physical pair of leads.
    """

    n: int
    nu: Fraction
    N_L: int | None = None
    N_R: int | None = None
    gamma: float | None = field(default=None, compare=False)

    def __post_init__(self):
        nu = as_fraction(self.nu)
        object.__setattr__(self, "nu", nu)
        if self.n < 0:
            raise ConfigurationError(f"n must be non-negative, got {self.n}")
        if nu < Fraction(-1, 2):
            raise ConfigurationError(f"nu must be >= -1/2, got {nu}")
        if self.n > 0 and self.n + nu <= 0:
            raise ConfigurationError(f"n + nu must be positive, got n={self.n}, nu={nu}")

    @property
    def s(self) -> Fraction:
        """The combination ``2n + nu`` appearing in every recurrence."""
        return 2 * self.n + self.nu

    @property
    def p(self) -> Fraction:
        """``n (n + nu)``: the value of the sigma function at the origin."""
        return self.n * (self.n + self.nu)

    @property
    def integer_nu(self) -> bool:
        return self.nu.denominator == 1

    @property
    def physical(self) -> bool:
        return self.N_L is not None

    def shifted(self, dn: int) -> "LeadConfig":
        """Same asymmetry, ``n`` shifted by ``dn`` (used by lattice identities)."""
        return LeadConfig(self.n + dn, self.nu)

    def __str__(self) -> str:
        if self.physical:
            return f"N_L={self.N_L}, N_R={self.N_R} (n={self.n}, nu={self.nu})"
        return f"n={self.n}, nu={self.nu}"


def lead_config(N_L: int, N_R: int, gamma: float | None = None) -> LeadConfig:
    """Build a physical configuration from the two channel counts.

    >>> lead_config(2, 3)
    LeadConfig(n=2, nu=Fraction(1, 1), N_L=2, N_R=3, gamma=None)
    """
    if int(N_L) != N_L or int(N_R) != N_R:
        raise ConfigurationError("channel counts must be integers")
    if N_L < 1 or N_R < 1:
        raise ConfigurationError(f"channel counts must be positive, got ({N_L}, {N_R})")
    if gamma is not None and not 0.0 < gamma <= 1.0:
        raise ConfigurationError(f"tunnel probability must lie in (0, 1], got {gamma}")
    return LeadConfig(min(N_L, N_R), Fraction(abs(N_L - N_R)), int(N_L), int(N_R), gamma)


def effective_config(n: int, nu) -> LeadConfig:
    """Configuration labelled only by ``(n, nu)``; ``nu`` may be half-integer."""
    return LeadConfig(int(n), as_fraction(nu))


class ShotLimit:
    """Sentinel for ``eta = +inf``; callers route to the shot-noise operations."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "SHOT"

    def __reduce__(self):
        return (ShotLimit, ())


SHOT = ShotLimit()


@dataclass(frozen=True)
class ThermoFactor:
    eta: float
    f_eta: float


def thermo_factor(eta) -> ThermoFactor | ShotLimit:
    """Thermodynamic function ``f = eta * coth(eta) - 1``.

    Uses the Laurent series below ``eta = 1e-4`` where the direct form cancels.
    ``SHOT`` (or the string ``"inf"``) is passed through unchanged.
    """
    if eta is SHOT or (isinstance(eta, str) and eta.strip().lower() in {"inf", "+inf", "infinity"}):
        return SHOT
    eta = float(eta)
    if math.isnan(eta) or eta < 0:
        raise ConfigurationError(f"eta must be non-negative, got {eta}")
    if math.isinf(eta):
        return SHOT
    if eta < 1e-4:
        e2 = eta * eta
        f = e2 / 3 - e2 * e2 / 45 + 2 * e2 ** 3 / 945
    else:
        f = eta / math.tanh(eta) - 1.0
    return ThermoFactor(eta, f)


def normalization_c(n: int, nu) -> Fraction:
    """Normalisation constant of the transmission-eigenvalue density.

    ``prod_{j<n} Gamma(j+2) Gamma(j+nu+1) Gamma(j+1) / Gamma(j+nu+n+1)`` with
    integer arguments, evaluated as factorials.
    """
    nu = as_fraction(nu)
    if nu.denominator != 1:
        raise ConfigurationError("normalization_c needs integer nu; half-integer cases go through cumulant ratios")
    nu = int(nu)
    if n < 0 or n + nu < 0:
        raise ConfigurationError(f"invalid (n, nu) = ({n}, {nu})")
    fact = math.factorial
    c = Fraction(1)
    for j in range(n):
        c *= Fraction(fact(j + 1) * fact(j + nu) * fact(j), fact(j + nu + n))
    return c


def conductance_variance(n: int, nu) -> Fraction:
    """``n^2 (n+nu)^2 / ((2n+nu)^2 ((2n+nu)^2 - 1))``, the Toda lattice coupling."""
    nu = as_fraction(nu)
    s = 2 * n + nu
    return (n * (n + nu)) ** 2 / (s * s * (s * s - 1))


def default_precision() -> int:
    """Extended-precision bits, from ``TODA_TRANSPORT_PRECISION`` (default 53)."""
    raw = os.environ.get("TODA_TRANSPORT_PRECISION", "").strip()
    if not raw:
        return 53
    try:
        bits = int(raw)
    except ValueError:
        raise ConfigurationError(f"TODA_TRANSPORT_PRECISION must be an integer, got {raw!r}") from None
    if bits < 53:
        raise ConfigurationError("TODA_TRANSPORT_PRECISION must be at least 53")
    return bits
