"""Published reference values used as oracles by the tests.

Everything here is transcribed as printed; where a printed value is known
to be wrong the correct value lives next to it and the test says which one
it checks.
"""
from fractions import Fraction as Fr

from toda_transport.polys import pmul, pscale


def _xpow(k):
    return [Fr(0)] * k + [Fr(1)]


def _poly(coeffs_high_to_low):
    return [Fr(c) for c in reversed(coeffs_high_to_low)]


# density polynomials pi_k^{(n,0)}(x) for symmetric leads, coefficients low -> high
PRINTED_DENSITY_POLYS = {
    (1, 0): [Fr(1, 2)],
    (2, 0): _xpow(3),
    (2, 1): pscale(pmul(_xpow(1), _poly([1, 0, 3])), -2),
    (3, 0): pscale(_xpow(8), Fr(3, 28)),
    (3, 1): pscale(pmul(_xpow(4), _poly([1, 0, 56, -112, 140])), Fr(-9, 28)),
    (4, 0): pscale(_xpow(15), Fr(1, 3003)),
    (4, 1): pscale(pmul(_xpow(9), _poly([1, 0, 315, -2730, 15015, -30030, 25025])), Fr(-4, 3003)),
    (4, 2): pscale(pmul(_xpow(7), _poly([3, 0, 1260, 0, 10920, 0, 400400, 0, 900900])), Fr(-2, 3003)),
}


def mean_conductance(n, nu):
    return Fr(n * (n + nu), 2 * n + nu)


def variance_conductance(n, nu):
    s = 2 * n + nu
    return Fr(n * n * (n + nu) ** 2, s * s * (s * s - 1))


def kappa3_as_printed(n, nu):
    """``-nu^2 kappa_1^2 / (2n + nu)``."""
    return -nu * nu * mean_conductance(n, nu) ** 2 / (2 * n + nu)


def shot_as_printed(n):
    q = 4 * n * n
    return (Fr(n ** 3, 2 * (q - 1)),
            Fr(n * n * (4 * n ** 4 - 9 * n * n + 3), 8 * (q - 1) ** 2 * (q - 9)),
            Fr(n * n * (16 * n ** 6 - 24 * n ** 4 + 9 * n * n + 1), 128 * (q - 1) ** 4))


def shot_kappa3_exact(n):
    """Third shot-noise cumulant fitted to the exact engine over n = 1..15."""
    q = 4 * n * n
    return Fr(n ** 3 * (4 * n ** 4 - 13 * n * n + 6), 4 * (q - 1) ** 3 * (q - 9) * (q - 25))


def uniform_cumulant(m):
    """Cumulants of the uniform law on (0, 1): ``B_m / m`` for m >= 2."""
    from math import comb
    B = [Fr(1)]
    for k in range(1, m + 1):
        B.append(-sum(comb(k + 1, j) * B[j] for j in range(k)) / (k + 1))
    if m == 1:
        return Fr(1, 2)
    return B[m] / m
