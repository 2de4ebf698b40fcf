"""Dense univariate polynomials and truncated power series over the rationals.

Both are plain lists of coefficients, lowest power first.  Polynomials are
kept trimmed (no trailing zeros); power series carry a fixed length.
"""
from __future__ import annotations

from fractions import Fraction
from math import comb, factorial

__all__ = [
    "trim", "padd", "psub", "pscale", "pmul", "pshift", "preflect", "peval",
    "pintegrate", "pdeg", "exp_series", "ps_mul", "ps_inv", "ps_div", "ps_log", "ps_exp", "ps_det",
]


def trim(p):
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def pdeg(p) -> int:
    """Degree of a polynomial; -1 for the zero polynomial."""
    return len(trim(p)) - 1


def padd(a, b):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] += c
    return trim(out)


def pscale(p, c):
    return trim([c * x for x in p])


def psub(a, b):
    return padd(a, pscale(b, -1))


def pmul(a, b):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return trim(out)


def pshift(p, a):
    """Coefficients of ``p(x + a)``."""
    out = [Fraction(0)] * len(p)
    for i, c in enumerate(p):
        if c == 0:
            continue
        apow = Fraction(1)
        for j in range(i, -1, -1):
            out[j] += c * comb(i, j) * apow
            apow *= a
    return trim(out)


def preflect(p):
    """Coefficients of ``p(-x)``."""
    return [c if i % 2 == 0 else -c for i, c in enumerate(p)]


def peval(p, x):
    acc = 0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def pintegrate(p):
    """Antiderivative vanishing at 0."""
    return trim([Fraction(0)] + [Fraction(c) / (i + 1) for i, c in enumerate(p)])


# -- truncated power series -------------------------------------------------

def ps_mul(a, b, order: int):
    """Product truncated to ``order + 1`` coefficients."""
    out = [Fraction(0)] * (order + 1)
    for i, x in enumerate(a[: order + 1]):
        if x == 0:
            continue
        for j in range(min(len(b), order + 1 - i)):
            out[i + j] += x * b[j]
    return out


def ps_inv(a, order: int):
    if a[0] == 0:
        raise ZeroDivisionError("power series with zero constant term is not invertible")
    inv0 = 1 / Fraction(a[0])
    out = [inv0] + [Fraction(0)] * order
    for k in range(1, order + 1):
        acc = sum((a[i] * out[k - i] for i in range(1, min(k, len(a) - 1) + 1)), Fraction(0))
        out[k] = -acc * inv0
    return out


def ps_div(a, b, order: int):
    return ps_mul(a, ps_inv(b, order), order)


def ps_log(a, order: int):
    """``log a`` for a series with constant term 1."""
    if a[0] != 1:
        raise ValueError("ps_log needs constant term 1")
    a = list(a[: order + 1]) + [Fraction(0)] * max(0, order + 1 - len(a))
    da = [(i + 1) * a[i + 1] for i in range(order)]
    q = ps_div(da, a, order - 1) if order >= 1 else []
    return [Fraction(0)] + [q[i] / (i + 1) for i in range(order)]


def ps_exp(a, order: int):
    """``exp a`` for a series with zero constant term."""
    if a and a[0] != 0:
        raise ValueError("ps_exp needs zero constant term")
    a = list(a[: order + 1]) + [Fraction(0)] * max(0, order + 1 - len(a))
    out = [Fraction(1)] + [Fraction(0)] * order
    # e' = a' e  =>  k e_k = sum_j j a_j e_{k-j}
    for k in range(1, order + 1):
        out[k] = sum(j * a[j] * out[k - j] for j in range(1, k + 1)) / k
    return out


def ps_det(matrix, order: int):
    """Determinant of a square matrix of power series by Gaussian elimination.

    Pivots are chosen among rows whose constant term is nonzero, which always
    exists when the constant-term matrix is nonsingular.
    """
    m = [[list(e) + [Fraction(0)] * (order + 1 - len(e)) for e in row] for row in matrix]
    size = len(m)
    det = [Fraction(1)] + [Fraction(0)] * order
    for col in range(size):
        piv = next((r for r in range(col, size) if m[r][col][0] != 0), None)
        if piv is None:
            raise ZeroDivisionError("constant-term matrix is singular")
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = [-c for c in det]
        pivot = m[col][col]
        det = ps_mul(det, pivot, order)
        inv = ps_inv(pivot, order)
        for r in range(col + 1, size):
            factor = ps_mul(m[r][col], inv, order)
            if not any(factor):
                continue
            for c in range(col + 1, size):
                prod = ps_mul(factor, m[col][c], order)
                m[r][c] = [x - y for x, y in zip(m[r][c], prod)]
    return det


def exp_series(k, order: int):
    """Taylor coefficients of ``exp(-k z)``."""
    return [Fraction((-k) ** i, factorial(i)) for i in range(order + 1)]
