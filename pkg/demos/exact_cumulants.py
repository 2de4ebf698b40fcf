"""Exact conductance statistics of a chaotic cavity with ideal leads.

Walks through the exact engine: the moment generating function as a
finite sum of exponentials over powers of z, the conductance density read
off from it, and the cumulant recurrence, including the singular order
where the recurrence hands over to the Taylor series.

Run with ``python demos/exact_cumulants.py``.
"""
from fractions import Fraction

import numpy as np

from toda_transport import (conductance_cumulants, density_from_mgf, effective_config, lead_config, mgf_hankel,
                            toda_check)
from toda_transport.cumulants import kappa3_closed, kappa3_printed

# Two channels on the left, three on the right: n = 2, nu = 1.
cfg = lead_config(2, 3)
F = mgf_hankel(cfg)
print(f"MGF for {cfg}:")
print(" ", F)

# The density is piecewise polynomial with breakpoints at the integers.
dens = density_from_mgf(F, cfg)
g = np.linspace(0.0, 2.0, 9)
print("\nconductance density")
for gi, p in zip(g, dens.pdf(g)):
    print(f"  g = {gi:4.2f}   P(g) = {p:.6f}")
print("total mass:", dens.total_mass())

# Cumulants from the nonlinear recurrence, exact rationals throughout.
seq = conductance_cumulants(cfg, 6)
print("\ncumulants:")
for ell, k in enumerate(seq, start=1):
    print(f"  kappa_{ell} = {k}  ({float(k):.3e})")

# The often-quoted third cumulant only holds for symmetric leads.
print("\nthird cumulant, exact:", kappa3_closed(cfg), " quoted form:", kappa3_printed(cfg))

# For n = 1, nu = 0 the coefficient of kappa_3 vanishes at order 2; the
# engine fills that order from the MGF series and carries on.
uni = conductance_cumulants(effective_config(1, 0), 6)
print("\nsingle channel (uniform T):", [str(k) for k in uni], " series orders:", uni.series_orders)

# The MGFs at consecutive n are tied together by a Toda lattice equation.
print("\nToda identity holds exactly for n <= 4, nu <= 2:",
      all(toda_check(effective_config(n, nu)) for n in range(1, 5) for nu in range(3)))
print("half-integer nu cumulant:", conductance_cumulants(effective_config(2, Fraction(1, 2)), 1)[1])
