"""A tunnel-coupled lead, checked against random-matrix sampling.

Computes the reflection-eigenvalue density and conductance MGF when the
left lead couples through a barrier with transparency 1 - gamma2, then
samples the same system two ways: a Hamiltonian model with an explicit
coupling matrix and the Poisson-kernel construction.  Finally the CUE
sampler is checked against exact cumulants.

Run with ``python demos/tunnel_and_sampling.py`` (about half a minute).
"""
import math

import numpy as np

from toda_transport import conductance_cumulants, lead_config
from toda_transport.montecarlo import (cue_observables, estimate_cumulants, heidelberg_smatrix,
                                       poisson_kernel_sample)
from toda_transport.nonideal import jpdf_reflection, mgf_nonideal, reflection_density, tunnel_config
from toda_transport.quadrature import adaptive_gauss_legendre

cfg = tunnel_config(1, 2, 0.5)
R = np.linspace(0.05, 0.95, 7)
print("reflection density, N_L = 1, N_R = 2, gamma2 = 0.5")
for r, p in zip(R, reflection_density(R, cfg)):
    print(f"  R = {r:.2f}  P(R) = {p:.5f}")
mean_R = adaptive_gauss_legendre(lambda x: x * jpdf_reflection(x[:, None], cfg), 0.0, 1.0)
print(f"<R> = {mean_R:.6f}, <exp(-G)> = {mgf_nonideal(cfg, 1.0):.6f}")

rng = np.random.default_rng(0)
for name, smp in (("Hamiltonian model, M = 200", heidelberg_smatrix(200, cfg, rng, 400)),
                  ("Poisson kernel", poisson_kernel_sample(cfg, rng, 20_000))):
    r = smp.R[:, 0]
    print(f"{name:28s} <R> = {r.mean():.4f} +- {r.std(ddof=1) / math.sqrt(r.size):.4f}")

G, _ = cue_observables(2, 3, 200_000, seed=1)
exact = conductance_cumulants(lead_config(2, 3), 3)
print("\nCUE N_L = 2, N_R = 3")
for e in estimate_cumulants(G, 3):
    print(f"  kappa_{e.order}: {e.estimate:+.5f} +- {e.stderr:.5f}   exact {float(exact[e.order]):+.5f}")
