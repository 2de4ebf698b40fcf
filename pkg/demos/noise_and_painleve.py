"""Joint conductance and noise statistics, and the Painleve route to log F.

The joint cumulants <<G^l P^m>> are exact polynomials in the thermodynamic
factor f = eta coth(eta) - 1.  Their zero-temperature limit gives the
shot-noise cumulants, which for symmetric leads also factor into two
conductance problems with half-integer asymmetry.  The last part rebuilds
log F(z) by integrating the sigma-function ODE and compares with the
exact MGF.

Run with ``python demos/noise_and_painleve.py``.
"""
import math

from toda_transport import (effective_config, eval_mgf, joint_cumulants, mgf_hankel, shot_cumulants_symmetric,
                            shot_limit, thermo_factor)
from toda_transport.painleve import integrate_chazy, log_mgf_from_sigma, shot_mgf_symmetric

cfg = effective_config(3, 0)
table = joint_cumulants(cfg, 2, 2)
print("joint cumulants for n = 3 symmetric leads (coefficients of 1, f, f^2):")
for (l, m), poly in sorted(table.entries.items()):
    print(f"  <<G^{l} P^{m}>> = {[str(c) for c in poly.coeffs]}")

tf = thermo_factor(1.0)
print(f"\nat eta = 1 (f = {tf.f_eta:.6f}):", {k: round(v, 8) for k, v in table.evaluate(1.0).items()})

shot = shot_limit(joint_cumulants(cfg, 0, 3))
print("\nshot-noise cumulants from the joint table:", [str(shot[(0, m)]) for m in (1, 2, 3)])
print("and from the half-integer factorisation:  ", [str(k) for k in shot_cumulants_symmetric(3, 3)])
print("<exp(P_shot)> =", shot_mgf_symmetric(3, 1.0))

sol = integrate_chazy(effective_config(2, 1), 0.05, 5.0)
print(f"\nsigma function for n = 2, nu = 1: series up to z = {sol.handoff:.3f}, ODE beyond")
F = mgf_hankel(effective_config(2, 1))
for z in (0.5, 1.0, 2.5, 5.0):
    exact = math.log(eval_mgf(F, z))
    print(f"  z = {z:3.1f}  log F = {log_mgf_from_sigma(sol, z):+.14f}  exact {exact:+.14f}")
