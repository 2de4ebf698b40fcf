"""Invariant suites behind ``toda-transport verify``.

Each check returns a :class:`Check` with the measured quantity and the
tolerance it was held to.  ``perturb`` is a test hook: a nonzero value
corrupts the reference quantity of every check (or, where the reference is
zero, the input) by that relative amount, and a healthy suite must then fail.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .asymptotics import measured_order
from .cumulants import (conductance_cumulants, cumulant_recurrence_residual, joint_cumulants,
                        shot_cumulants_symmetric, shot_limit)
from .montecarlo import cue_observables, estimate_cumulants
from .nonideal import jpdf_reflection, mgf_nonideal, toda2d_check, tunnel_config
from .painleve import integrate_chazy, jmo_residual, log_mgf_from_sigma
from .params import conductance_variance, default_precision, effective_config
from .quadrature import adaptive_gauss_legendre, tensor_rule
from .symbolic import cumulants_from_series, eval_mgf, mgf_hankel, mgf_taylor, toda_check

__all__ = ["Check", "ideal_suite", "nonideal_suite", "run_suite"]


@dataclass
class Check:
    name: str
    passed: bool
    measured: float | str | None
    tolerance: float | str | None
    detail: str = ""

    def __post_init__(self):
        self.passed = bool(self.passed)
        for key in ("measured", "tolerance"):
            v = getattr(self, key)
            if isinstance(v, (np.floating, np.integer)):
                setattr(self, key, v.item())

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("measured", "tolerance"):
            v = d[key]
            if isinstance(v, float) and not math.isfinite(v):
                d[key] = repr(v)
        return d


def _configs(nmax: int, numax: int):
    return [(n, nu) for n in range(1, nmax + 1) for nu in range(numax + 1)]


def ideal_suite(nmax: int = 3, numax: int = 2, perturb: float = 0.0, mc_samples: int = 100_000,
                seed: int = 0, workers: int = 1) -> list[Check]:
    scale = 1 + perturb
    out = []

    bad = [(n, nu) for n, nu in _configs(nmax, numax)
           if not toda_check(effective_config(n, nu), conductance_variance(n, nu) * Fraction(scale))]
    out.append(Check("toda_lattice_symbolic", not bad, len(bad), 0, f"failing (n, nu): {bad}" if bad else ""))

    worst = Fraction(0)
    for n, nu in _configs(nmax, numax):
        cfg = effective_config(n, nu)
        seq = conductance_cumulants(cfg, 8)
        ref = cumulants_from_series(mgf_taylor(cfg, 8), 8)
        worst = max(worst, max(abs(a - b * Fraction(scale)) for a, b in zip(seq.values, ref)))
        worst = max(worst, max(abs(cumulant_recurrence_residual(seq, l)) for l in range(2, 8)))
    out.append(Check("cumulant_recurrence_vs_series", worst == 0, float(worst), 0))

    worst = Fraction(0)
    for n, nu in _configs(nmax, numax):
        cfg = effective_config(n, nu)
        table = joint_cumulants(cfg, 3, 3)
        worst = max(worst, max(max((abs(c) for c in r.coeffs), default=0) for r, _ in table.residuals().values()))
        if nu == 0:
            sym = shot_cumulants_symmetric(n, 3)
            sl = shot_limit(table)
            worst = max(worst, max(abs(sl[(0, m)] - sym[m - 1] * Fraction(scale)) for m in range(1, 4)))
    out.append(Check("joint_recurrence_and_shot_limit", worst == 0, float(worst), 0))

    jmo, logerr = 0.0, 0.0
    zs = np.linspace(0.1, 5.0, 25)
    prec = default_precision()
    for n, nu in ((1, 0), (2, 0), (2, 1), (3, 2)):
        cfg = effective_config(n, nu)
        sol = integrate_chazy(cfg, 0.05, 5.0)
        res = jmo_residual(cfg, sol.grid, sol.sigma * scale, sol.dsigma, sol.d2sigma)
        jmo = max(jmo, float(np.max(np.abs(res))))
        F = mgf_hankel(cfg)
        for z in zs:
            exact = math.log(float(eval_mgf(F, float(z), precision=prec)))
            logerr = max(logerr, abs(log_mgf_from_sigma(sol, float(z)) - exact * scale) / abs(exact))
    out.append(Check("painleve_jmo_residual", jmo < 1e-6, jmo, 1e-6))
    out.append(Check("painleve_log_mgf", logerr < 1e-7, logerr, 1e-7))

    zmax = 0.0
    for k, (N_L, N_R) in enumerate(((1, 1), (2, 3))):
        G, _ = cue_observables(N_L, N_R, mc_samples, seed=seed + k, workers=workers)
        exact = conductance_cumulants(effective_config(min(N_L, N_R), abs(N_R - N_L)), 3)
        for e in estimate_cumulants(G, 3):
            zmax = max(zmax, abs(e.estimate - float(exact[e.order]) * scale) / e.stderr)
    out.append(Check("montecarlo_cue_cumulants", zmax < 5, zmax, 5, f"{mc_samples} samples, max |z|"))
    return out


def nonideal_suite(N_L: int, N_R: int, gamma2: float, perturb: float = 0.0) -> list[Check]:
    scale = 1 + perturb
    cfg = tunnel_config(N_L, N_R, gamma2)
    out = []
    if N_L == 1:
        mass = adaptive_gauss_legendre(lambda R: jpdf_reflection(R[:, None], cfg), 0.0, 1.0, rtol=1e-13)
    elif N_L == 2:
        pts, w = tensor_rule(2, 60)
        mass = float(np.dot(w, jpdf_reflection(pts, cfg)))
    else:
        mass = None
    if mass is not None:
        err = abs(mass - scale)
        out.append(Check("jpdf_normalization", err < 1e-8, err, 1e-8))
    err = abs(mgf_nonideal(cfg, 0.0) - scale)
    out.append(Check("mgf_at_zero", err < 1e-10, err, 1e-10))
    hs = [1e-2, 5e-3, 2.5e-3]
    g0 = min(max(gamma2, 0.02), 0.95)
    res = [toda2d_check(cfg, 0.5, g0, h) + perturb for h in hs]
    order = measured_order([1 / h for h in hs], res)
    out.append(Check("toda2d_order", 1.8 <= order <= 2.2, order, "[1.8, 2.2]", f"residuals {res}"))
    return out


def run_suite(suite: str, **kw) -> list[Check]:
    if suite == "ideal":
        keep = {k: kw[k] for k in ("perturb", "mc_samples", "seed", "workers") if k in kw}
        return ideal_suite(**keep)
    if suite == "nonideal":
        return nonideal_suite(kw["N_L"], kw["N_R"], kw["gamma2"], kw.get("perturb", 0.0))
    if suite == "all":
        return run_suite("ideal", **kw) + run_suite("nonideal", **kw)
    raise ValueError(f"unknown suite {suite!r}")
