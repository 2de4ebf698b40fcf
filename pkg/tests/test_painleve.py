import math
from fractions import Fraction

import numpy as np
import pytest

from toda_transport import effective_config, eval_mgf, mgf_hankel
from toda_transport.montecarlo import jmgf_quadrature
from toda_transport.painleve import (IntegrationError, chazy_series_residual, integrate_chazy, jmo_residual,
                                     jmo_series_residual, log_mgf_from_sigma, shot_mgf_symmetric, sigma_series)
from toda_transport.params import SHOT


@pytest.mark.parametrize("n,nu", [(1, 0), (2, 1), (3, 2), (1, Fraction(1, 2))])
def test_series_satisfies_both_forms_exactly(n, nu):
    series = sigma_series(effective_config(n, nu), 12)
    assert all(c == 0 for c in jmo_series_residual(series))
    assert all(c == 0 for c in chazy_series_residual(series))


def test_series_starts_at_p():
    series = sigma_series(effective_config(2, 1), 4)
    assert series.coefficients[0] == 6
    assert series.coefficients[1] == -Fraction(6, 5)


def test_jmo_residual_accepts_fractions_and_floats():
    cfg = effective_config(1, 0)
    assert jmo_residual(cfg, Fraction(0), Fraction(1), Fraction(-1, 2), Fraction(1, 12)) == 0
    assert jmo_residual(cfg, 0.0, 1.0, -0.5, 1 / 12) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("n,nu", [(1, 0), (2, 0), (2, 1), (3, 2)])
def test_log_mgf_reconstruction(n, nu):
    cfg = effective_config(n, nu)
    sol = integrate_chazy(cfg, 0.05, 5.0)
    F = mgf_hankel(cfg)
    for z in (0.03, 0.5, 1.7, 3.3, 5.0):
        exact = math.log(eval_mgf(F, z))
        assert log_mgf_from_sigma(sol, z) == pytest.approx(exact, rel=1e-9)
    assert np.max(np.abs(sol.jmo_residuals())) < 1e-8


def test_dense_output_matches_grid():
    sol = integrate_chazy(effective_config(2, 1), 0.1, 4.0)
    state = sol(sol.grid)
    assert np.allclose(state[0], sol.sigma, rtol=1e-10)
    with pytest.raises(ValueError):
        sol(4.5)


def test_literal_start_is_less_accurate_than_handoff():
    cfg = effective_config(3, 2)
    z = 4.0
    exact = math.log(eval_mgf(mgf_hankel(cfg), z))
    auto = abs(log_mgf_from_sigma(integrate_chazy(cfg, 0.05, z), z) - exact)
    literal = abs(log_mgf_from_sigma(integrate_chazy(cfg, 0.05, z, handoff=None), z) - exact)
    assert auto < 1e-10 < literal


def test_argument_validation():
    cfg = effective_config(1, 0)
    with pytest.raises(ValueError):
        integrate_chazy(cfg, 1.0, 0.5)
    with pytest.raises(ValueError):
        integrate_chazy(cfg, tol=1e-3)
    assert issubclass(IntegrationError, RuntimeError)


@pytest.mark.parametrize("n,z", [(1, 1.0), (2, 1.0), (3, 2.0)])
def test_shot_mgf_matches_quadrature(n, z):
    # the quadrature oracle weights by exp(-z G - w P)
    assert shot_mgf_symmetric(n, z) == pytest.approx(jmgf_quadrature(effective_config(n, 0), SHOT, 0.0, -z),
                                                     rel=1e-9)


def test_to_csv_header():
    sol = integrate_chazy(effective_config(1, 0), 0.1, 1.0)
    assert sol.to_csv().splitlines()[0] == "z,sigma,dsigma,jmo_residual"
