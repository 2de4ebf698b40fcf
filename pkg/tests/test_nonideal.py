import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toda_transport import effective_config, eval_mgf, mgf_hankel, normalization_c
from toda_transport.nonideal import (density_csv, gauss_2f1_series, gauss_2f1_transport, group_integral_single,
                                     jpdf_normalization, jpdf_reflection, mgf_json, mgf_nonideal,
                                     mgf_nonideal_symmetric_form, reflection_density, toda2d_check, toda2d_frame,
                                     tunnel_config)
from toda_transport.asymptotics import measured_order
from toda_transport.params import ConfigurationError
from toda_transport.quadrature import adaptive_gauss_legendre, tensor_rule


def test_hypergeometric_known_value():
    assert gauss_2f1_transport(1, 1, 0.5) == pytest.approx(12.0, rel=1e-15)


@given(st.integers(0, 6), st.integers(1, 4), st.floats(0.0, 0.9))
@settings(max_examples=40, deadline=None)
def test_hypergeometric_transform_matches_series(N_R, k, x):
    a = N_R + k
    assert gauss_2f1_transport(N_R, k, x) == pytest.approx(gauss_2f1_series(a, a, k, x), rel=1e-12)


def test_hypergeometric_extended_precision_and_arrays():
    hi = gauss_2f1_transport(3, 2, 0.7, precision=200)
    assert float(hi) == pytest.approx(gauss_2f1_transport(3, 2, 0.7), rel=1e-15)
    xs = np.array([0.1, 0.2])
    assert np.allclose(gauss_2f1_transport(2, 1, xs), [gauss_2f1_transport(2, 1, x) for x in xs])
    with pytest.raises(ValueError):
        gauss_2f1_transport(2, 1, 1.0)


@pytest.mark.parametrize("N_R", [1, 2, 4])
def test_group_integral_is_hypergeometric(N_R):
    assert group_integral_single(N_R, 0.6, 0.7) == pytest.approx(gauss_2f1_transport(N_R, 1, 0.42), rel=1e-12)


@pytest.mark.parametrize("N_L,N_R", [(1, 1), (1, 3), (2, 2), (2, 5), (3, 4)])
def test_normalization_inverts_ideal_constant(N_L, N_R):
    assert jpdf_normalization(N_L, N_R) * normalization_c(N_L, N_R - N_L) == 1


@pytest.mark.parametrize("N_L,N_R", [(1, 1), (1, 4), (2, 2), (2, 3)])
@pytest.mark.parametrize("gamma2", [0.0, 0.5, 0.9])
def test_density_normalized(N_L, N_R, gamma2):
    cfg = tunnel_config(N_L, N_R, gamma2)
    if N_L == 1:
        mass = adaptive_gauss_legendre(lambda R: jpdf_reflection(R[:, None], cfg), 0.0, 1.0, rtol=1e-13)
    else:
        pts, w = tensor_rule(2, 60)
        mass = float(np.dot(w, jpdf_reflection(pts, cfg)))
    assert mass == pytest.approx(1.0, abs=1e-10)


def test_density_ideal_limit_single_channel():
    # gamma2 = 0, N_L = 1: T = 1 - R has density (nu+1) T^nu
    cfg = tunnel_config(1, 3, 0.0)
    R = np.linspace(0.1, 0.9, 5)
    assert np.allclose(reflection_density(R, cfg), 3 * (1 - R) ** 2, rtol=1e-13)


def test_density_rejects_bad_input():
    cfg = tunnel_config(2, 2, 0.3)
    with pytest.raises(ValueError):
        jpdf_reflection([0.5], cfg)
    with pytest.raises(ValueError):
        jpdf_reflection([0.0, 0.5], cfg)
    with pytest.raises(ConfigurationError):
        tunnel_config(3, 2, 0.1)
    with pytest.raises(ConfigurationError):
        tunnel_config(1, 2, 1.0)


def test_tunnel_pushes_reflection_up():
    mean = lambda g2: adaptive_gauss_legendre(  # noqa: E731
        lambda R: R * jpdf_reflection(R[:, None], tunnel_config(1, 2, g2)), 0.0, 1.0)
    assert mean(0.0) < mean(0.3) < mean(0.7)


@pytest.mark.parametrize("N_L,N_R", [(1, 1), (2, 3), (3, 3)])
def test_mgf_ideal_limit(N_L, N_R):
    F = mgf_hankel(effective_config(N_L, N_R - N_L))
    for z in (0.0, 0.7, 2.0):
        expected = eval_mgf(F, z) if z else 1.0
        assert mgf_nonideal(tunnel_config(N_L, N_R, 0.0), z) == pytest.approx(expected, rel=1e-11)


@pytest.mark.parametrize("N_L,N_R,gamma2", [(1, 2, 0.4), (2, 3, 0.5), (3, 4, 0.2)])
def test_mgf_normalized_and_two_forms_agree(N_L, N_R, gamma2):
    cfg = tunnel_config(N_L, N_R, gamma2)
    assert mgf_nonideal(cfg, 0.0) == pytest.approx(1.0, abs=1e-10)
    assert mgf_nonideal_symmetric_form(cfg, 0.9) == pytest.approx(mgf_nonideal(cfg, 0.9), rel=1e-9)


def test_mgf_single_channel_against_density():
    cfg = tunnel_config(1, 2, 0.5)
    z = 1.3
    direct = adaptive_gauss_legendre(lambda R: np.exp(-z * (1 - R)) * jpdf_reflection(R[:, None], cfg), 0.0, 1.0)
    assert mgf_nonideal(cfg, z) == pytest.approx(direct, rel=1e-12)


@pytest.mark.parametrize("N_L,N_R", [(1, 1), (1, 3), (2, 2), (2, 3)])
def test_toda2d_second_order(N_L, N_R):
    cfg = tunnel_config(N_L, N_R, 0.3)
    hs = [1e-2, 5e-3, 2.5e-3]
    res = [toda2d_check(cfg, 0.5, 0.3, h) for h in hs]
    assert 1.8 <= measured_order([1 / h for h in hs], res) <= 2.2


def test_toda2d_frame_contents_and_domain():
    cfg = tunnel_config(1, 2, 0.3)
    frame = toda2d_frame(cfg, 0.5, 0.3, 1e-3)
    assert frame.u_prev == 1.0 and frame.u > 0
    assert frame.residual < 1e-5
    with pytest.raises(ValueError):
        toda2d_frame(cfg, 0.5, 0.0005, 1e-3)


def test_output_helpers():
    cfg = tunnel_config(1, 2, 0.3)
    assert density_csv(cfg, [0.2, 0.4]).splitlines()[0] == "R,pdf"
    assert '"mgf"' in mgf_json(cfg, [0.0])
    assert math.isclose(float(mgf_json(cfg, [0.0]).split('"mgf": ')[1].split("\n")[0]), 1.0, rel_tol=1e-10)
