from fractions import Fraction

import math
import pytest
from hypothesis import given, strategies as st

from toda_transport import SHOT, ConfigurationError, conductance_variance, effective_config, lead_config, \
    normalization_c, thermo_factor
from toda_transport.params import as_fraction, default_precision


def test_lead_config_maps_channels_to_n_nu():
    cfg = lead_config(2, 3)
    assert (cfg.n, cfg.nu, cfg.s, cfg.p) == (2, 1, 5, 6)
    swapped = lead_config(3, 2)
    assert (swapped.n, swapped.nu) == (cfg.n, cfg.nu)
    assert cfg.physical and not effective_config(2, 1).physical


@pytest.mark.parametrize("args", [(0, 1), (1, -2), (1.5, 2)])
def test_lead_config_rejects_bad_counts(args):
    with pytest.raises(ConfigurationError):
        lead_config(*args)


def test_lead_config_rejects_bad_tunnel_probability():
    with pytest.raises(ConfigurationError):
        lead_config(1, 1, gamma=1.5)


def test_effective_config_allows_half_integer_nu():
    cfg = effective_config(1, Fraction(-1, 2))
    assert cfg.s == Fraction(3, 2) and not cfg.integer_nu
    with pytest.raises(ConfigurationError):
        effective_config(1, Fraction(-3, 4))


def test_as_fraction_refuses_floats():
    assert as_fraction("3/4") == Fraction(3, 4)
    with pytest.raises(TypeError):
        as_fraction(0.5)


def test_thermo_factor_series_and_direct_agree_at_switch():
    below = thermo_factor(0.99999e-4).f_eta
    above = thermo_factor(1.00001e-4).f_eta
    assert below == pytest.approx(above, rel=1e-4)
    assert thermo_factor(1e-6).f_eta == pytest.approx(1e-12 / 3, rel=1e-12)


@given(st.floats(min_value=1e-6, max_value=50))
def test_thermo_factor_matches_definition(eta):
    expected = eta / math.tanh(eta) - 1 if eta > 1e-3 else eta ** 2 / 3 - eta ** 4 / 45
    assert thermo_factor(eta).f_eta == pytest.approx(expected, rel=1e-9)


def test_thermo_factor_shot_sentinel():
    assert thermo_factor("inf") is SHOT and thermo_factor(math.inf) is SHOT
    with pytest.raises(ConfigurationError):
        thermo_factor(-1.0)


def test_normalization_small_cases():
    # n = 1: the density of T is (nu+1) T^nu
    assert normalization_c(1, 0) == 1
    assert normalization_c(1, 2) == Fraction(1, 3)
    assert normalization_c(2, 0) == Fraction(1, 6)


@given(st.integers(1, 6), st.integers(0, 4))
def test_variance_formula(n, nu):
    s = 2 * n + nu
    assert conductance_variance(n, nu) == Fraction(n * n * (n + nu) ** 2, s * s * (s * s - 1))


def test_default_precision_env(monkeypatch):
    monkeypatch.delenv("TODA_TRANSPORT_PRECISION", raising=False)
    assert default_precision() == 53
    monkeypatch.setenv("TODA_TRANSPORT_PRECISION", "113")
    assert default_precision() == 113
    for bad in ("20", "abc"):
        monkeypatch.setenv("TODA_TRANSPORT_PRECISION", bad)
        with pytest.raises(ConfigurationError):
            default_precision()
