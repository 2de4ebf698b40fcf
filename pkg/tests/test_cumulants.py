from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from reference import kappa3_as_printed, mean_conductance, shot_as_printed, shot_kappa3_exact, uniform_cumulant
from toda_transport import (FEtaPoly, JointCumulantTable, SingularRecurrenceError, conductance_cumulants,
                            conductance_variance, effective_config, joint_cumulants, kappa3_closed, lead_config,
                            mgf_taylor, noise_power_closed_forms, shot_cumulants_symmetric, shot_limit)
from toda_transport.cumulants import (BoundaryDepthError, cumulant_recurrence_residual, kappa3_printed,
                                      shot_cumulants_printed)
from toda_transport.symbolic import cumulants_from_series


def test_single_channel_is_uniform():
    seq = conductance_cumulants(lead_config(1, 1), 8)
    assert list(seq) == [uniform_cumulant(m) for m in range(1, 9)]


def test_two_three_example():
    seq = conductance_cumulants(lead_config(2, 3), 3)
    assert list(seq) == [Fraction(6, 5), Fraction(3, 50), Fraction(-1, 875)]


@given(st.integers(1, 5), st.integers(0, 3))
@settings(max_examples=25, deadline=None)
def test_recurrence_agrees_with_series(n, nu):
    cfg = effective_config(n, nu)
    seq = conductance_cumulants(cfg, 10)
    assert list(seq) == cumulants_from_series(mgf_taylor(cfg, 10), 10)
    assert seq[1] == mean_conductance(n, nu)
    assert seq[2] == conductance_variance(n, nu)
    assert all(cumulant_recurrence_residual(seq, l) == 0 for l in range(2, 10))


@pytest.mark.parametrize("n,nu", [(1, 1), (2, 1), (3, 2)])
def test_third_cumulant_closed_form(n, nu):
    cfg = effective_config(n, nu)
    assert conductance_cumulants(cfg, 3)[3] == kappa3_closed(cfg)
    # the widely quoted form only holds for symmetric leads
    assert kappa3_closed(cfg) != kappa3_printed(cfg) == kappa3_as_printed(n, nu)
    sym = effective_config(n, 0)
    assert conductance_cumulants(sym, 3)[3] == kappa3_printed(sym) == 0


def test_singular_order_fallback_and_error():
    cfg = effective_config(1, 0)  # s = 2: the l = 2 equation cannot give kappa_3
    with pytest.raises(SingularRecurrenceError) as err:
        conductance_cumulants(cfg, 4, fallback=False)
    assert err.value.order == 2
    seq = conductance_cumulants(cfg, 4)
    assert seq.series_orders == (3,)


def test_half_integer_nu_cumulants():
    cfg = effective_config(1, Fraction(1, 2))
    seq = conductance_cumulants(cfg, 6, fallback=False)
    assert seq[1] == Fraction(3, 5)  # n (n + nu) / (2n + nu)


def test_cumulant_seq_indexing():
    seq = conductance_cumulants(lead_config(2, 2), 3)
    assert len(seq) == seq.L == 3
    with pytest.raises(IndexError):
        seq[0]


@pytest.mark.parametrize("n", range(1, 7))
def test_shot_cumulants_two_paths(n):
    sym = shot_cumulants_symmetric(n, 4)
    table = shot_limit(joint_cumulants(effective_config(n, 0), 0, 4))
    assert sym == [table[(0, m)] for m in range(1, 5)]
    printed = shot_as_printed(n)
    assert sym[:2] == list(printed[:2]) == list(shot_cumulants_printed(n)[:2])
    assert sym[2] == shot_kappa3_exact(n) != printed[2]


def test_single_channel_shot_noise():
    # P_shot = T (1 - T) with T uniform
    assert shot_cumulants_symmetric(1, 3) == [Fraction(1, 6), Fraction(1, 180), Fraction(-1, 3780)]


def test_joint_table_recurrence_residuals_vanish():
    table = joint_cumulants(effective_config(2, 1), 3, 3)
    res = table.residuals()
    assert res and all(r == FEtaPoly() and s == 0 for r, s in res.values())


def test_joint_table_degree_and_boundary():
    table = joint_cumulants(effective_config(3, 1), 2, 3)
    assert table.boundary_order == 8
    for (l, m), p in table.entries.items():
        assert p.degree <= m
        if m == 0:
            assert p == conductance_cumulants(effective_config(3, 1), 2)[l]
    with pytest.raises(BoundaryDepthError):
        joint_cumulants(effective_config(3, 1), 2, 3, boundary=conductance_cumulants(effective_config(3, 1), 5))


def test_mean_noise_is_thermal_plus_shot():
    cfg = effective_config(2, 1)
    table = joint_cumulants(cfg, 0, 1)
    kap = conductance_cumulants(cfg, 2)
    # at f = 0 the mean noise power reduces to the mean conductance
    cf = noise_power_closed_forms(cfg, 0)
    assert table[(0, 1)] == cf["mean_noise"] == cf["mean_noise_thermal"]
    assert table[(0, 1)](Fraction(0)) == kap[1]


def test_joint_table_json_round_trip():
    cfg = effective_config(2, 0)
    table = joint_cumulants(cfg, 2, 2)
    back = JointCumulantTable.from_json_records(cfg, table.to_json_records())
    assert back.entries == table.entries
    assert table.evaluate("inf")[(0, 1)] == pytest.approx(float(shot_cumulants_symmetric(2, 1)[0]))
