import math

import pytest
from hypothesis import given, settings, strategies as st

from irfloquet.params import (
    CavityParams,
    DriveParams,
    MoleculeParams,
    ProbeParams,
    TruncationPolicy,
    derive_lambda,
    finesse_enhancement,
    p_zpm,
    q_zpm,
)


def test_molecule_accessors():
    mol = MoleculeParams(lambda_=0.2, nu=1.0, gamma=0.002, gamma_phi=0.004, Gamma=0.1)
    assert mol.gamma_tilde == pytest.approx(0.006)
    assert mol.huang_rhys == pytest.approx(0.04)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(lambda_=-0.1, nu=1.0, gamma=0.01),
        dict(lambda_=0.1, nu=0.0, gamma=0.01),
        dict(lambda_=0.1, nu=1.0, gamma=0.0),
        dict(lambda_=0.1, nu=1.0, gamma=0.01, gamma_phi=-1.0),
        dict(lambda_=0.1, nu=1.0, gamma=0.01, Gamma=-0.5),
        dict(lambda_=float("nan"), nu=1.0, gamma=0.01),
        dict(lambda_=0.1, nu=float("inf"), gamma=0.01),
    ],
)
def test_molecule_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        MoleculeParams(**kwargs)


def test_drive_period_and_validation():
    drive = DriveParams(eta_d=0.1, omega_d=2.0)
    assert drive.period == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        DriveParams(eta_d=-0.1, omega_d=1.0)
    with pytest.raises(ValueError):
        DriveParams(eta_d=0.1, omega_d=0.0)


def test_probe_grid_must_increase():
    probe = ProbeParams(eta_p=1e-4, detuning_grid=(-1.0, 0.0, 2.5))
    assert probe.detuning_grid == (-1.0, 0.0, 2.5)
    with pytest.raises(ValueError):
        ProbeParams(eta_p=1e-4, detuning_grid=(0.0, 0.0))
    with pytest.raises(ValueError):
        ProbeParams(eta_p=-1e-4)


def test_weak_probe_check_compares_to_gamma():
    mol = MoleculeParams(lambda_=0.2, nu=1.0, gamma=0.01)
    assert ProbeParams(eta_p=0.001).weak_probe_ok(mol)
    assert not ProbeParams(eta_p=0.02).weak_probe_ok(mol)


def test_cavity_validation():
    cav = CavityParams(g=0.01, kappa=0.05, omega_c=1.0)
    assert cav.eta_d_c == 0.0
    with pytest.raises(ValueError):
        CavityParams(g=-0.01, kappa=0.05, omega_c=1.0)
    with pytest.raises(ValueError):
        CavityParams(g=0.01, kappa=0.0, omega_c=1.0)
    with pytest.raises(ValueError):
        CavityParams(g=0.01, kappa=0.05, omega_c=-1.0)


def test_truncation_policy_defaults_and_bounds():
    policy = TruncationPolicy()
    assert policy.eps_series == 1e-12
    assert policy.n_max_cap >= 1 and policy.m_max_cap >= 1
    with pytest.raises(ValueError):
        TruncationPolicy(eps_series=0.0)
    with pytest.raises(ValueError):
        TruncationPolicy(n_max_cap=0)


@given(
    st.floats(min_value=1e-3, max_value=1e3),
    st.floats(min_value=1e-3, max_value=1e3),
)
@settings(max_examples=60, deadline=None)
def test_zero_point_product_is_half(mu, nu):
    assert q_zpm(mu, nu) * p_zpm(mu, nu) == pytest.approx(0.5, rel=1e-12)


def test_derive_lambda_is_displacement_times_zpm():
    mu, nu, R = 2.0, 0.7, 0.3
    assert derive_lambda(mu, nu, R) == pytest.approx(R * p_zpm(mu, nu), rel=1e-14)


def test_finesse_enhancement_reference_points():
    assert finesse_enhancement(2.0 * math.pi) == pytest.approx(1.0, rel=1e-14)
    assert finesse_enhancement(8.0 * math.pi) == pytest.approx(2.0, rel=1e-14)
    with pytest.raises(ValueError):
        finesse_enhancement(0.0)
