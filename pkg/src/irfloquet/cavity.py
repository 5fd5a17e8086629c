"""Cavity-coupled vibrational optics: bare and dressed susceptibilities,
Purcell-modified damping, the cavity-induced coherent occupation, and
the cavity version of the absorption spectrum."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .params import (
    CavityParams,
    MoleculeParams,
    ProbeParams,
    TruncationPolicy,
    ValidityWarning,
)
from .spectra import Spectrum, _fc_cut, _lorentzian_comb, _squared_weight_row


class StrongCouplingError(ValueError):
    """The cavity spectrum is derived for weak coupling g < kappa only."""


@dataclass(frozen=True)
class SusceptibilityScan:
    """|eps_m_eff(omega)|^2 sampled on a frequency grid.

    peak_positions holds the parabolic-refined locations of the local
    maxima of the sampled curve, in ascending frequency order.
    """

    omegas: np.ndarray
    values: np.ndarray
    peak_positions: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        om = np.asarray(self.omegas, dtype=float)
        val = np.asarray(self.values, dtype=float)
        if om.ndim != 1 or val.shape != om.shape:
            raise ValueError("omegas and values must be 1-d arrays of equal length")
        if np.any(val < 0):
            raise ValueError("susceptibility values must be nonnegative")
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "values", val)
        object.__setattr__(self, "peak_positions", tuple(float(p) for p in self.peak_positions))


def eps_m(omega: float, mol: MoleculeParams) -> complex:
    """Bare vibrational susceptibility i*omega/(omega^2 + 2i*Gamma*omega - nu^2)."""
    omega = float(omega)
    denom = complex(omega * omega - mol.nu * mol.nu, 2.0 * mol.Gamma * omega)
    if denom == 0:
        raise ValueError(
            f"susceptibility pole at omega = {omega} (undamped resonance)"
        )
    return 1j * omega / denom


def eps_c(omega: float, cav: CavityParams) -> complex:
    """Cavity susceptibility 1/[i(omega_c - omega) + kappa]."""
    return 1.0 / complex(cav.kappa, cav.omega_c - float(omega))


def _inv_eps_m_eff(omega: float, mol: MoleculeParams, cav: CavityParams) -> complex:
    # Inverse dressed susceptibility; finite even at the bare pole.
    inv_m = complex(
        2.0 * mol.Gamma, -(omega * omega - mol.nu * mol.nu) / omega
    )
    coupling = eps_c(omega, cav) - eps_c(-omega, cav).conjugate()
    return inv_m + 2.0 * cav.g ** 2 * (mol.nu / omega) * coupling


def eps_m_eff(omega: float, mol: MoleculeParams, cav: CavityParams) -> complex:
    """Cavity-dressed vibrational susceptibility.

    The inverse picks up 2*g^2*(nu/omega)*(eps_c(omega) - eps_c*(-omega));
    at g = 0 the bare eps_m is returned exactly.
    """
    omega = float(omega)
    if omega == 0.0:
        raise ValueError("eps_m_eff is undefined at omega = 0")
    if cav.g == 0.0:
        return eps_m(omega, mol)
    inv = _inv_eps_m_eff(omega, mol, cav)
    if inv == 0:
        raise ValueError(f"dressed susceptibility pole at omega = {omega}")
    return 1.0 / inv


def gamma_tilde_of_omega(omega: float, mol: MoleculeParams, cav: CavityParams) -> float:
    """Frequency-dependent dressed damping rate Gamma_tilde(omega), the
    real part of the inverse dressed susceptibility over two."""
    omega = float(omega)
    if omega == 0.0:
        raise ValueError("gamma_tilde_of_omega is undefined at omega = 0")
    dm = cav.kappa ** 2 + (cav.omega_c - omega) ** 2
    dp = cav.kappa ** 2 + (cav.omega_c + omega) ** 2
    bracket = cav.kappa / dm - cav.kappa / dp
    return mol.Gamma + cav.g ** 2 * (mol.nu / omega) * bracket


def nu_tilde_sq(omega: float, mol: MoleculeParams, cav: CavityParams) -> float:
    """Frequency-dependent dressed squared vibrational frequency
    nu_tilde^2(omega) accompanying gamma_tilde_of_omega."""
    omega = float(omega)
    if omega == 0.0:
        raise ValueError("nu_tilde_sq is undefined at omega = 0")
    dm = cav.kappa ** 2 + (cav.omega_c - omega) ** 2
    dp = cav.kappa ** 2 + (cav.omega_c + omega) ** 2
    bracket = (cav.omega_c - omega) / dm + (cav.omega_c + omega) / dp
    return mol.nu ** 2 - 2.0 * cav.g ** 2 * mol.nu * bracket


def gamma_ir(mol: MoleculeParams, cav: CavityParams, omega_d: float) -> float:
    """Optically induced damping rate of the vibration at drive
    frequency omega_d, the two-sideband Purcell difference."""
    dm = cav.kappa ** 2 + (omega_d - mol.nu) ** 2
    dp = cav.kappa ** 2 + (omega_d + mol.nu) ** 2
    return cav.g ** 2 * cav.kappa * (1.0 / dm - 1.0 / dp)


def cooperativity(mol: MoleculeParams, cav: CavityParams) -> float:
    """Vibrational cooperativity C_cav = g^2/(kappa*Gamma)."""
    if mol.Gamma == 0.0:
        raise ValueError("cooperativity requires Gamma > 0")
    return cav.g ** 2 / (cav.kappa * mol.Gamma)


def gamma_eff(mol: MoleculeParams, cav: CavityParams) -> float:
    """Purcell-modified vibrational damping Gamma_eff = Gamma + g^2/kappa."""
    return mol.Gamma + cav.g ** 2 / cav.kappa


def beta_c(
    mol: MoleculeParams, cav: CavityParams, omega_d: float
) -> tuple[float, float]:
    """Magnitude of the cavity-induced coherent vibrational amplitude.

    Returns (primary, resonant_approx): the susceptibility form
    |beta_c|^2 = g^2 (eta_d_c)^2 |eps_m_eff(omega_d)|^2 |eps_c(omega_d)|^2
    as the primary value, and the on-resonance estimate
    g*eta_d_c/(2*kappa*Gamma) that holds for omega_d = omega_c = nu with
    weak coupling. Warns outside the weak-coupling regime.
    """
    omega_d = float(omega_d)
    if omega_d <= 0:
        raise ValueError(f"omega_d must be > 0, got {omega_d}")
    if cav.g >= cav.kappa and cav.g > 0:
        warnings.warn(
            "coherent-amplitude formulas assume weak coupling g < kappa; "
            f"got g/kappa = {cav.g / cav.kappa:.3g}",
            ValidityWarning,
            stacklevel=2,
        )
    primary = cav.g * cav.eta_d_c * abs(eps_m_eff(omega_d, mol, cav) * eps_c(omega_d, cav))
    if mol.Gamma > 0.0:
        resonant = cav.g * cav.eta_d_c / (2.0 * cav.kappa * mol.Gamma)
    else:
        resonant = math.inf if cav.g * cav.eta_d_c > 0 else 0.0
    return primary, resonant


def effective_drive_z(mol: MoleculeParams, cav: CavityParams, omega_d: float) -> float:
    """Bessel argument of the cavity-filtered drive,
    z = 2*lambda*g*eta_d_c/(kappa*omega_d)."""
    omega_d = float(omega_d)
    if omega_d <= 0:
        raise ValueError(f"omega_d must be > 0, got {omega_d}")
    return 2.0 * mol.lambda_ * cav.g * cav.eta_d_c / (cav.kappa * omega_d)


def spectrum_cavity(
    mol: MoleculeParams,
    cav: CavityParams,
    probe: ProbeParams,
    omega_d: float,
    policy: TruncationPolicy | None = None,
) -> Spectrum:
    """Absorption spectrum with the infrared drive fed through the cavity.

    Same triple series as the free-space resonant spectrum, with the
    drive argument replaced by z = 2*lambda*g*eta_d_c/(kappa*omega_d),
    the occupation by the cavity-induced |beta_c|, and the sideband
    widths Purcell-broadened to gamma_tilde + n*Gamma_eff.
    """
    if policy is None:
        policy = TruncationPolicy()
    omega_d = float(omega_d)
    if omega_d <= 0:
        raise ValueError(f"omega_d must be > 0, got {omega_d}")
    if cav.g >= cav.kappa:
        raise StrongCouplingError(
            f"cavity spectrum is derived for g < kappa; got g/kappa = "
            f"{cav.g / cav.kappa:.3g} (susceptibility scans remain available)"
        )
    detunings = np.asarray(probe.detuning_grid, dtype=float)
    if detunings.size == 0:
        raise ValueError("probe.detuning_grid must be non-empty")
    lam = mol.lambda_
    z = effective_drive_z(mol, cav, omega_d)
    beta_mag, _ = beta_c(mol, cav, omega_d)
    y = 2.0 * lam * beta_mag
    gamma_width = gamma_eff(mol, cav)
    wz, m_cut = _squared_weight_row(z, policy)
    wy, l_cut = _squared_weight_row(y, policy)
    weights = np.convolve(wz, wy)
    n_cut = _fc_cut(lam, policy)
    values = (probe.eta_p ** 2 / mol.gamma) * _lorentzian_comb(
        detunings, lam, mol.nu, mol.gamma_tilde, gamma_width, omega_d, weights, n_cut
    )
    meta = {
        "kind": "cavity",
        "z": z,
        "beta_c_occupation": beta_mag ** 2,
        "gamma_eff": gamma_width,
        "cooperativity": cooperativity(mol, cav) if mol.Gamma > 0 else None,
        "omega_d": omega_d,
        "n_cut": n_cut,
        "m_cut": m_cut,
        "l_cut": l_cut,
        "eps_series": policy.eps_series,
        "gamma_over_omega_d": mol.gamma / omega_d,
        "assumes_weak_coupling": True,
    }
    return Spectrum(detunings=detunings, values=values, meta=meta)


def susceptibility_scan(
    mol: MoleculeParams,
    cav: CavityParams,
    omega_min: float,
    omega_max: float,
    n_points: int | None = None,
) -> SusceptibilityScan:
    """Scan |eps_m_eff(omega)|^2 over [omega_min, omega_max] and locate
    its local maxima.

    The default grid density is 2000 points per decade of scanned
    frequency, floored at 512 points, which resolves features of width
    kappa in the intended scans around the vibrational resonance. Peaks
    are interior local maxima refined by a parabola through the three
    neighboring samples.
    """
    if not (0 < omega_min < omega_max):
        raise ValueError("need 0 < omega_min < omega_max")
    if n_points is None:
        decades = math.log10(omega_max / omega_min)
        n_points = max(512, int(math.ceil(2000.0 * decades)))
    if n_points < 3:
        raise ValueError("need at least 3 scan points")
    omegas = np.linspace(omega_min, omega_max, n_points)
    values = np.array(
        [abs(eps_m_eff(w, mol, cav)) ** 2 for w in omegas]
    )
    peaks = []
    for i in range(1, n_points - 1):
        if values[i] > values[i - 1] and values[i] > values[i + 1]:
            y0, y1, y2 = values[i - 1], values[i], values[i + 1]
            denom = y0 - 2.0 * y1 + y2
            shift = 0.0 if denom == 0 else 0.5 * (y0 - y2) / denom
            peaks.append(omegas[i] + shift * (omegas[1] - omegas[0]))
    return SusceptibilityScan(
        omegas=omegas, values=values, peak_positions=tuple(peaks)
    )
