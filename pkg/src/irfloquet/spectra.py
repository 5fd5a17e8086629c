"""Free-space absorption results for the driven vibronic transition: bare
and drive-dressed transition probabilities, the Floquet quasienergy
ladder, closed-form absorption spectra, and the sum-rule, zero-phonon
line, and sideband-ratio diagnostics derived from them."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import _beta_or_zero
from .params import (
    DriveParams,
    MoleculeParams,
    ProbeParams,
    TruncationPolicy,
    ValidityWarning,
)
from .specfun import bessel_cutoff, bessel_j_row, fc_cutoff, fc_weight


@dataclass(frozen=True)
class Spectrum:
    """Absorption spectrum S(Delta_p) on a probe-detuning grid.

    meta echoes the generating parameters and the series cutoffs, so a
    result can be reproduced without the call site.
    """

    detunings: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        det = np.asarray(self.detunings, dtype=float)
        val = np.asarray(self.values, dtype=float)
        if det.ndim != 1 or val.shape != det.shape:
            raise ValueError("detunings and values must be 1-d arrays of equal length")
        if np.any(val < 0):
            raise ValueError("spectrum values must be nonnegative")
        object.__setattr__(self, "detunings", det)
        object.__setattr__(self, "values", val)


@dataclass(frozen=True)
class QuasienergyTable:
    """Drive-induced quasienergy ladder of the electronic excited state.

    Parallel arrays: harmonic index m, energy offset m*omega_d, and
    spectral weight J_m(2*lambda*eta_d/omega_d)^2. Rows with exactly
    zero weight are omitted.
    """

    ms: np.ndarray
    offsets: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        ms = np.asarray(self.ms, dtype=int)
        offsets = np.asarray(self.offsets, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if not (ms.shape == offsets.shape == weights.shape) or ms.ndim != 1:
            raise ValueError("ms, offsets and weights must be 1-d arrays of equal length")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        total = weights.sum()
        if total > 1.0 + 1e-9:
            raise ValueError(f"weights must sum to at most 1, got {total}")
        object.__setattr__(self, "ms", ms)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "weights", weights)

    @property
    def rows(self) -> list[tuple[int, float, float]]:
        return list(zip(self.ms.tolist(), self.offsets.tolist(), self.weights.tolist()))


def p_abs_bare(n: int, lambda_: float) -> float:
    """Bare absorption probability into the n-th vibrational sideband,
    the Poissonian Franck-Condon weight."""
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    return fc_weight(n, lambda_)


def p_abs_driven(
    n: int,
    lambda_: float,
    drive: DriveParams,
    policy: TruncationPolicy | None = None,
) -> float:
    """Absorption probability into sideband n with the infrared drive on.

    Convolves the Franck-Condon weights with the squared Bessel weights
    of the drive-induced quasienergy ladder; the truncation tail is
    below policy.eps_series.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if policy is None:
        policy = TruncationPolicy()
    x = 2.0 * lambda_ * drive.eta_d / drive.omega_d
    eps = policy.eps_series
    j_cut = fc_cutoff(lambda_, eps)
    orders = np.abs(n - np.arange(j_cut + 1))
    row = bessel_j_row(x, int(orders.max()))
    total = 0.0
    for j in range(j_cut + 1):
        total += fc_weight(j, lambda_) * row[orders[j]] ** 2
    return total


def floquet_quasienergies(
    lambda_: float, drive: DriveParams, m_range: int
) -> QuasienergyTable:
    """Quasienergy ladder offsets m*omega_d with weights J_m(x)^2 for
    m in [-m_range, m_range], x = 2*lambda*eta_d/omega_d."""
    if m_range < 0:
        raise ValueError(f"m_range must be >= 0, got {m_range}")
    x = 2.0 * lambda_ * drive.eta_d / drive.omega_d
    row = bessel_j_row(x, m_range)
    ms = np.arange(-m_range, m_range + 1)
    weights = row[np.abs(ms)] ** 2
    keep = weights > 0.0
    ms = ms[keep]
    return QuasienergyTable(
        ms=ms, offsets=ms * drive.omega_d, weights=weights[keep]
    )


def _squared_weight_row(arg: float, policy: TruncationPolicy) -> tuple[np.ndarray, int]:
    """J_m(arg)^2 over m = -M..M with the tail below eps_series."""
    cut = bessel_cutoff(arg, policy.eps_series)
    if cut > policy.m_max_cap:
        warnings.warn(
            f"Bessel cutoff {cut} capped at {policy.m_max_cap}; "
            "series tail exceeds eps_series",
            ValidityWarning,
            stacklevel=3,
        )
        cut = policy.m_max_cap
    row = bessel_j_row(arg, cut) ** 2
    return np.concatenate((row[:0:-1], row)), cut


def _fc_cut(lambda_: float, policy: TruncationPolicy) -> int:
    cut = fc_cutoff(lambda_, policy.eps_series)
    if cut > policy.n_max_cap:
        warnings.warn(
            f"vibrational cutoff {cut} capped at {policy.n_max_cap}; "
            "series tail exceeds eps_series",
            ValidityWarning,
            stacklevel=3,
        )
        cut = policy.n_max_cap
    return cut


def _lorentzian_comb(
    detunings: np.ndarray,
    lambda_: float,
    nu: float,
    gamma_tilde: float,
    Gamma_width: float,
    omega_d: float,
    harmonic_weights: np.ndarray,
    n_cut: int,
) -> np.ndarray:
    """Sum of Lorentzians over vibrational index n and drive harmonic k.

    harmonic_weights holds the k weights centered on k = 0; widths grow
    as gamma_tilde + n*Gamma_width. Returns the spectrum without the
    eta_p^2/gamma prefactor. Summation order is fixed (n ascending,
    vectorized over k) so results are bitwise reproducible.
    """
    k_half = (harmonic_weights.size - 1) // 2
    ks = np.arange(-k_half, k_half + 1)
    centers = detunings[:, None] - ks[None, :] * omega_d
    out = np.zeros(detunings.size)
    for n in range(n_cut + 1):
        s_n = fc_weight(n, lambda_)
        width = gamma_tilde + n * Gamma_width
        out += (s_n * width) * (
            harmonic_weights[None, :] / (width * width + (centers - n * nu) ** 2)
        ).sum(axis=1)
    return out


def spectrum_resonant(
    mol: MoleculeParams,
    drive: DriveParams,
    probe: ProbeParams,
    policy: TruncationPolicy | None = None,
) -> Spectrum:
    """Full analytic absorption spectrum with the coherent vibrational
    amplitude included.

    Evaluates the triple series over vibrational quanta and the two
    drive-harmonic indices, with Bessel weights at x = 2*lambda*eta_d/
    omega_d and y = 2*lambda*|beta|. Valid for probe linewidth gamma
    well below omega_d; the ratio is recorded in meta.
    """
    if policy is None:
        policy = TruncationPolicy()
    detunings = np.asarray(probe.detuning_grid, dtype=float)
    if detunings.size == 0:
        raise ValueError("probe.detuning_grid must be non-empty")
    lam = mol.lambda_
    x = 2.0 * lam * drive.eta_d / drive.omega_d
    beta = _beta_or_zero(mol, drive)
    y = 2.0 * lam * abs(beta)
    wx, m_cut = _squared_weight_row(x, policy)
    wy, l_cut = _squared_weight_row(y, policy)
    weights = np.convolve(wx, wy)
    n_cut = _fc_cut(lam, policy)
    values = (probe.eta_p ** 2 / mol.gamma) * _lorentzian_comb(
        detunings, lam, mol.nu, mol.gamma_tilde, mol.Gamma, drive.omega_d, weights, n_cut
    )
    meta = {
        "kind": "resonant",
        "x": x,
        "y": y,
        "beta_occupation": abs(beta) ** 2,
        "beta_magnitude_used": bool(abs(beta.imag) > 1e-12 * (abs(beta) + 1.0)),
        "n_cut": n_cut,
        "m_cut": m_cut,
        "l_cut": l_cut,
        "eps_series": policy.eps_series,
        "gamma_over_omega_d": mol.gamma / drive.omega_d,
        "assumes_gamma_below_omega_d": True,
    }
    return Spectrum(detunings=detunings, values=values, meta=meta)


def spectrum_off_resonant(
    mol: MoleculeParams,
    drive: DriveParams,
    probe: ProbeParams,
    policy: TruncationPolicy | None = None,
) -> Spectrum:
    """Absorption spectrum without the coherent-amplitude weight,
    the simplification valid when the steady occupation |beta|^2 is
    negligible (drive well detuned from the vibration).

    Warns if |beta|^2 exceeds 0.01; the value is recorded in meta.
    """
    if policy is None:
        policy = TruncationPolicy()
    detunings = np.asarray(probe.detuning_grid, dtype=float)
    if detunings.size == 0:
        raise ValueError("probe.detuning_grid must be non-empty")
    lam = mol.lambda_
    x = 2.0 * lam * drive.eta_d / drive.omega_d
    beta = _beta_or_zero(mol, drive)
    occupation = abs(beta) ** 2
    if occupation > 0.01:
        warnings.warn(
            f"off-resonant spectrum with |beta|^2 = {occupation:.3g} > 0.01; "
            "the coherent amplitude is not negligible here",
            ValidityWarning,
            stacklevel=2,
        )
    weights, m_cut = _squared_weight_row(x, policy)
    n_cut = _fc_cut(lam, policy)
    values = (probe.eta_p ** 2 / mol.gamma) * _lorentzian_comb(
        detunings, lam, mol.nu, mol.gamma_tilde, mol.Gamma, drive.omega_d, weights, n_cut
    )
    meta = {
        "kind": "off_resonant",
        "x": x,
        "beta_occupation": occupation,
        "n_cut": n_cut,
        "m_cut": m_cut,
        "eps_series": policy.eps_series,
        "gamma_over_omega_d": mol.gamma / drive.omega_d,
        "assumes_gamma_below_omega_d": True,
    }
    return Spectrum(detunings=detunings, values=values, meta=meta)


def sum_rule_residual(
    lambda_: float,
    drive: DriveParams,
    beta_mag: float,
    policy: TruncationPolicy | None = None,
) -> float:
    """|1 - truncated oscillator-strength sum| for the triple series.

    The Franck-Condon weights and both squared Bessel ladders each sum
    to one, so the residual measures pure truncation error and must
    stay below 10*eps_series.
    """
    if policy is None:
        policy = TruncationPolicy()
    if beta_mag < 0:
        raise ValueError(f"beta_mag must be >= 0, got {beta_mag}")
    x = 2.0 * lambda_ * drive.eta_d / drive.omega_d
    y = 2.0 * lambda_ * beta_mag
    n_cut = _fc_cut(lambda_, policy)
    fc_sum = math.fsum(fc_weight(n, lambda_) for n in range(n_cut + 1))
    wx, _ = _squared_weight_row(x, policy)
    wy, _ = _squared_weight_row(y, policy)
    return abs(1.0 - fc_sum * wx.sum() * wy.sum())


def zpl_intensity(
    mol: MoleculeParams,
    drive: DriveParams,
    probe: ProbeParams,
    beta_mag: float,
) -> float:
    """Exact zero-phonon line intensity
    (eta_p^2/(gamma*gamma_tilde)) exp(-lambda^2) J_0(x)^2 J_0(y)^2."""
    if beta_mag < 0:
        raise ValueError(f"beta_mag must be >= 0, got {beta_mag}")
    lam = mol.lambda_
    x = 2.0 * lam * drive.eta_d / drive.omega_d
    y = 2.0 * lam * beta_mag
    j0x = bessel_j_row(x, 0)[0]
    j0y = bessel_j_row(y, 0)[0]
    return (
        probe.eta_p ** 2
        / (mol.gamma * mol.gamma_tilde)
        * math.exp(-lam * lam)
        * j0x ** 2
        * j0y ** 2
    )


def zpl_intensity_estimate(
    mol: MoleculeParams,
    drive: DriveParams,
    probe: ProbeParams,
    beta_mag: float,
) -> float:
    """Small-argument companion to zpl_intensity: the effective
    Franck-Condon suppression exp[-lambda^2(1 + 2|beta|^2 +
    2*eta_d^2/omega_d^2)] times the bare two-level intensity."""
    if beta_mag < 0:
        raise ValueError(f"beta_mag must be >= 0, got {beta_mag}")
    lam2 = mol.lambda_ ** 2
    ratio = drive.eta_d / drive.omega_d
    exponent = -lam2 * (1.0 + 2.0 * beta_mag ** 2 + 2.0 * ratio ** 2)
    return probe.eta_p ** 2 / (mol.gamma * mol.gamma_tilde) * math.exp(exponent)


def sideband_ratio_estimate(mol: MoleculeParams, drive: DriveParams) -> float:
    """Driven-to-bare intensity ratio estimate eta_d^2/(4*gamma_tilde*
    Gamma) for the first sideband under resonant drive.

    Derived assuming gamma_tilde well below Gamma; outside that regime
    a ValidityWarning is issued.
    """
    if drive.eta_d == 0.0:
        return 0.0
    if mol.Gamma == 0.0:
        raise ValueError("sideband ratio estimate requires Gamma > 0")
    if mol.gamma_tilde >= 0.2 * mol.Gamma:
        warnings.warn(
            "sideband ratio estimate assumes gamma_tilde well below Gamma; "
            f"got gamma_tilde/Gamma = {mol.gamma_tilde / mol.Gamma:.3g}",
            ValidityWarning,
            stacklevel=2,
        )
    return drive.eta_d ** 2 / (4.0 * mol.gamma_tilde * mol.Gamma)
