"""Closed-form time-domain quantities for an infrared-driven vibronic mode:
the steady coherent vibrational amplitude, momentum and displacement
correlations, probe-induced dipole coherence, and the thermal noise
spectrum behind the vibrational damping."""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .params import (
    DriveParams,
    MoleculeParams,
    ProbeParams,
    TruncationPolicy,
    ValidityWarning,
)
from .specfun import bessel_cutoff, bessel_j_row, fc_cutoff, fc_weight

SQRT2 = math.sqrt(2.0)


class UndampedResonanceError(ValueError):
    """Resonant drive on an undamped vibration has no steady state."""


@dataclass(frozen=True)
class CoherentAmplitude:
    """Steady-state coherent amplitude of the driven vibrational mode."""

    beta: complex

    @property
    def occupation(self) -> float:
        """Mean vibrational quantum number |beta|^2 in the steady state."""
        return abs(self.beta) ** 2


@dataclass(frozen=True)
class CorrelationSample:
    """One two-time correlation value with its time ordering enforced."""

    t: float
    t_prime: float
    value: complex

    def __post_init__(self) -> None:
        if not (self.t >= self.t_prime):
            raise ValueError(
                f"correlation requires t >= t_prime, got t={self.t}, t_prime={self.t_prime}"
            )


@dataclass(frozen=True)
class CoherenceTrace:
    """Dipole coherence ⟨sigma(t)⟩ sampled on a time grid.

    The arrays are owned by the trace and must not be mutated.
    transient_time records the earliest time the generating model
    considers steady; meta carries series cutoffs and regime notes.
    """

    times: np.ndarray
    sigma_expect: np.ndarray
    transient_time: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        sig = np.asarray(self.sigma_expect, dtype=complex)
        if times.ndim != 1 or sig.shape != times.shape:
            raise ValueError("times and sigma_expect must be 1-d arrays of equal length")
        if times.size >= 2 and not np.all(np.diff(times) > 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "sigma_expect", sig)

    @property
    def coherence(self) -> np.ndarray:
        """C(t) = 2|⟨sigma(t)⟩|, the l1 coherence of the dipole."""
        return 2.0 * np.abs(self.sigma_expect)


def steady_beta(mol: MoleculeParams, drive: DriveParams) -> CoherentAmplitude:
    """Steady coherent amplitude beta = (eta_d/2)/(Gamma - i*Delta_d).

    Delta_d = omega_d - nu is the drive detuning from the vibration.
    """
    delta_d = drive.omega_d - mol.nu
    if mol.Gamma == 0.0 and delta_d == 0.0:
        raise UndampedResonanceError(
            "Gamma = 0 with omega_d = nu drives the vibration without bound"
        )
    beta = (drive.eta_d / 2.0) / complex(mol.Gamma, -delta_d)
    return CoherentAmplitude(beta=beta)


def _beta_or_zero(mol: MoleculeParams, drive: DriveParams) -> complex:
    # The undriven limit is well defined even when steady_beta would
    # reject the undamped resonant configuration.
    if drive.eta_d == 0.0:
        return 0.0 + 0.0j
    return steady_beta(mol, drive).beta


def momentum_mean(t: float, mol: MoleculeParams, drive: DriveParams) -> float:
    """Mean vibrational momentum ⟨p(t)⟩ of the coherently driven mode,
    with p = i(b+ - b)/sqrt(2).

    Equals -(beta* exp(i omega_d t) + beta exp(-i omega_d t))/sqrt(2):
    the steady response to the cos(omega_d t)(b+ + b) drive is
    ⟨b(t)⟩ = -i beta exp(-i omega_d t), which fixes the overall sign.
    """
    beta = _beta_or_zero(mol, drive)
    return -(beta * cmath.exp(-1j * drive.omega_d * t)).real * SQRT2


def momentum_corr_full(
    t: float, t_prime: float, mol: MoleculeParams, drive: DriveParams
) -> complex:
    """Two-time momentum correlation ⟨p(t)p(t_prime)⟩ for t >= t_prime.

    Includes the non-stationary exp(+-i*omega_d*(t+t_prime)) pieces on
    top of the stationary vacuum and drive parts. The underlying
    adiabatic elimination assumes Gamma well below nu; outside that
    regime a ValidityWarning is issued.
    """
    if not (t >= t_prime):
        raise ValueError(
            f"correlation requires t >= t_prime, got t={t}, t_prime={t_prime}"
        )
    if mol.Gamma >= 0.5 * mol.nu:
        warnings.warn(
            "momentum correlation assumes Gamma well below nu; "
            f"got Gamma/nu = {mol.Gamma / mol.nu:.3g}",
            ValidityWarning,
            stacklevel=2,
        )
    beta = _beta_or_zero(mol, drive)
    tau = t - t_prime
    wd = drive.omega_d
    vacuum = cmath.exp(-(mol.Gamma + 1j * mol.nu) * tau)
    stationary_drive = 2.0 * abs(beta) ** 2 * math.cos(wd * tau)
    breathing = beta * beta * cmath.exp(-1j * wd * (t + t_prime)) + (
        beta.conjugate() ** 2
    ) * cmath.exp(1j * wd * (t + t_prime))
    return 0.5 * (vacuum + stationary_drive + breathing)


def displacement_corr(
    t: float, t_prime: float, mol: MoleculeParams, drive: DriveParams
) -> complex:
    """Polaron displacement correlation ⟨D(t)D†(t_prime)⟩ for t >= t_prime.

    Evaluated as a single exponential so the equal-time value is exactly 1
    and the modulus bound |value| <= 1 holds to machine precision.
    """
    if not (t >= t_prime):
        raise ValueError(
            f"correlation requires t >= t_prime, got t={t}, t_prime={t_prime}"
        )
    lam2 = mol.lambda_ ** 2
    tau = t - t_prime
    decay = cmath.exp(-(mol.Gamma + 1j * mol.nu) * tau)
    p_diff = momentum_mean(t, mol, drive) - momentum_mean(t_prime, mol, drive)
    exponent = lam2 * (decay - 1.0) - 1j * SQRT2 * mol.lambda_ * p_diff
    return cmath.exp(exponent)


def transient_time(mol: MoleculeParams) -> float:
    """Time after which both electronic and vibrational transients have
    decayed: max(10/gamma_tilde, 10/Gamma)."""
    t0 = 10.0 / mol.gamma_tilde
    if mol.Gamma > 0.0:
        t0 = max(t0, 10.0 / mol.Gamma)
    return t0


def _harmonic_coefficients(
    mol: MoleculeParams,
    drive: DriveParams,
    eta_p: float,
    delta_p: float,
    resonant: bool,
    policy: TruncationPolicy,
) -> tuple[np.ndarray, np.ndarray, dict]:
    """Fourier coefficients A_k of the steady dipole response.

    The long-time coherence is sum_k A_k exp(i*k*omega_d*t) times the
    unimodular micromotion phases handled by the caller. Returns
    (k values, A_k, meta).
    """
    lam = mol.lambda_
    x = 2.0 * lam * drive.eta_d / drive.omega_d
    beta = _beta_or_zero(mol, drive)
    y = 2.0 * lam * abs(beta)

    eps = policy.eps_series
    n_cut = fc_cutoff(lam, eps)
    if n_cut > policy.n_max_cap:
        warnings.warn(
            f"vibrational cutoff {n_cut} capped at {policy.n_max_cap}; "
            "series tail exceeds eps_series",
            ValidityWarning,
            stacklevel=3,
        )
        n_cut = policy.n_max_cap
    m_cut = bessel_cutoff(x, eps)
    l_cut = bessel_cutoff(y, eps) if resonant else 0
    if max(m_cut, l_cut) > policy.m_max_cap:
        warnings.warn(
            f"Bessel cutoff {max(m_cut, l_cut)} capped at {policy.m_max_cap}; "
            "series tail exceeds eps_series",
            ValidityWarning,
            stacklevel=3,
        )
        m_cut = min(m_cut, policy.m_max_cap)
        l_cut = min(l_cut, policy.m_max_cap)

    row_x = bessel_j_row(x, m_cut)
    signs = (-1.0) ** np.arange(m_cut, 0, -1)
    a = np.concatenate((signs * row_x[:0:-1], row_x)).astype(complex)
    if resonant:
        row_y = bessel_j_row(y, l_cut)
        ells = np.arange(-l_cut, l_cut + 1)
        # The coherent-displacement factor exp(-i y cos) expands with
        # (-i)^l J_l(y) weights, even in l, so negative orders mirror.
        b = (-1j) ** np.abs(ells) * row_y[np.abs(ells)]
        weights = np.convolve(a, b)
        k_min = -(m_cut + l_cut)
    else:
        weights = a
        k_min = -m_cut
    ks = np.arange(k_min, -k_min + 1)

    gamma_t = mol.gamma_tilde
    coeffs = np.zeros(ks.size, dtype=complex)
    for n in range(n_cut + 1):
        s_n = fc_weight(n, lam)
        denom = (gamma_t + n * mol.Gamma) - 1j * (
            delta_p - n * mol.nu - ks * drive.omega_d
        )
        coeffs += s_n * weights / denom
    coeffs *= eta_p

    meta = {
        "resonant": bool(resonant),
        "x": x,
        "y": y,
        "beta_occupation": abs(beta) ** 2,
        "beta_magnitude_used": bool(resonant and abs(beta.imag) > 1e-12 * (abs(beta) + 1.0)),
        "n_cut": n_cut,
        "m_cut": m_cut,
        "l_cut": l_cut if resonant else None,
    }
    return ks, coeffs, meta


def sigma_trajectory(
    grid: np.ndarray,
    mol: MoleculeParams,
    drive: DriveParams,
    probe: ProbeParams,
    delta_p: float,
    resonant: bool = True,
    policy: TruncationPolicy | None = None,
) -> CoherenceTrace:
    """Long-time periodic dipole coherence ⟨sigma(t)⟩ at one probe detuning.

    With resonant=True the response is evaluated with the coherent
    amplitude included (double Bessel weight and both micromotion
    phases); resonant=False keeps only the direct drive modulation,
    valid when the steady occupation |beta|^2 is negligible.
    """
    if policy is None:
        policy = TruncationPolicy()
    grid = np.asarray(grid, dtype=float)
    ks, coeffs, meta = _harmonic_coefficients(
        mol, drive, probe.eta_p, float(delta_p), resonant, policy
    )
    phase = ks[None, :] * (drive.omega_d * grid[:, None])
    sigma = (np.exp(1j * phase) * coeffs[None, :]).sum(axis=1)
    micro = -meta["x"] * np.sin(drive.omega_d * grid)
    if resonant:
        # The coherent vibrational response pushes the momentum mean to
        # -sqrt(2)|beta|cos(omega_d t) on resonance, so its micromotion
        # phase enters with the opposite sign to the drive-modulation one.
        micro = micro + meta["y"] * np.cos(drive.omega_d * grid)
    sigma = sigma * np.exp(1j * micro)
    meta = dict(meta, delta_p=float(delta_p))
    return CoherenceTrace(
        times=grid,
        sigma_expect=sigma,
        transient_time=transient_time(mol),
        meta=meta,
    )


def trace_grid(
    mol: MoleculeParams,
    drive: DriveParams,
    periods: int = 20,
    samples_per_period: int = 96,
) -> np.ndarray:
    """Time grid covering `periods` drive periods past the transient."""
    if periods < 1 or samples_per_period < 2:
        raise ValueError("need at least one period and two samples per period")
    t0 = transient_time(mol)
    n = periods * samples_per_period
    return t0 + np.arange(n + 1) * (drive.period / samples_per_period)


def avg_coherence(trace: CoherenceTrace, drive: DriveParams) -> float:
    """Mean of C(t) over an integer number of drive periods.

    Averages over up to 20 whole periods starting at the trace's
    transient time, using trapezoidal integration with interpolated
    window endpoints. Raises if the trace does not cover one full
    period past the transient.
    """
    times = trace.times
    coh = trace.coherence
    period = drive.period
    w0 = max(trace.transient_time, times[0])
    n_periods = int(math.floor((times[-1] - w0) / period + 1e-9))
    if n_periods < 1:
        raise ValueError(
            "trace must cover at least one drive period past the transient"
        )
    n_periods = min(n_periods, 20)
    w1 = w0 + n_periods * period
    inside = (times > w0) & (times < w1)
    nodes = np.concatenate(([w0], times[inside], [w1]))
    vals = np.concatenate(
        ([np.interp(w0, times, coh)], coh[inside], [np.interp(w1, times, coh)])
    )
    return float(np.trapezoid(vals, nodes) / (w1 - w0))


def sigma_sideband_contributions(
    mol: MoleculeParams, drive: DriveParams, probe: ProbeParams
) -> tuple[float, float]:
    """Closed-form magnitudes of the two contributions to the first
    vibrational sideband under resonant drive.

    Returns (driven, bare): the drive-induced sideband amplitude
    (eta_p/gamma_tilde) exp(-lambda^2) |J_1(x)J_0(y) + J_0(x)J_1(y)|
    and the bare vibronic amplitude
    eta_p exp(-lambda^2) lambda^2/(gamma_tilde+Gamma) J_0(x)J_0(y),
    with x = 2*lambda*eta_d/omega_d and y = 2*lambda*|beta|.
    """
    if not math.isclose(drive.omega_d, mol.nu, rel_tol=1e-9):
        warnings.warn(
            "sideband formulas assume resonant drive omega_d = nu; "
            f"got omega_d/nu = {drive.omega_d / mol.nu:.6g}",
            ValidityWarning,
            stacklevel=2,
        )
    lam = mol.lambda_
    x = 2.0 * lam * drive.eta_d / drive.omega_d
    beta = _beta_or_zero(mol, drive)
    y = 2.0 * lam * abs(beta)
    row_x = bessel_j_row(x, 1)
    row_y = bessel_j_row(y, 1)
    fc = math.exp(-lam * lam)
    driven = (
        probe.eta_p
        / mol.gamma_tilde
        * fc
        * abs(row_x[1] * row_y[0] + row_x[0] * row_y[1])
    )
    bare = (
        probe.eta_p
        * fc
        * lam
        * lam
        / (mol.gamma_tilde + mol.Gamma)
        * row_x[0]
        * row_y[0]
    )
    return driven, bare


def thermal_spectrum(omega: float, mol: MoleculeParams, T: float) -> float:
    """Colored thermal noise spectrum seen by the vibration,
    S_th(omega) = 2*Gamma*omega*(coth(omega/T) + 1)/nu, with the
    temperature T in rate units.

    At T = 0 this reduces to the one-sided 4*Gamma*omega/nu for
    omega > 0, with the step taken as 1/2 at omega = 0.
    """
    if T < 0:
        raise ValueError(f"temperature must be >= 0, got {T}")
    omega = float(omega)
    if T == 0.0:
        if omega > 0.0:
            return 4.0 * mol.Gamma * omega / mol.nu
        return 0.0
    u = omega / T
    if abs(u) < 1e-8:
        omega_coth = T * (1.0 + u * u / 3.0)
    else:
        omega_coth = omega / math.tanh(u)
    return 2.0 * mol.Gamma * (omega_coth + omega) / mol.nu
