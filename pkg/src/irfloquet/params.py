"""Physical parameter types and derivation helpers.

All quantities are expressed in angular-frequency (rate) units; the library
itself is unit-agnostic and only rate ratios and detunings enter any formula.
The command-line layer fixes the vibrational frequency ``nu = 1`` and states
every other rate relative to it.

The electronic transition frequency omega_0 is never stored: every observable
depends on the probe detuning Delta_p = omega_p - omega_0 only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class ValidityWarning(UserWarning):
    """A result was requested outside the regime its formula assumes."""


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class MoleculeParams:
    """Vibronic molecule: coupling, frequencies, and decay rates.

    Parameters
    ----------
    lambda_ : float
        Dimensionless vibronic (electron-vibration) coupling. The square
        lambda_**2 is the Huang-Rhys factor.
    nu : float
        Vibrational angular frequency, the reference rate unit.
    gamma : float
        Radiative decay rate of the electronic excited state.
    gamma_phi : float
        Pure dephasing rate of the electronic transition.
    Gamma : float
        Vibrational relaxation rate (amplitude decay of the vibron).
    """

    lambda_: float
    nu: float
    gamma: float
    gamma_phi: float = 0.0
    Gamma: float = 0.0

    def __post_init__(self) -> None:
        for name in ("lambda_", "nu", "gamma", "gamma_phi", "Gamma"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))
        if self.lambda_ < 0:
            raise ValueError(f"lambda_ must be >= 0, got {self.lambda_}")
        if self.nu <= 0:
            raise ValueError(f"nu must be > 0, got {self.nu}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if self.gamma_phi < 0:
            raise ValueError(f"gamma_phi must be >= 0, got {self.gamma_phi}")
        if self.Gamma < 0:
            raise ValueError(f"Gamma must be >= 0, got {self.Gamma}")

    @property
    def gamma_tilde(self) -> float:
        """Total zero-phonon linewidth gamma + gamma_phi."""
        return self.gamma + self.gamma_phi

    @property
    def huang_rhys(self) -> float:
        return self.lambda_ ** 2


@dataclass(frozen=True)
class DriveParams:
    """Classical infrared drive of the vibrational mode.

    eta_d is the drive amplitude in rate units; omega_d the drive angular
    frequency. omega_d must be strictly positive because it divides the
    Bessel argument 2*lambda*eta_d/omega_d everywhere downstream.
    """

    eta_d: float
    omega_d: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "eta_d", _check_finite("eta_d", self.eta_d))
        object.__setattr__(self, "omega_d", _check_finite("omega_d", self.omega_d))
        if self.eta_d < 0:
            raise ValueError(f"eta_d must be >= 0, got {self.eta_d}")
        if self.omega_d <= 0:
            raise ValueError(f"omega_d must be > 0, got {self.omega_d}")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega_d


@dataclass(frozen=True)
class ProbeParams:
    """Weak optical probe of the electronic transition.

    detuning_grid holds the probe detunings Delta_p = omega_p - omega_0 at
    which spectra are evaluated; it must be strictly increasing. Whether the
    probe is weak relative to gamma can only be judged against a molecule,
    so that check lives in the spectrum routines (they warn, never reject).
    """

    eta_p: float
    detuning_grid: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "eta_p", _check_finite("eta_p", self.eta_p))
        if self.eta_p < 0:
            raise ValueError(f"eta_p must be >= 0, got {self.eta_p}")
        grid = tuple(_check_finite("detuning_grid entry", v) for v in self.detuning_grid)
        object.__setattr__(self, "detuning_grid", grid)
        for a, b in zip(grid, grid[1:]):
            if not a < b:
                raise ValueError("detuning_grid must be strictly increasing")

    def weak_probe_ok(self, mol: MoleculeParams) -> bool:
        """True when eta_p < gamma, the linear-response assumption."""
        return self.eta_p < mol.gamma


@dataclass(frozen=True)
class CavityParams:
    """Infrared cavity coupled to the vibration.

    g is the vibration-cavity coupling rate, kappa the cavity amplitude
    decay rate, omega_c the cavity frequency, and eta_d_c the amplitude of
    the classical drive applied through the cavity port.
    """

    g: float
    kappa: float
    omega_c: float
    eta_d_c: float = 0.0

    def __post_init__(self) -> None:
        for name in ("g", "kappa", "omega_c", "eta_d_c"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))
        if self.g < 0:
            raise ValueError(f"g must be >= 0, got {self.g}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if self.omega_c <= 0:
            raise ValueError(f"omega_c must be > 0, got {self.omega_c}")
        if self.eta_d_c < 0:
            raise ValueError(f"eta_d_c must be >= 0, got {self.eta_d_c}")


@dataclass(frozen=True)
class TruncationPolicy:
    """Tolerances and hard caps for every truncated series in the library.

    eps_series is the absolute tail tolerance each infinite sum must meet;
    n_max_cap bounds the vibrational index n and m_max_cap bounds every
    Bessel order. The caps exist as a safety net for extreme arguments and
    are generous for all parameters the formulas are valid in.
    """

    eps_series: float = 1e-12
    n_max_cap: int = 64
    m_max_cap: int = 128

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps_series", _check_finite("eps_series", self.eps_series))
        if self.eps_series <= 0:
            raise ValueError(f"eps_series must be > 0, got {self.eps_series}")
        if int(self.n_max_cap) < 1 or int(self.m_max_cap) < 1:
            raise ValueError("series caps must be >= 1")
        object.__setattr__(self, "n_max_cap", int(self.n_max_cap))
        object.__setattr__(self, "m_max_cap", int(self.m_max_cap))


def q_zpm(mu: float, nu: float) -> float:
    """Zero-point motion of the coordinate, 1/sqrt(2*mu*nu)."""
    if mu <= 0 or nu <= 0:
        raise ValueError("mu and nu must be positive")
    return 1.0 / math.sqrt(2.0 * mu * nu)


def p_zpm(mu: float, nu: float) -> float:
    """Zero-point momentum, sqrt(mu*nu/2)."""
    if mu <= 0 or nu <= 0:
        raise ValueError("mu and nu must be positive")
    return math.sqrt(mu * nu / 2.0)


def derive_lambda(mu: float, nu: float, R_ge: float) -> float:
    """Vibronic coupling from microscopic quantities.

    lambda = mu * nu * R_ge * q_zpm = R_ge * sqrt(mu * nu / 2), where R_ge
    is the equilibrium-coordinate displacement between the ground and
    excited electronic potential surfaces.
    """
    if mu <= 0 or nu <= 0:
        raise ValueError("mu and nu must be positive")
    return R_ge * math.sqrt(mu * nu / 2.0)


def finesse_enhancement(F: float) -> float:
    """Drive enhancement factor sqrt(F / (2 pi)) of a cavity of finesse F.

    Relates the intracavity effective drive to the free-space drive of the
    same input power: (g * eta_d_c / kappa) / eta_d = sqrt(F / (2 pi)).
    """
    F = _check_finite("F", F)
    if F <= 0:
        raise ValueError(f"finesse must be > 0, got {F}")
    return math.sqrt(F / (2.0 * math.pi))
