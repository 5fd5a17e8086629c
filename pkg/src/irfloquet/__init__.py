"""Infrared-dressed molecular optics: closed-form Floquet-engineered
absorption spectra, vibronic coherence dynamics, cavity-modified
sidebands, and a brute-force Lindblad oracle for cross-validation.

The public surface re-exports the working set from each submodule;
anything not listed here is reachable through the submodules directly.
"""

__version__ = "0.1.0"

from .params import (
    CavityParams,
    DriveParams,
    MoleculeParams,
    ProbeParams,
    TruncationPolicy,
    ValidityWarning,
    derive_lambda,
    finesse_enhancement,
    p_zpm,
    q_zpm,
)
from .specfun import (
    SeriesCutoffs,
    bessel_cutoff,
    bessel_j,
    bessel_j_row,
    fc_cutoff,
    fc_weight,
)
from .dynamics import (
    CoherenceTrace,
    CoherentAmplitude,
    CorrelationSample,
    UndampedResonanceError,
    avg_coherence,
    displacement_corr,
    momentum_corr_full,
    momentum_mean,
    sigma_sideband_contributions,
    sigma_trajectory,
    steady_beta,
    thermal_spectrum,
    trace_grid,
    transient_time,
)
from .spectra import (
    QuasienergyTable,
    Spectrum,
    floquet_quasienergies,
    p_abs_bare,
    p_abs_driven,
    sideband_ratio_estimate,
    spectrum_off_resonant,
    spectrum_resonant,
    sum_rule_residual,
    zpl_intensity,
    zpl_intensity_estimate,
)
from .cavity import (
    StrongCouplingError,
    SusceptibilityScan,
    beta_c,
    cooperativity,
    effective_drive_z,
    eps_c,
    eps_m,
    eps_m_eff,
    gamma_eff,
    gamma_ir,
    gamma_tilde_of_omega,
    nu_tilde_sq,
    spectrum_cavity,
    susceptibility_scan,
)
from .oracle import (
    ConvergenceError,
    DensityMatrix,
    HilbertConfig,
    IntegrationAccuracyError,
    IntegrationConfig,
    OracleTrajectory,
    build_hamiltonian,
    displacement_overlap_oracle,
    integrate,
    lindblad_rhs,
    spectrum_oracle,
)

__all__ = [
    "__version__",
    "CavityParams",
    "DriveParams",
    "MoleculeParams",
    "ProbeParams",
    "TruncationPolicy",
    "ValidityWarning",
    "derive_lambda",
    "finesse_enhancement",
    "p_zpm",
    "q_zpm",
    "SeriesCutoffs",
    "bessel_cutoff",
    "bessel_j",
    "bessel_j_row",
    "fc_cutoff",
    "fc_weight",
    "CoherenceTrace",
    "CoherentAmplitude",
    "CorrelationSample",
    "UndampedResonanceError",
    "avg_coherence",
    "displacement_corr",
    "momentum_corr_full",
    "momentum_mean",
    "sigma_sideband_contributions",
    "sigma_trajectory",
    "steady_beta",
    "thermal_spectrum",
    "trace_grid",
    "transient_time",
    "QuasienergyTable",
    "Spectrum",
    "floquet_quasienergies",
    "p_abs_bare",
    "p_abs_driven",
    "sideband_ratio_estimate",
    "spectrum_off_resonant",
    "spectrum_resonant",
    "sum_rule_residual",
    "zpl_intensity",
    "zpl_intensity_estimate",
    "StrongCouplingError",
    "SusceptibilityScan",
    "beta_c",
    "cooperativity",
    "effective_drive_z",
    "eps_c",
    "eps_m",
    "eps_m_eff",
    "gamma_eff",
    "gamma_ir",
    "gamma_tilde_of_omega",
    "nu_tilde_sq",
    "spectrum_cavity",
    "susceptibility_scan",
    "ConvergenceError",
    "DensityMatrix",
    "HilbertConfig",
    "IntegrationAccuracyError",
    "IntegrationConfig",
    "OracleTrajectory",
    "build_hamiltonian",
    "displacement_overlap_oracle",
    "integrate",
    "lindblad_rhs",
    "spectrum_oracle",
]
