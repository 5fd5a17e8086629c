"""Shared helpers for the test suite: independent reference
implementations used to cross-check the analytic modules.

Everything here is deliberately written from scratch against the
underlying model (driven damped oscillator, Lindblad regression,
formal time-ordered probe response) rather than by calling back into
the package, so agreement between the two routes is meaningful.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import expm

SQRT2 = math.sqrt(2.0)


def driven_beta(mol, drive) -> complex:
    """Steady amplitude of d<b>/dt = -(Gamma + i nu)<b> - i(eta_d/2)e^{-i w_d t},
    written so <b(t)> = -i beta e^{-i w_d t}."""
    delta_d = drive.omega_d - mol.nu
    return (drive.eta_d / 2.0) / complex(mol.Gamma, -delta_d)


def momentum_of_beta(t, mol, drive):
    """Scalar or vectorized driven momentum mean -sqrt(2) Re(beta e^{-i w t})."""
    beta = driven_beta(mol, drive) if drive.eta_d else 0.0j
    return -SQRT2 * (beta * np.exp(-1j * drive.omega_d * np.asarray(t))).real


def quad_sigma(
    ts,
    mol,
    drive,
    eta_p: float,
    delta_p: float,
    s_max: float | None = None,
    ds: float | None = None,
    include_beta_phase: bool = True,
) -> np.ndarray:
    """Dipole coherence from direct quadrature of the formal solution.

    sigma(t) = eta_p * Int_0^inf ds e^{(i delta_p - gamma_tilde)s}
               * e^{lambda^2 (e^{-(Gamma+i nu)s} - 1)}
               * e^{-i sqrt(2) lambda (p(t) - p(t-s))}
               * e^{-i x (sin w_d t - sin w_d (t-s))}

    with x = 2 lambda eta_d / w_d and p the driven momentum mean. Only
    usable when gamma_tilde is large enough that the s integral fits a
    dense grid; the tests pick regimes accordingly.
    """
    gt = mol.gamma_tilde
    lam = mol.lambda_
    wd = drive.omega_d
    x = 2.0 * lam * drive.eta_d / wd
    if s_max is None:
        s_max = 35.0 / gt
    if ds is None:
        ds = (2.0 * math.pi / max(mol.nu, wd)) / 240.0
    s = np.arange(0.0, s_max + ds, ds)
    vib = np.exp(lam * lam * (np.exp(-(mol.Gamma + 1j * mol.nu) * s) - 1.0))
    envelope = np.exp((1j * delta_p - gt) * s) * vib
    out = np.empty(len(ts), dtype=complex)
    for i, t in enumerate(np.asarray(ts, dtype=float)):
        drive_phase = np.exp(-1j * x * (math.sin(wd * t) - np.sin(wd * (t - s))))
        if include_beta_phase:
            p_now = momentum_of_beta(t, mol, drive)
            p_then = momentum_of_beta(t - s, mol, drive)
            drive_phase = drive_phase * np.exp(-1j * SQRT2 * lam * (p_now - p_then))
        out[i] = eta_p * simpson(envelope * drive_phase, x=s)
    return out


def regression_displacement(lam: float, Gamma: float, nu: float, tau: float,
                            dim: int = 30) -> complex:
    """<D(tau) D+(0)> for the undriven damped vibration at T = 0 by
    quantum regression on a dense Lindblad superoperator.

    D = exp(lam (b+ - b)); steady state is the vacuum. The correlation
    is Tr[D e^{L tau}(D+ rho_ss)] with L the generator of
    drho/dt = -i[nu b+b, rho] + Gamma(2 b rho b+ - {b+b, rho}).
    """
    b = np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex)
    bd = b.conj().T
    num = bd @ b
    disp = expm(lam * (bd - b))
    eye = np.eye(dim, dtype=complex)
    ham = nu * num
    lind = (
        -1j * (np.kron(ham, eye) - np.kron(eye, ham.T))
        + Gamma * (2.0 * np.kron(b, b.conj())
                   - np.kron(num, eye) - np.kron(eye, num.T))
    )
    rho_ss = np.zeros((dim, dim), dtype=complex)
    rho_ss[0, 0] = 1.0
    x0 = (disp.conj().T @ rho_ss).reshape(-1)
    xt = (expm(lind * tau) @ x0).reshape(dim, dim)
    return complex(np.trace(disp @ xt))


def fourier_harmonic(times, values, omega: float, k: int) -> complex:
    """k-th Fourier coefficient (1/T) Int values * e^{-i k omega t} dt
    over the full span of `times`, which must cover an integer number
    of periods of 2 pi / omega."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values)
    span = times[-1] - times[0]
    return complex(
        np.trapezoid(values * np.exp(-1j * k * omega * times), times) / span
    )


def lorentzian_hwhm(f, center: float, span: float, pedestal_at: float):
    """Half width at half maximum of a peak of f around `center`.

    The background is taken as the mean of f at center +- pedestal_at
    and the half-crossing points are found by bisection on both sides
    within [center - span, center + span].
    """
    from scipy.optimize import brentq

    base = 0.5 * (f(center - pedestal_at) + f(center + pedestal_at))
    top = f(center)
    half = base + 0.5 * (top - base)
    lo = brentq(lambda u: f(u) - half, center - span, center, xtol=1e-13)
    hi = brentq(lambda u: f(u) - half, center, center + span, xtol=1e-13)
    return 0.5 * (hi - lo)
