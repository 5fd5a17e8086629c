"""Brute-force Lindblad master-equation oracle on the truncated
two-level x vibrational (x optional cavity) Hilbert space.

Everything here is deliberately independent of the closed-form modules:
operators are assembled from Kronecker products, the Liouvillian is a
dense superoperator, and time evolution is plain fixed-step RK4 (or an
adaptive embedded pair). The only contact points with the rest of the
library are the parameter types and the Spectrum container, so oracle
results can stand as ground truth for the analytic formulas.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .params import (
    CavityParams,
    DriveParams,
    MoleculeParams,
    ProbeParams,
    ValidityWarning,
)
from .spectra import Spectrum

_DIM_GUARD = 256
_TRACE_TOL = 1e-6
_STEPS_PER_SHORTEST_PERIOD = 50


class IntegrationAccuracyError(RuntimeError):
    """The integrator left its accuracy envelope (trace drift too large)."""


class ConvergenceError(RuntimeError):
    """The system had not reached its periodic steady state at t_end."""


@dataclass(frozen=True)
class HilbertConfig:
    """Truncation of the oracle Hilbert space.

    n_cav = 0 means no cavity factor. The total dimension is guarded at
    256 to keep dense superoperators desk-sized; pass allow_large=True
    to lift the guard deliberately.
    """

    n_vib: int = 6
    n_cav: int = 0
    rotating_frame: bool = True
    allow_large: bool = False

    def __post_init__(self) -> None:
        if self.n_vib < 2:
            raise ValueError(f"n_vib must be >= 2, got {self.n_vib}")
        if self.n_cav < 0:
            raise ValueError(f"n_cav must be >= 0, got {self.n_cav}")
        if self.dim > _DIM_GUARD and not self.allow_large:
            raise ValueError(
                f"Hilbert dimension {self.dim} exceeds the guard {_DIM_GUARD}; "
                "set allow_large=True to override"
            )

    @property
    def dim(self) -> int:
        d = 2 * self.n_vib
        if self.n_cav > 0:
            d *= self.n_cav
        return d


@dataclass(frozen=True)
class IntegrationConfig:
    """Time-stepping controls for the oracle."""

    dt: float
    t_end: float
    method: str = "rk4"
    period_average: bool = True

    def __post_init__(self) -> None:
        if not (self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not (self.t_end > 0):
            raise ValueError(f"t_end must be > 0, got {self.t_end}")
        if self.method not in ("rk4", "adaptive"):
            raise ValueError(f"method must be 'rk4' or 'adaptive', got {self.method!r}")


@dataclass(frozen=True)
class DensityMatrix:
    """Dense Hermitian unit-trace state over the truncated space."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("density matrix must be square")
        if abs(np.trace(m) - 1.0) > 1e-8:
            raise ValueError(f"trace must be 1, got {np.trace(m)}")
        if np.max(np.abs(m - m.conj().T)) > 1e-8:
            raise ValueError("density matrix must be Hermitian")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def ground(cls, hilbert: HilbertConfig) -> "DensityMatrix":
        """Electronic ground state with zero vibrational (and cavity) quanta."""
        m = np.zeros((hilbert.dim, hilbert.dim), dtype=complex)
        m[0, 0] = 1.0
        return cls(matrix=m)


@dataclass(frozen=True)
class OracleTrajectory:
    """Sampled observables of one Lindblad integration, with the hygiene
    record (trace drift, Hermiticity defect, minimum eigenvalue) that
    every accepted run must satisfy."""

    times: np.ndarray
    excited: np.ndarray
    sigma: np.ndarray
    vib_occupation: np.ndarray
    momentum: np.ndarray
    cav_occupation: np.ndarray | None
    trace_drift: float
    herm_defect: float
    min_eigenvalue: float
    rho_final: DensityMatrix
    period_averages: dict | None = None
    meta: dict = field(default_factory=dict)


def _destroy(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n)), 1).astype(complex)


def _operators(hilbert: HilbertConfig) -> dict:
    """Embedded single-system operators on the full product space."""
    sigma2 = np.array([[0, 1], [0, 0]], dtype=complex)
    eye2 = np.eye(2, dtype=complex)
    b1 = _destroy(hilbert.n_vib)
    eyev = np.eye(hilbert.n_vib, dtype=complex)
    if hilbert.n_cav > 0:
        a1 = _destroy(hilbert.n_cav)
        eyec = np.eye(hilbert.n_cav, dtype=complex)
        sigma = np.kron(np.kron(sigma2, eyev), eyec)
        b = np.kron(np.kron(eye2, b1), eyec)
        a = np.kron(np.kron(eye2, eyev), a1)
    else:
        sigma = np.kron(sigma2, eyev)
        b = np.kron(eye2, b1)
        a = None
    return {"sigma": sigma, "b": b, "a": a, "eye": np.eye(hilbert.dim, dtype=complex)}


def _hamiltonian_parts(
    mol: MoleculeParams,
    drive: DriveParams,
    eta_p: float,
    delta_p: float,
    hilbert: HilbertConfig,
    cav: CavityParams | None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None, np.ndarray | None]:
    """Split H(t) into static and oscillating pieces.

    Returns (H_static, H_cos, H_probe_cos, H_probe_sin): the full
    Hamiltonian is H_static + cos(omega_d t) H_cos in the probe-rotating
    frame; outside that frame the probe instead contributes
    cos(delta_p t) H_probe_cos + sin(delta_p t) H_probe_sin and
    H_static carries no -delta_p shift.
    """
    ops = _operators(hilbert)
    sigma, b = ops["sigma"], ops["b"]
    proj = sigma.conj().T @ sigma
    xb = b + b.conj().T
    lam = mol.lambda_

    h_static = mol.nu * (b.conj().T @ b) - lam * mol.nu * (xb @ proj)
    h_static += lam * lam * mol.nu * proj
    h_cos = drive.eta_d * xb
    probe_op = 1j * eta_p * (sigma.conj().T - sigma)

    if hilbert.n_cav > 0:
        if cav is None:
            raise ValueError("hilbert has a cavity factor but no CavityParams given")
        a = ops["a"]
        xa = a + a.conj().T
        h_static = h_static + cav.omega_c * (a.conj().T @ a) + cav.g * (xa @ xb)
        h_cos = h_cos + cav.eta_d_c * xa
    elif cav is not None and (cav.g != 0.0 or cav.eta_d_c != 0.0):
        raise ValueError("CavityParams given but hilbert.n_cav is 0")

    if hilbert.rotating_frame:
        return h_static - delta_p * proj + probe_op, h_cos, None, None
    probe_sin = eta_p * (sigma.conj().T + sigma)
    return h_static, h_cos, probe_op, probe_sin


def build_hamiltonian(
    t: float,
    mol: MoleculeParams,
    drive: DriveParams,
    probe: ProbeParams,
    delta_p: float,
    hilbert: HilbertConfig,
    cav: CavityParams | None = None,
) -> np.ndarray:
    """Full Hamiltonian matrix at time t on the truncated space."""
    h0, h1, hpc, hps = _hamiltonian_parts(
        mol, drive, probe.eta_p, delta_p, hilbert, cav
    )
    h = h0 + math.cos(drive.omega_d * t) * h1
    if hpc is not None:
        h = h + math.cos(delta_p * t) * hpc + math.sin(delta_p * t) * hps
    return h


def _collapse_terms(
    mol: MoleculeParams, hilbert: HilbertConfig, cav: CavityParams | None
) -> list[tuple[float, np.ndarray]]:
    ops = _operators(hilbert)
    sigma = ops["sigma"]
    terms = [
        (mol.gamma, sigma),
        (mol.gamma_phi, sigma.conj().T @ sigma),
        (mol.Gamma, ops["b"]),
    ]
    if hilbert.n_cav > 0:
        terms.append((cav.kappa if cav is not None else 0.0, ops["a"]))
    return [(rate, op) for rate, op in terms if rate > 0.0]


def lindblad_rhs(
    rho: np.ndarray,
    t: float,
    mol: MoleculeParams,
    drive: DriveParams,
    probe: ProbeParams,
    delta_p: float,
    hilbert: HilbertConfig,
    cav: CavityParams | None = None,
) -> np.ndarray:
    """d(rho)/dt = i[rho, H(t)] + sum_c rate_c (2 c rho c+ - {c+c, rho}).

    Collapse channels: electronic decay at gamma, pure dephasing at
    gamma_phi, vibrational decay at Gamma, cavity decay at kappa.
    """
    rho = np.asarray(rho, dtype=complex)
    d = hilbert.dim
    if rho.shape != (d, d):
        raise ValueError(f"rho has shape {rho.shape}, expected {(d, d)}")
    h = build_hamiltonian(t, mol, drive, probe, delta_p, hilbert, cav)
    out = 1j * (rho @ h - h @ rho)
    for rate, c in _collapse_terms(mol, hilbert, cav):
        cdc = c.conj().T @ c
        out += rate * (2.0 * (c @ rho @ c.conj().T) - cdc @ rho - rho @ cdc)
    return out


def _dissipator_superop(rate: float, c: np.ndarray, eye: np.ndarray) -> np.ndarray:
    cdc = c.conj().T @ c
    return rate * (
        2.0 * np.kron(c, c.conj())
        - np.kron(cdc, eye)
        - np.kron(eye, cdc.T)
    )


def _commutator_superop(h: np.ndarray, eye: np.ndarray) -> np.ndarray:
    # vec(i[rho, H]) with row-major vec(rho): i(I x H^T - H x I) vec(rho)
    return 1j * (np.kron(eye, h.T) - np.kron(h, eye))


def _superoperator_terms(
    mol: MoleculeParams,
    drive: DriveParams,
    eta_p: float,
    delta_p: float,
    hilbert: HilbertConfig,
    cav: CavityParams | None,
) -> list[tuple[str, np.ndarray]]:
    """Liouvillian as labeled static pieces.

    Labels name the time dependence: 'const', 'cos_wd', 'cos_dp',
    'sin_dp'. L(t) is the coefficient-weighted sum.
    """
    h0, h1, hpc, hps = _hamiltonian_parts(mol, drive, eta_p, delta_p, hilbert, cav)
    eye = np.eye(hilbert.dim, dtype=complex)
    l0 = _commutator_superop(h0, eye)
    for rate, c in _collapse_terms(mol, hilbert, cav):
        l0 += _dissipator_superop(rate, c, eye)
    terms = [("const", l0), ("cos_wd", _commutator_superop(h1, eye))]
    if hpc is not None:
        terms.append(("cos_dp", _commutator_superop(hpc, eye)))
        terms.append(("sin_dp", _commutator_superop(hps, eye)))
    return terms


def _coefficients(
    labels: list[str], t: float, omega_d: float, delta_p: float
) -> np.ndarray:
    out = np.empty(len(labels))
    for i, lab in enumerate(labels):
        if lab == "const":
            out[i] = 1.0
        elif lab == "cos_wd":
            out[i] = math.cos(omega_d * t)
        elif lab == "cos_dp":
            out[i] = math.cos(delta_p * t)
        else:
            out[i] = math.sin(delta_p * t)
    return out


def _observable_vectors(hilbert: HilbertConfig) -> dict:
    # tr(O rho) = vec(O^T) . vec(rho) for row-major vec.
    ops = _operators(hilbert)
    sigma, b, a = ops["sigma"], ops["b"], ops["a"]
    p_op = 1j * (b.conj().T - b) / math.sqrt(2.0)
    vecs = {
        "excited": (sigma.conj().T @ sigma).T.reshape(-1),
        "sigma": sigma.T.reshape(-1),
        "vib_occupation": (b.conj().T @ b).T.reshape(-1),
        "momentum": p_op.T.reshape(-1),
    }
    if a is not None:
        vecs["cav_occupation"] = (a.conj().T @ a).T.reshape(-1)
    return vecs


def _dt_cap(
    mol: MoleculeParams, drive: DriveParams, hilbert: HilbertConfig, cav: CavityParams | None
) -> float:
    omega_max = max(mol.nu, drive.omega_d)
    if hilbert.n_cav > 0 and cav is not None:
        omega_max = max(omega_max, cav.omega_c)
    return (2.0 * math.pi / omega_max) / _STEPS_PER_SHORTEST_PERIOD


class _Stepper:
    """Fixed-step RK4 march of vec(rho) with per-step hygiene."""

    def __init__(self, terms, omega_d, delta_p, dim):
        self.labels = [lab for lab, _ in terms]
        self.stack = np.concatenate([l for _, l in terms], axis=0)
        self.omega_d = omega_d
        self.delta_p = delta_p
        self.dim = dim
        self.n_terms = len(terms)
        self.herm_defect = 0.0
        self.trace_drift = 0.0

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        u = (self.stack @ y).reshape(self.n_terms, -1)
        if self.n_terms == 2:
            return u[0] + math.cos(self.omega_d * t) * u[1]
        coeff = _coefficients(self.labels, t, self.omega_d, self.delta_p)
        return coeff @ u

    def step(self, t: float, y: np.ndarray, dt: float) -> np.ndarray:
        k1 = self.rhs(t, y)
        k2 = self.rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = self.rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = self.rhs(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rho = y.reshape(self.dim, self.dim)
        defect = np.max(np.abs(rho - rho.conj().T))
        if defect > self.herm_defect:
            self.herm_defect = defect
        rho = 0.5 * (rho + rho.conj().T)
        drift = abs(np.trace(rho).real - 1.0)
        if drift > self.trace_drift:
            self.trace_drift = drift
        if drift > _TRACE_TOL:
            raise IntegrationAccuracyError(
                f"trace drifted by {drift:.3e} (> {_TRACE_TOL}); reduce dt"
            )
        return rho.reshape(-1)


def integrate(
    rho0: DensityMatrix | np.ndarray,
    mol: MoleculeParams,
    drive: DriveParams,
    probe: ProbeParams,
    delta_p: float,
    hilbert: HilbertConfig,
    cfg: IntegrationConfig,
    cav: CavityParams | None = None,
    sample_times: np.ndarray | None = None,
) -> OracleTrajectory:
    """Integrate the master equation and sample observables.

    Samples are snapped to step boundaries. With period_average set,
    the averages of all observables over the final drive period (and
    the one before it, kept in meta for convergence checks) are
    computed by trapezoidal accumulation at full step resolution.
    """
    if not isinstance(rho0, DensityMatrix):
        rho0 = DensityMatrix(matrix=rho0)
    d = hilbert.dim
    if rho0.matrix.shape != (d, d):
        raise ValueError(
            f"rho0 has shape {rho0.matrix.shape}, expected {(d, d)}"
        )
    cap = _dt_cap(mol, drive, hilbert, cav)
    if cfg.dt > cap * (1.0 + 1e-12):
        raise ValueError(
            f"dt = {cfg.dt:.6g} does not resolve the fastest period; "
            f"need dt <= {cap:.6g}"
        )
    n_steps = max(1, int(round(cfg.t_end / cfg.dt)))
    dt = cfg.dt
    t_end = n_steps * dt

    if cfg.method == "adaptive":
        return _integrate_adaptive(
            rho0, mol, drive, probe, delta_p, hilbert, cfg, cav, sample_times, t_end
        )

    if sample_times is None:
        n_samp = min(n_steps, 256)
        sample_idx = np.unique(np.round(np.linspace(0, n_steps, n_samp + 1)).astype(int))
    else:
        req = np.asarray(sample_times, dtype=float)
        sample_idx = np.unique(np.clip(np.round(req / dt).astype(int), 0, n_steps))

    terms = _superoperator_terms(mol, drive, probe.eta_p, delta_p, hilbert, cav)
    stepper = _Stepper(terms, drive.omega_d, delta_p, d)
    obs_vecs = _observable_vectors(hilbert)
    obs_names = list(obs_vecs)
    obs_mat = np.array([obs_vecs[name] for name in obs_names])

    # Period windows are whole numbers of steps so that the last and the
    # previous period sample the drive at identical phases; otherwise the
    # period-to-period convergence test would alias the micromotion.
    period = drive.period
    steps_per_period = int(round(period / dt))
    averaging = cfg.period_average and n_steps >= 2 * steps_per_period
    start_last = n_steps - steps_per_period
    start_prev = n_steps - 2 * steps_per_period
    sums_last = np.zeros(len(obs_names), dtype=complex)
    sums_prev = np.zeros(len(obs_names), dtype=complex)

    y = rho0.matrix.reshape(-1).copy()
    records = []
    eig_min = math.inf
    eig_every = max(1, (sample_idx.size - 1) // 32) if sample_idx.size > 1 else 1

    def observe(step: int, yv: np.ndarray) -> None:
        nonlocal eig_min
        pos = np.searchsorted(sample_idx, step)
        if pos < sample_idx.size and sample_idx[pos] == step:
            vals = obs_mat @ yv
            records.append((step * dt, vals))
            if pos % eig_every == 0 or step == n_steps:
                w = np.linalg.eigvalsh(yv.reshape(d, d))
                if w[0] < eig_min:
                    eig_min = float(w[0])

    def accumulate(step: int, yv: np.ndarray) -> None:
        nonlocal sums_last, sums_prev
        if step >= start_last:
            w = 0.5 if step in (start_last, n_steps) else 1.0
            sums_last += w * (obs_mat @ yv)
        elif step >= start_prev:
            w = 0.5 if step == start_prev else 1.0
            sums_prev += w * (obs_mat @ yv)
        if step == start_last:
            sums_prev += 0.5 * (obs_mat @ yv)

    observe(0, y)
    if averaging:
        accumulate(0, y)
    rho_period_start = None
    for step in range(1, n_steps + 1):
        y = stepper.step((step - 1) * dt, y, dt)
        observe(step, y)
        if averaging:
            accumulate(step, y)
            if step == start_last:
                rho_period_start = y.reshape(d, d).copy()

    times = np.array([t for t, _ in records])
    cols = np.array([v for _, v in records])
    data = {name: cols[:, i] for i, name in enumerate(obs_names)}

    period_averages = None
    meta = {
        "t_end": t_end,
        "dt": dt,
        "n_steps": n_steps,
        "delta_p": delta_p,
        "method": "rk4",
    }
    if averaging:
        avg_last = sums_last / steps_per_period
        avg_prev = sums_prev / steps_per_period
        period_averages = {
            name: (avg_last[i] if name == "sigma" else avg_last[i].real)
            for i, name in enumerate(obs_names)
        }
        meta["prev_period_averages"] = {
            name: (avg_prev[i] if name == "sigma" else avg_prev[i].real)
            for i, name in enumerate(obs_names)
        }
        if rho_period_start is not None:
            meta["rho_period_start"] = rho_period_start
            meta["steps_per_period"] = steps_per_period

    return OracleTrajectory(
        times=times,
        excited=data["excited"].real,
        sigma=data["sigma"],
        vib_occupation=data["vib_occupation"].real,
        momentum=data["momentum"].real,
        cav_occupation=data["cav_occupation"].real if "cav_occupation" in data else None,
        trace_drift=stepper.trace_drift,
        herm_defect=stepper.herm_defect,
        min_eigenvalue=eig_min,
        rho_final=DensityMatrix(matrix=y.reshape(d, d)),
        period_averages=period_averages,
        meta=meta,
    )


def _integrate_adaptive(
    rho0, mol, drive, probe, delta_p, hilbert, cfg, cav, sample_times, t_end
):
    from scipy.integrate import solve_ivp

    d = hilbert.dim
    terms = _superoperator_terms(mol, drive, probe.eta_p, delta_p, hilbert, cav)
    stepper = _Stepper(terms, drive.omega_d, delta_p, d)
    if sample_times is None:
        sample_times = np.linspace(0.0, t_end, 257)
    else:
        sample_times = np.unique(np.clip(np.asarray(sample_times, float), 0.0, t_end))

    period = drive.period
    averaging = cfg.period_average and t_end >= 2.0 * period
    t_eval = sample_times
    if averaging:
        fine = np.linspace(t_end - 2.0 * period, t_end, 2 * 256 + 1)
        t_eval = np.unique(np.concatenate((sample_times, fine)))

    sol = solve_ivp(
        stepper.rhs,
        (0.0, t_end),
        rho0.matrix.reshape(-1),
        method="DOP853",
        t_eval=t_eval,
        rtol=1e-10,
        atol=1e-12,
    )
    if not sol.success:
        raise IntegrationAccuracyError(f"adaptive integration failed: {sol.message}")

    obs_vecs = _observable_vectors(hilbert)
    obs_names = list(obs_vecs)
    obs_mat = np.array([obs_vecs[name] for name in obs_names])
    ys = sol.y.T

    traces = np.abs(np.einsum("ij->i", ys.reshape(-1, d, d)[:, range(d), range(d)]).real - 1.0)
    trace_drift = float(traces.max())
    if trace_drift > _TRACE_TOL:
        raise IntegrationAccuracyError(
            f"trace drifted by {trace_drift:.3e} (> {_TRACE_TOL}); tighten tolerances"
        )
    rhos = ys.reshape(-1, d, d)
    herm_defect = float(np.max(np.abs(rhos - rhos.conj().transpose(0, 2, 1))))

    keep = np.isin(sol.t, sample_times)
    times = sol.t[keep]
    vals = (obs_mat @ ys[keep].T).T
    eig_idx = np.unique(np.round(np.linspace(0, times.size - 1, min(times.size, 33))).astype(int))
    eig_min = math.inf
    for i in eig_idx:
        rho = rhos[keep][i]
        w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
        eig_min = min(eig_min, float(w[0]))

    period_averages = None
    meta = {
        "t_end": t_end,
        "dt": cfg.dt,
        "delta_p": delta_p,
        "method": "adaptive",
        "nfev": int(sol.nfev),
    }
    if averaging:
        fine_mask = sol.t >= t_end - period - 1e-12 * t_end
        prev_mask = (sol.t >= t_end - 2.0 * period - 1e-12 * t_end) & ~fine_mask
        def window_avg(mask):
            tt = sol.t[mask]
            vv = (obs_mat @ ys[mask].T)
            return {
                name: (
                    np.trapezoid(vv[i], tt) / (tt[-1] - tt[0])
                    if name == "sigma"
                    else float(np.trapezoid(vv[i].real, tt) / (tt[-1] - tt[0]))
                )
                for i, name in enumerate(obs_names)
            }
        period_averages = window_avg(fine_mask)
        meta["prev_period_averages"] = window_avg(prev_mask)

    data = {name: vals[:, i] for i, name in enumerate(obs_names)}
    rho_f = rhos[-1]
    return OracleTrajectory(
        times=times,
        excited=data["excited"].real,
        sigma=data["sigma"],
        vib_occupation=data["vib_occupation"].real,
        momentum=data["momentum"].real,
        cav_occupation=data["cav_occupation"].real if "cav_occupation" in data else None,
        trace_drift=trace_drift,
        herm_defect=herm_defect,
        min_eigenvalue=eig_min,
        rho_final=DensityMatrix(matrix=0.5 * (rho_f + rho_f.conj().T)),
        period_averages=period_averages,
        meta=meta,
    )


def _refine_final_period(
    traj: OracleTrajectory,
    mol: MoleculeParams,
    drive: DriveParams,
    probe: ProbeParams,
    delta_p: float,
    hilbert: HilbertConfig,
    cav: CavityParams | None,
) -> float:
    """Re-run the final period at half step; return the relative change
    of the period-averaged excited population (step-doubling estimate)."""
    rho_start = traj.meta.get("rho_period_start")
    if rho_start is None or traj.period_averages is None:
        return math.nan
    d = hilbert.dim
    dt = traj.meta["dt"] / 2.0
    n_steps = 2 * traj.meta["steps_per_period"]
    terms = _superoperator_terms(mol, drive, probe.eta_p, delta_p, hilbert, cav)
    stepper = _Stepper(terms, drive.omega_d, delta_p, d)
    vec_exc = _observable_vectors(hilbert)["excited"]
    t0 = traj.meta["t_end"] - drive.period
    y = rho_start.reshape(-1).copy()
    total = 0.5 * dt * (vec_exc @ y).real
    for step in range(1, n_steps + 1):
        y = stepper.step(t0 + (step - 1) * dt, y, dt)
        w = 0.5 * dt if step == n_steps else dt
        total += w * (vec_exc @ y).real
    avg_half = total / (n_steps * dt)
    avg_full = traj.period_averages["excited"]
    scale = max(abs(avg_full), 1e-300)
    return abs(avg_half - avg_full) / scale


def spectrum_oracle(
    mol: MoleculeParams,
    drive: DriveParams,
    probe: ProbeParams,
    hilbert: HilbertConfig,
    cfg: IntegrationConfig,
    cav: CavityParams | None = None,
    threads: int = 1,
) -> Spectrum:
    """Absorption spectrum from brute-force integration: one independent
    run per probe detuning, reporting the period-averaged steady excited
    population.

    Raises ConvergenceError when the last two drive periods disagree by
    more than 1e-4 relative at any grid point (advising a longer t_end).
    Each point's step-doubling error estimate and the worst hygiene
    figures are recorded in meta.
    """
    detunings = np.asarray(probe.detuning_grid, dtype=float)
    if detunings.size == 0:
        raise ValueError("probe.detuning_grid must be non-empty")
    if probe.eta_p > 0.1 * mol.gamma:
        warnings.warn(
            "spectrum oracle assumes a weak probe eta_p well below gamma; "
            f"got eta_p/gamma = {probe.eta_p / mol.gamma:.3g}",
            ValidityWarning,
            stacklevel=2,
        )
    if cfg.t_end < 2.0 * drive.period:
        raise ValueError("t_end must cover at least two drive periods")
    # Snap dt to divide the drive period exactly: the averaging windows
    # then cover whole periods and the absolute period mean is unbiased.
    cap = _dt_cap(mol, drive, hilbert, cav)
    n_sub = max(
        int(round(drive.period / cfg.dt)), int(math.ceil(drive.period / cap))
    )
    cfg = IntegrationConfig(
        dt=drive.period / n_sub,
        t_end=cfg.t_end,
        method=cfg.method,
        period_average=True,
    )

    rho0 = DensityMatrix.ground(hilbert)

    def run_one(delta_p: float) -> tuple[float, dict]:
        traj = integrate(rho0, mol, drive, probe, delta_p, hilbert, cfg, cav=cav)
        avg = traj.period_averages["excited"]
        prev = traj.meta["prev_period_averages"]["excited"]
        rel_change = abs(avg - prev) / max(abs(avg), 1e-300)
        if rel_change > 1e-4:
            raise ConvergenceError(
                f"period-to-period change {rel_change:.3e} at delta_p = {delta_p:.6g} "
                "exceeds 1e-4; increase t_end"
            )
        doubling = math.nan
        if cfg.method == "rk4":
            doubling = _refine_final_period(
                traj, mol, drive, probe, delta_p, hilbert, cav
            )
        point_meta = {
            "trace_drift": traj.trace_drift,
            "herm_defect": traj.herm_defect,
            "min_eigenvalue": traj.min_eigenvalue,
            "period_change": rel_change,
            "step_doubling_rel_err": doubling,
        }
        return avg, point_meta

    if threads > 1 and detunings.size > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_one, detunings.tolist()))
    else:
        results = [run_one(dp) for dp in detunings.tolist()]

    values = np.array([v for v, _ in results])
    metas = [m for _, m in results]
    meta = {
        "kind": "oracle",
        "hilbert": {"n_vib": hilbert.n_vib, "n_cav": hilbert.n_cav,
                    "rotating_frame": hilbert.rotating_frame},
        "dt": cfg.dt,
        "t_end": cfg.t_end,
        "method": cfg.method,
        "trace_drift_max": max(m["trace_drift"] for m in metas),
        "herm_defect_max": max(m["herm_defect"] for m in metas),
        "min_eigenvalue": min(m["min_eigenvalue"] for m in metas),
        "period_change_max": max(m["period_change"] for m in metas),
        "step_doubling_rel_err_max": (
            max(m["step_doubling_rel_err"] for m in metas)
            if cfg.method == "rk4"
            else None
        ),
    }
    return Spectrum(detunings=detunings, values=values, meta=meta)


def displacement_overlap_oracle(lambda_: float, n: int, n_fock: int) -> float:
    """|<n|D+|0>|^2 with D = exp(lambda (b+ - b)) built by matrix
    exponential on an n_fock-level space.

    The independent check for the Franck-Condon weights: no factorials,
    no log-space tricks, just the displacement operator itself. Raises
    when the truncation is too small to hold the displaced state.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    lambda_ = float(lambda_)
    if not math.isfinite(lambda_):
        raise ValueError(f"lambda_ must be finite, got {lambda_!r}")
    min_fock = n + 10.0 * lambda_ ** 2 + 10.0
    if n_fock < min_fock:
        raise ValueError(
            f"n_fock = {n_fock} too small; need at least {math.ceil(min_fock)}"
        )
    b = _destroy(n_fock)
    disp = expm(lambda_ * (b.conj().T - b))
    defect = np.max(
        np.abs((disp.conj().T @ disp - np.eye(n_fock))[:, : n + 1])
    )
    if defect > 1e-8:
        raise ValueError(
            f"displacement unitarity defect {defect:.3e} on the lowest columns; "
            "increase n_fock"
        )
    amp = disp.conj().T[n, 0]
    return float(abs(amp) ** 2)
