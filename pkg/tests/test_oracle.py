"""Brute-force Lindblad oracle: operator assembly, integrator
correctness against closed-form decays and steady states, hygiene
bookkeeping, convergence policing, and the displacement-overlap check."""
import math
import warnings

import numpy as np
import pytest

from irfloquet.params import (
    CavityParams,
    DriveParams,
    MoleculeParams,
    ProbeParams,
    ValidityWarning,
)
from irfloquet import oracle as orc
from irfloquet import cavity as cv
from irfloquet.oracle import (
    ConvergenceError,
    DensityMatrix,
    HilbertConfig,
    IntegrationConfig,
)
from irfloquet.specfun import fc_weight


def molecule(lambda_=0.0, gamma=0.02, gamma_phi=0.0, Gamma=0.05):
    return MoleculeParams(
        lambda_=lambda_, nu=1.0, gamma=gamma, gamma_phi=gamma_phi, Gamma=Gamma
    )


NO_DRIVE = DriveParams(eta_d=0.0, omega_d=1.0)
NO_PROBE = ProbeParams(eta_p=0.0, detuning_grid=(0.0,))


def probe_at(eta_p, grid=(0.0,)):
    return ProbeParams(eta_p=eta_p, detuning_grid=tuple(grid))


class TestConfigs:
    def test_dim_without_cavity(self):
        assert HilbertConfig(n_vib=6).dim == 12

    def test_dim_with_cavity(self):
        assert HilbertConfig(n_vib=4, n_cav=3).dim == 24

    def test_rejects_degenerate_vibrational_space(self):
        with pytest.raises(ValueError, match="n_vib"):
            HilbertConfig(n_vib=1)

    def test_dimension_guard(self):
        with pytest.raises(ValueError, match="guard"):
            HilbertConfig(n_vib=20, n_cav=10)
        big = HilbertConfig(n_vib=20, n_cav=10, allow_large=True)
        assert big.dim == 400

    def test_integration_config_validation(self):
        with pytest.raises(ValueError, match="dt"):
            IntegrationConfig(dt=0.0, t_end=10.0)
        with pytest.raises(ValueError, match="t_end"):
            IntegrationConfig(dt=0.1, t_end=-1.0)
        with pytest.raises(ValueError, match="method"):
            IntegrationConfig(dt=0.1, t_end=10.0, method="euler")


class TestDensityMatrix:
    def test_ground_state(self):
        rho = DensityMatrix.ground(HilbertConfig(n_vib=3))
        assert rho.matrix[0, 0] == 1.0
        assert np.count_nonzero(rho.matrix) == 1

    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix(matrix=np.diag([0.6, 0.6]))

    def test_rejects_non_hermitian(self):
        m = np.array([[1.0, 0.5], [0.0, 0.0]])
        with pytest.raises(ValueError, match="Hermitian"):
            DensityMatrix(matrix=m)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError, match="square"):
            DensityMatrix(matrix=np.ones((2, 3)) / 6.0)


class TestHamiltonian:
    def test_matches_hand_built_kron_form(self):
        """Rotating frame at time t: vibration, polaron coupling and
        shift, probe detuning, static probe, and the cosine drive, all
        rebuilt here from explicit Kronecker products."""
        mol = MoleculeParams(lambda_=0.3, nu=1.0, gamma=0.01, gamma_phi=0.0, Gamma=0.05)
        drive = DriveParams(eta_d=0.2, omega_d=0.9)
        hil = HilbertConfig(n_vib=4)
        t, delta_p, eta_p = 0.7, 0.25, 0.01

        n_vib = 4
        b1 = np.diag(np.sqrt(np.arange(1, n_vib)), 1).astype(complex)
        sig2 = np.array([[0, 1], [0, 0]], dtype=complex)
        b = np.kron(np.eye(2), b1)
        sig = np.kron(sig2, np.eye(n_vib))
        proj = sig.conj().T @ sig
        xb = b + b.conj().T
        want = (
            mol.nu * (b.conj().T @ b)
            - mol.lambda_ * mol.nu * (xb @ proj)
            + mol.lambda_**2 * mol.nu * proj
            - delta_p * proj
            + 1j * eta_p * (sig.conj().T - sig)
            + math.cos(drive.omega_d * t) * drive.eta_d * xb
        )
        got = orc.build_hamiltonian(t, mol, drive, probe_at(eta_p), delta_p, hil)
        assert np.allclose(got, want, atol=1e-14)

    def test_lab_frame_probe_oscillates(self):
        """Outside the probe-rotating frame the probe enters through
        explicitly time-dependent quadratures and the detuning shift is
        absent."""
        mol = molecule()
        hil = HilbertConfig(n_vib=2, rotating_frame=False)
        eta_p, delta_p = 0.01, 0.3
        h0 = orc.build_hamiltonian(0.0, mol, NO_DRIVE, probe_at(eta_p), delta_p, hil)
        quarter = math.pi / (2 * delta_p)
        h1 = orc.build_hamiltonian(quarter, mol, NO_DRIVE, probe_at(eta_p), delta_p, hil)
        sig2 = np.array([[0, 1], [0, 0]], dtype=complex)
        sig = np.kron(sig2, np.eye(2))
        assert np.allclose(h0 - h1, 1j * eta_p * (sig.conj().T - sig) - eta_p * (sig.conj().T + sig), atol=1e-12)

    def test_cavity_block_requires_matching_params(self):
        mol = molecule()
        with pytest.raises(ValueError, match="no CavityParams"):
            orc.build_hamiltonian(
                0.0, mol, NO_DRIVE, NO_PROBE, 0.0, HilbertConfig(n_vib=2, n_cav=2)
            )
        cav = CavityParams(g=0.01, kappa=0.1, omega_c=1.0)
        with pytest.raises(ValueError, match="n_cav is 0"):
            orc.build_hamiltonian(
                0.0, mol, NO_DRIVE, NO_PROBE, 0.0, HilbertConfig(n_vib=2), cav=cav
            )


class TestLindbladRHS:
    def test_preserves_trace_and_hermiticity(self):
        mol = MoleculeParams(lambda_=0.2, nu=1.0, gamma=0.02, gamma_phi=0.01, Gamma=0.05)
        drive = DriveParams(eta_d=0.1, omega_d=1.0)
        hil = HilbertConfig(n_vib=3)
        rng = np.random.default_rng(7)
        a = rng.normal(size=(hil.dim, hil.dim)) + 1j * rng.normal(size=(hil.dim, hil.dim))
        rho = a @ a.conj().T
        rho /= np.trace(rho)
        out = orc.lindblad_rhs(rho, 0.4, mol, drive, probe_at(0.01), 0.2, hil)
        assert abs(np.trace(out)) < 1e-14
        assert np.max(np.abs(out - out.conj().T)) < 1e-14

    def test_ground_state_is_stationary_without_fields(self):
        mol = molecule()
        hil = HilbertConfig(n_vib=3)
        rho = DensityMatrix.ground(hil).matrix
        out = orc.lindblad_rhs(rho, 0.0, mol, NO_DRIVE, NO_PROBE, 0.0, hil)
        assert np.max(np.abs(out)) == 0.0

    def test_rejects_wrong_shape(self):
        hil = HilbertConfig(n_vib=3)
        with pytest.raises(ValueError, match="shape"):
            orc.lindblad_rhs(np.eye(4), 0.0, molecule(), NO_DRIVE, NO_PROBE, 0.0, hil)


class TestIntegrate:
    def test_vibrational_quantum_decays_at_twice_gamma(self):
        """One vibron in the electronic ground state relaxes as
        exp(-2 Gamma t) under the rate convention used throughout."""
        mol = molecule(Gamma=0.05)
        hil = HilbertConfig(n_vib=3)
        m = np.zeros((hil.dim, hil.dim), dtype=complex)
        m[1, 1] = 1.0
        cfg = IntegrationConfig(dt=0.1, t_end=30.0, period_average=False)
        traj = orc.integrate(
            DensityMatrix(matrix=m), mol, NO_DRIVE, NO_PROBE, 0.0, hil, cfg
        )
        want = np.exp(-2.0 * mol.Gamma * traj.times)
        assert np.allclose(traj.vib_occupation, want, rtol=1e-8, atol=1e-12)
        assert np.max(np.abs(traj.excited)) < 1e-14

    def test_two_level_steady_state_matches_bloch_result(self):
        """Weak-probe steady excited population is
        (eta_p^2/gamma) gamma_tilde/(gamma_tilde^2 + delta_p^2)."""
        mol = molecule(gamma=0.02, gamma_phi=0.01)
        hil = HilbertConfig(n_vib=2)
        cfg = IntegrationConfig(dt=0.1, t_end=900.0, period_average=False)
        eta_p, delta_p = 1e-4, 0.015
        traj = orc.integrate(
            DensityMatrix.ground(hil), mol, NO_DRIVE, probe_at(eta_p), delta_p, hil, cfg
        )
        gt = mol.gamma_tilde
        want = eta_p**2 / mol.gamma * gt / (gt**2 + delta_p**2)
        assert traj.excited[-1] == pytest.approx(want, rel=1e-3)

    def test_lab_frame_reproduces_rotating_frame_population(self):
        """The excited population is invariant under the probe-frame
        rotation, so both integrations must agree pointwise."""
        mol = molecule(gamma=0.02)
        eta_p, delta_p = 1e-4, 0.3
        samples = np.array([20.0, 60.0, 120.0])
        runs = {}
        for frame in (True, False):
            hil = HilbertConfig(n_vib=2, rotating_frame=frame)
            cfg = IntegrationConfig(dt=0.05, t_end=120.0, period_average=False)
            runs[frame] = orc.integrate(
                DensityMatrix.ground(hil), mol, NO_DRIVE, probe_at(eta_p),
                delta_p, hil, cfg, sample_times=samples,
            )
        assert np.allclose(runs[True].excited, runs[False].excited, rtol=1e-8)

    def test_truncation_insensitive_in_small_lambda_regime(self):
        """Doubling the vibrational space moves the steady excited
        population by well under a percent when the coherent amplitude
        eta_d/(2 Gamma) stays small."""
        mol = MoleculeParams(lambda_=0.15, nu=1.0, gamma=0.04, gamma_phi=0.0, Gamma=0.04)
        drive = DriveParams(eta_d=0.04, omega_d=1.0)
        finals = []
        for n_vib in (4, 8):
            hil = HilbertConfig(n_vib=n_vib)
            cfg = IntegrationConfig(dt=0.1, t_end=250.0)
            traj = orc.integrate(
                DensityMatrix.ground(hil), mol, drive, probe_at(2e-3), 0.0, hil, cfg
            )
            finals.append(traj.period_averages["excited"])
        assert finals[0] == pytest.approx(finals[1], rel=1e-2)

    def test_hygiene_figures_stay_clean(self):
        mol = MoleculeParams(lambda_=0.2, nu=1.0, gamma=0.02, gamma_phi=0.0, Gamma=0.05)
        drive = DriveParams(eta_d=0.1, omega_d=1.0)
        hil = HilbertConfig(n_vib=4)
        cfg = IntegrationConfig(dt=0.05, t_end=100.0)
        traj = orc.integrate(
            DensityMatrix.ground(hil), mol, drive, probe_at(1e-3), 0.5, hil, cfg
        )
        assert traj.trace_drift < 1e-8
        assert traj.herm_defect < 1e-10
        assert traj.min_eigenvalue > -1e-6

    def test_period_averages_converge_in_steady_state(self):
        mol = molecule(gamma=0.05)
        drive = DriveParams(eta_d=0.05, omega_d=1.0)
        hil = HilbertConfig(n_vib=2)
        cfg = IntegrationConfig(dt=0.1, t_end=400.0)
        traj = orc.integrate(
            DensityMatrix.ground(hil), mol, drive, probe_at(1e-4), 0.0, hil, cfg
        )
        last = traj.period_averages["excited"]
        prev = traj.meta["prev_period_averages"]["excited"]
        assert last == pytest.approx(prev, rel=1e-6)

    def test_sample_times_snap_to_step_boundaries(self):
        mol = molecule()
        hil = HilbertConfig(n_vib=2)
        cfg = IntegrationConfig(dt=0.1, t_end=10.0, period_average=False)
        traj = orc.integrate(
            DensityMatrix.ground(hil), mol, NO_DRIVE, NO_PROBE, 0.0, hil, cfg,
            sample_times=np.array([0.234, 5.01, 9.87]),
        )
        steps = traj.times / 0.1
        assert np.allclose(steps, np.round(steps), atol=1e-9)

    def test_unresolved_fast_period_rejected(self):
        mol = molecule()
        hil = HilbertConfig(n_vib=2)
        cfg = IntegrationConfig(dt=0.5, t_end=10.0)
        with pytest.raises(ValueError, match="resolve"):
            orc.integrate(DensityMatrix.ground(hil), mol, NO_DRIVE, NO_PROBE, 0.0, hil, cfg)

    def test_wrong_initial_shape_rejected(self):
        hil = HilbertConfig(n_vib=3)
        small = DensityMatrix.ground(HilbertConfig(n_vib=2))
        cfg = IntegrationConfig(dt=0.1, t_end=10.0)
        with pytest.raises(ValueError, match="shape"):
            orc.integrate(small, molecule(), NO_DRIVE, NO_PROBE, 0.0, hil, cfg)


class TestSpectrumOracle:
    MOL = molecule(gamma=0.05, Gamma=0.05)
    HIL = HilbertConfig(n_vib=2)

    def test_two_level_lorentzian(self):
        """lambda = 0 reduces the oracle to a probed two-level system;
        three grid points against the weak-probe Lorentzian."""
        grid = (-0.04, 0.0, 0.06)
        cfg = IntegrationConfig(dt=0.1, t_end=300.0)
        spec = orc.spectrum_oracle(
            self.MOL, NO_DRIVE, probe_at(1e-3, grid), self.HIL, cfg
        )
        gt = self.MOL.gamma_tilde
        want = (1e-3) ** 2 / self.MOL.gamma * gt / (gt**2 + np.asarray(grid) ** 2)
        assert np.allclose(spec.values, want, rtol=1e-3)

    def test_meta_reports_hygiene_and_convergence(self):
        cfg = IntegrationConfig(dt=0.1, t_end=300.0)
        spec = orc.spectrum_oracle(
            self.MOL, NO_DRIVE, probe_at(1e-3, (0.0,)), self.HIL, cfg
        )
        meta = spec.meta
        assert meta["kind"] == "oracle"
        assert meta["trace_drift_max"] < 1e-8
        assert meta["herm_defect_max"] < 1e-10
        assert meta["min_eigenvalue"] > -1e-6
        assert meta["period_change_max"] < 1e-4
        assert meta["step_doubling_rel_err_max"] < 1e-6
        assert meta["hilbert"]["n_vib"] == 2

    def test_dt_snaps_to_divide_the_period(self):
        cfg = IntegrationConfig(dt=0.09, t_end=300.0)
        spec = orc.spectrum_oracle(
            self.MOL, NO_DRIVE, probe_at(1e-3, (0.0,)), self.HIL, cfg
        )
        period = 2.0 * math.pi
        ratio = period / spec.meta["dt"]
        assert ratio == pytest.approx(round(ratio), abs=1e-9)

    def test_adaptive_and_fixed_step_agree(self):
        vals = {}
        for method in ("rk4", "adaptive"):
            cfg = IntegrationConfig(dt=0.1, t_end=300.0, method=method)
            vals[method] = orc.spectrum_oracle(
                self.MOL, NO_DRIVE, probe_at(1e-3, (0.02,)), self.HIL, cfg
            ).values[0]
        assert vals["adaptive"] == pytest.approx(vals["rk4"], rel=1e-6)

    def test_threads_do_not_change_values(self):
        grid = (0.0, 0.05)
        cfg = IntegrationConfig(dt=0.1, t_end=300.0)
        one = orc.spectrum_oracle(self.MOL, NO_DRIVE, probe_at(1e-3, grid), self.HIL, cfg)
        two = orc.spectrum_oracle(
            self.MOL, NO_DRIVE, probe_at(1e-3, grid), self.HIL, cfg, threads=2
        )
        assert np.array_equal(one.values, two.values)

    def test_strong_probe_warned(self):
        cfg = IntegrationConfig(dt=0.1, t_end=300.0)
        with pytest.warns(ValidityWarning, match="weak probe"):
            orc.spectrum_oracle(
                self.MOL, NO_DRIVE, probe_at(0.02, (0.0,)), self.HIL, cfg
            )

    def test_short_window_rejected(self):
        cfg = IntegrationConfig(dt=0.1, t_end=6.0)
        with pytest.raises(ValueError, match="two drive periods"):
            orc.spectrum_oracle(
                self.MOL, NO_DRIVE, probe_at(1e-3, (0.0,)), self.HIL, cfg
            )

    def test_unconverged_run_raises(self):
        """A narrow line probed for three periods is nowhere near its
        steady state, and the period-to-period check must say so."""
        slow = molecule(gamma=0.001)
        cfg = IntegrationConfig(dt=0.1, t_end=3 * 2.0 * math.pi)
        with pytest.raises(ConvergenceError, match="increase t_end"):
            orc.spectrum_oracle(
                slow, NO_DRIVE, probe_at(5e-5, (0.0,)), self.HIL, cfg
            )

    def test_empty_grid_rejected(self):
        cfg = IntegrationConfig(dt=0.1, t_end=300.0)
        with pytest.raises(ValueError, match="non-empty"):
            orc.spectrum_oracle(
                self.MOL, NO_DRIVE, ProbeParams(eta_p=1e-3, detuning_grid=()), self.HIL, cfg
            )


class TestCavityOracle:
    def test_coherent_vibrational_occupation_matches_susceptibility_route(self):
        """Two-mode run on triple resonance: the steady vibrational
        occupation equals |beta_c|^2 from the dressed-susceptibility
        product.  Counter-rotating terms add an occupation floor of
        order g^2, so the drive is chosen with beta_c^2 far above it."""
        mol = MoleculeParams(lambda_=0.01, nu=1.0, gamma=0.02, gamma_phi=0.0, Gamma=0.02)
        cav = CavityParams(g=0.02, kappa=0.1, omega_c=1.0, eta_d_c=0.05)
        drive = DriveParams(eta_d=0.0, omega_d=1.0)
        hil = HilbertConfig(n_vib=3, n_cav=3)
        cfg = IntegrationConfig(dt=0.1, t_end=600.0)
        traj = orc.integrate(
            DensityMatrix.ground(hil), mol, drive, NO_PROBE, 0.0, hil, cfg, cav=cav
        )
        beta_mag, _ = cv.beta_c(mol, cav, omega_d=1.0)
        got = traj.period_averages["vib_occupation"]
        assert got == pytest.approx(beta_mag**2, rel=0.02)
        assert traj.cav_occupation is not None
        assert traj.trace_drift < 1e-8

    def test_cavity_requires_consistent_configuration(self):
        mol = molecule()
        hil = HilbertConfig(n_vib=2, n_cav=2)
        cfg = IntegrationConfig(dt=0.1, t_end=20.0)
        with pytest.raises(ValueError, match="CavityParams"):
            orc.integrate(DensityMatrix.ground(hil), mol, NO_DRIVE, NO_PROBE, 0.0, hil, cfg)


class TestDisplacementOverlapOracle:
    def test_matches_franck_condon_weights(self):
        for lam in (0.1, 0.5, 1.0):
            for n in range(9):
                got = orc.displacement_overlap_oracle(lam, n, n_fock=40)
                assert got == pytest.approx(fc_weight(n, lam), abs=1e-10)

    def test_rejects_small_truncation(self):
        with pytest.raises(ValueError, match="n_fock"):
            orc.displacement_overlap_oracle(1.0, 8, n_fock=12)

    def test_rejects_negative_index(self):
        with pytest.raises(ValueError, match="n must be"):
            orc.displacement_overlap_oracle(0.5, -1, n_fock=30)

    def test_rejects_nonfinite_displacement(self):
        with pytest.raises(ValueError, match="finite"):
            orc.displacement_overlap_oracle(math.inf, 0, n_fock=30)
