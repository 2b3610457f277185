import math

import numpy as np
import pytest
from scipy.integrate import simpson, solve_ivp

from stirap5 import dephasing, model, propagator, reporting
from stirap5.errors import ValidationError
from stirap5.model import GaussianPulse, PulseSet, SimConfig


class TestTrivialDynamics:
    def test_free_evolution_stays_put(self):
        pulses = PulseSet.from_peaks(0, 0, 0, 0, 0)
        rec = propagator.propagate(pulses, SimConfig())
        assert np.all(rec.population(1) == 1.0)
        assert np.all(rec.norm == 1.0)

    def test_pure_branch_state_decay(self):
        pulses = PulseSet.from_peaks(0, 0, 0, 0, 0)
        cfg = SimConfig(gamma=10.0, window=(0.0, 1.0), samples=200)
        rec = propagator.propagate(pulses, cfg,
                                   initial=propagator.basis_state(5))
        expected = np.exp(-2 * 10.0 * rec.xi)
        assert np.abs(rec.population(5) - expected).max() <= 1e-10

    def test_pure_product_state_decay(self):
        pulses = PulseSet.from_peaks(0, 0, 0, 0, 0)
        cfg = SimConfig(decay3=2.0, window=(0.0, 1.5), samples=100)
        rec = propagator.propagate(pulses, cfg,
                                   initial=propagator.basis_state(3))
        expected = np.exp(-2 * 2.0 * rec.xi)
        assert np.abs(rec.population(3) - expected).max() <= 1e-10

    def test_adiabatic_passage_reaches_dark_ratio(self, fig2a):
        rec = propagator.propagate(fig2a, SimConfig())
        b = propagator.final_branching(rec)
        assert b == pytest.approx(2500.0 / 900.0, rel=0.02)
        assert rec.population(2).max() <= 0.02


class TestPopulations:
    def test_basis_state(self):
        assert np.array_equal(propagator.populations(propagator.basis_state(1)),
                              [1, 0, 0, 0, 0])

    def test_balanced_superposition(self):
        psi = (propagator.basis_state(3) + propagator.basis_state(4)) / math.sqrt(2)
        assert propagator.populations(psi) == pytest.approx([0, 0, 0.5, 0.5, 0])

    def test_unnormalized_sums_to_squared_norm(self, rng):
        psi = rng.normal(size=5) + 1j * rng.normal(size=5)
        assert propagator.populations(psi).sum() == pytest.approx(
            np.linalg.norm(psi) ** 2, rel=1e-12)


class TestBranchingMarkers:
    def test_suppressed_p4_gives_infinity(self):
        assert math.isinf(propagator.branching_ratio(0.53, 1e-14))

    def test_equal_populations(self):
        assert propagator.branching_ratio(0.2, 0.2) == 1.0

    def test_plain_ratio(self):
        assert propagator.branching_ratio(0.22, 0.08) == pytest.approx(2.75)

    def test_indeterminate(self):
        assert math.isnan(propagator.branching_ratio(1e-14, 1e-14))


class TestNumericalHygiene:
    def test_norm_conserved_hermitian(self, fig2a):
        rec = propagator.propagate(fig2a, SimConfig())
        assert np.abs(rec.norm - 1.0).max() <= 1e-8

    def test_drift_shrinks_with_tolerance(self, fig2a):
        drifts = []
        for rtol in (1e-4, 1e-6, 1e-8):
            cfg = SimConfig(rtol=rtol, atol=1e-14, samples=51)
            rec = propagator.propagate(fig2a, cfg)
            drifts.append(np.abs(rec.norm - 1.0).max())
        assert drifts[0] > drifts[1] > drifts[2]
        assert drifts[0] <= 1e-5

    def test_norm_balance_identity(self, fig2a):
        cfg = SimConfig(gamma=20.0, decay3=2.0, decay4=1.0, samples=20001)
        rec = propagator.propagate(fig2a, cfg)
        loss_rate = (2 * 20.0 * rec.population(5)
                     + 2 * 2.0 * rec.population(3)
                     + 2 * 1.0 * rec.population(4))
        absorbed = simpson(loss_rate, x=rec.xi)
        assert rec.norm[-1] ** 2 - 1.0 == pytest.approx(-absorbed, abs=1e-6)

    def test_grid_refinement_convergence(self, fig2a):
        a = propagator.propagate(fig2a, SimConfig(gamma=750.0, rtol=1e-9))
        b = propagator.propagate(fig2a, SimConfig(gamma=750.0, rtol=1e-10))
        assert abs(a.final_populations[2] - b.final_populations[2]) <= 1e-6
        assert abs(a.final_populations[3] - b.final_populations[3]) <= 1e-6

    def test_time_reversal_returns_initial_state(self, fig2a):
        cfg = SimConfig(samples=11)
        fwd = propagator.propagate(fig2a, cfg)
        # mirror every envelope about the window midpoint and propagate the
        # conjugated final state; conjugating the result recovers the start
        lo, hi = cfg.window
        mirrored = PulseSet(
            **{name: GaussianPulse(p.peak, lo + hi - p.center, p.width, p.shape)
               for name, p in zip(("pump", "stokes3", "stokes4",
                                   "branch3", "branch4"), fig2a)})
        back = propagator.propagate(mirrored, cfg,
                                    initial=np.conj(fwd.final_state))
        assert np.abs(np.conj(back.final_state)
                      - propagator.basis_state(1)).max() <= 1e-6

    def test_deterministic_rerun(self, fig2a):
        a = propagator.propagate(fig2a, SimConfig(gamma=333.0))
        b = propagator.propagate(fig2a, SimConfig(gamma=333.0))
        assert np.array_equal(a.populations, b.populations)


class TestAgainstIndependentSolver:
    def test_matches_reference_integrator(self, fig2a):
        cfg = SimConfig(gamma=5.0, samples=40)

        def rhs(t, y):
            return -1j * (model.assemble_hamiltonian(t, fig2a, cfg) @ y)

        sol = solve_ivp(rhs, cfg.window, propagator.basis_state(1),
                        method="DOP853", rtol=1e-11, atol=1e-13,
                        t_eval=np.linspace(*cfg.window, cfg.samples))
        rec = propagator.propagate(fig2a, cfg)
        assert np.abs(rec.populations - np.abs(sol.y.T) ** 2).max() <= 1e-8

    def test_matches_reference_with_noise_path(self, fig3):
        cfg = SimConfig(gamma=2.0, samples=30, window=(-5.0, 6.0))
        grid = np.linspace(-5.0, 6.0, 12)
        path = dephasing.generate_path(4.0, 2.0, grid, seed=7)

        def rhs(t, y):
            m = min(np.searchsorted(grid, t, side="right") - 1, 10)
            h = model.assemble_hamiltonian(t, fig3, cfg,
                                           dephasing_diag=path.values[m])
            return -1j * (h @ y)

        sol = solve_ivp(rhs, cfg.window, propagator.basis_state(1),
                        method="DOP853", rtol=1e-11, atol=1e-13, max_step=0.5,
                        t_eval=np.linspace(*cfg.window, cfg.samples))
        rec = propagator.propagate(fig3, cfg, noise=path)
        assert np.abs(rec.populations - np.abs(sol.y.T) ** 2).max() <= 1e-7


class TestValidationAndExport:
    def test_unnormalized_initial_rejected(self, fig2a):
        with pytest.raises(ValidationError, match="normalized"):
            propagator.propagate(fig2a, SimConfig(),
                                 initial=np.array([2.0, 0, 0, 0, 0]))

    def test_wrong_shape_initial_rejected(self, fig2a):
        with pytest.raises(ValidationError, match="5 amplitudes"):
            propagator.propagate(fig2a, SimConfig(), initial=np.ones(3))

    def test_noise_grid_must_span_window(self, fig3):
        path = dephasing.generate_path(1.0, 0.1, np.linspace(-1, 1, 5), seed=0)
        with pytest.raises(ValidationError, match="span"):
            propagator.propagate(fig3, SimConfig(), noise=path)

    def test_csv_roundtrip(self, fig2a, tmp_path):
        rec = propagator.propagate(fig2a, SimConfig(gamma=10.0, samples=64))
        path = tmp_path / "trajectory.csv"
        reporting.write_trajectory_csv(rec, path)
        text = path.read_text().splitlines()
        assert text[0] == "xi,P1,P2,P3,P4,P5,norm"
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert data.shape == (64, 7)
        # 12 significant digits survive the round trip at full precision
        assert data[:, 1:6] == pytest.approx(rec.populations, rel=1e-10)
        assert data[-1, 0] == 6.0
