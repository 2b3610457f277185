import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stirap5 import model
from stirap5.errors import ValidationError
from stirap5.model import GaussianPulse, PulseSet, SimConfig


class TestEnvelopes:
    def test_pump_peaks_at_its_center(self, fig2a):
        assert model.envelopes(1.0, fig2a)[0] == pytest.approx(10.0, abs=0)

    def test_stokes_peaks_at_zero(self, fig2a):
        assert model.envelopes(0.0, fig2a)[1] == pytest.approx(30.0, abs=0)

    def test_branch_center_and_tail(self, fig2a):
        vals = model.envelopes(0.5, fig2a)
        assert vals[4] == pytest.approx(50.0, abs=0)
        assert model.envelopes(1.5, fig2a)[4] == pytest.approx(50.0 * math.exp(-0.5), rel=1e-14)

    def test_default_shapes(self, fig2a):
        xi = 0.73
        p, s3, s4, b3, b4 = model.envelopes(xi, fig2a)
        assert p == pytest.approx(10 * math.exp(-(xi - 1) ** 2), rel=1e-14)
        assert s3 == pytest.approx(30 * math.exp(-xi ** 2), rel=1e-14)
        assert b4 == pytest.approx(50 * math.exp(-0.5 * (xi - 0.5) ** 2), rel=1e-14)

    def test_vectorized_over_time(self, fig2a):
        xis = np.linspace(-2, 3, 7)
        vals = model.envelopes(xis, fig2a)
        assert vals.shape == (5, 7)
        assert vals[0] == pytest.approx([model.envelopes(x, fig2a)[0] for x in xis])

    def test_stokes_even_pump_even_about_one(self, fig2a):
        for xi in (0.3, 1.1, 2.4):
            assert model.envelopes(xi, fig2a)[1] == pytest.approx(
                model.envelopes(-xi, fig2a)[1], rel=1e-14)
            assert model.envelopes(1 + xi, fig2a)[0] == pytest.approx(
                model.envelopes(1 - xi, fig2a)[0], rel=1e-14)


class TestOmegaSB:
    def test_proportional_components_cancel(self):
        # shared envelopes make the cross term vanish identically
        pulses = PulseSet.from_peaks(10, 30, 60, 15, 30)
        for xi in np.linspace(-2, 3, 11):
            assert model.omega_sb(xi, pulses) == pytest.approx(0.0, abs=1e-12)

    def test_common_envelope_point_value(self):
        # all five envelopes equal one when every center coincides with xi
        pulses = PulseSet(
            pump=GaussianPulse(10, 0.0), stokes3=GaussianPulse(30, 0.0),
            stokes4=GaussianPulse(70, 0.0), branch3=GaussianPulse(30, 0.0),
            branch4=GaussianPulse(50, 0.0))
        assert model.omega_sb(0.0, pulses) == pytest.approx(30 * 50 - 70 * 30, abs=0)
        assert model.omega_sb(0.0, pulses) == -600.0

    def test_reduces_to_single_product(self):
        pulses = PulseSet.from_peaks(10, 30, 0, 0, 50)
        xi = 0.4
        _, s3, _, _, b4 = model.envelopes(xi, pulses)
        assert model.omega_sb(xi, pulses) == pytest.approx(s3 * b4, rel=1e-14)


class TestHamiltonian:
    def test_coupling_zero_pattern(self, fig2a):
        cfg = SimConfig(gamma=5.0)
        h = model.assemble_hamiltonian(0.7, fig2a, cfg)
        for i, j in ((0, 2), (0, 3), (0, 4), (1, 4)):
            assert h[i, j] == 0
            assert h[j, i] == 0

    def test_hermitian_when_unmonitored(self, fig2a):
        cfg = SimConfig()
        for xi in (-1.0, 0.2, 0.8, 2.5):
            h = model.assemble_hamiltonian(xi, fig2a, cfg)
            assert np.allclose(h, h.conj().T, atol=0)
            assert np.all(h.diagonal() == 0)
            assert np.all(h.imag == 0)

    def test_measurement_only_matrix(self):
        pulses = PulseSet.from_peaks(0, 0, 0, 0, 0)
        h = model.assemble_hamiltonian(0.0, pulses, SimConfig(gamma=750.0))
        expected = np.zeros((5, 5), complex)
        expected[4, 4] = -750j
        assert np.array_equal(h, expected)

    def test_decay_and_dephasing_terms(self, fig2a):
        cfg = SimConfig(gamma=2.0, decay3=0.5, decay4=0.25)
        deph = [1.0, -2.0, 3.0, 3.0, 0.5]
        h = model.assemble_hamiltonian(0.5, fig2a, cfg, dephasing_diag=deph)
        assert h[2, 2] == pytest.approx(3.0 - 0.5j)
        assert h[3, 3] == pytest.approx(3.0 - 0.25j)
        assert h[4, 4] == pytest.approx(0.5 - 2.0j)
        assert h[0, 0] == 1.0
        assert h[1, 1] == -2.0

    def test_rejects_wrong_length_dephasing(self, fig2a):
        with pytest.raises(ValidationError, match="5 entries"):
            model.assemble_hamiltonian(0.5, fig2a, SimConfig(),
                                       dephasing_diag=[1.0, 2.0, 3.0])

    def test_sum_of_squares_matches_trace(self, fig2a):
        for xi in (-0.5, 0.5, 1.5):
            h = model.assemble_hamiltonian(xi, fig2a, SimConfig())
            m2 = model.omega_m2(xi, fig2a)
            assert np.trace(h @ h).real == pytest.approx(2 * m2, rel=1e-12)


class TestValidation:
    def test_negative_peak_rejected(self):
        with pytest.raises(ValidationError, match="peak must be >= 0"):
            PulseSet.from_peaks(-1, 30, 70, 30, 50)

    def test_negative_gamma_rejected(self):
        with pytest.raises(ValidationError, match="gamma must be >= 0"):
            SimConfig(gamma=-1.0).validate()

    def test_bad_window_rejected(self):
        with pytest.raises(ValidationError, match="start < end"):
            SimConfig(window=(3.0, -3.0)).validate()

    def test_zero_tau_rejected(self):
        with pytest.raises(ValidationError, match="tau must be > 0"):
            SimConfig(tau=0.0).validate()

    def test_default_window_clears_envelope_limit(self, fig2a):
        model.validate_run(fig2a, SimConfig())

    def test_tight_window_fails_envelope_limit(self, fig2a):
        with pytest.raises(ValidationError, match="envelope"):
            model.validate_run(fig2a, SimConfig(window=(-2.0, 4.0)))

    @given(st.floats(min_value=0.0, max_value=1e3),
           st.floats(min_value=-3.0, max_value=4.0))
    def test_envelope_bounded_by_peak(self, peak, xi):
        pulse = GaussianPulse(peak=peak, center=0.5, width=1.0, shape=0.5)
        assert 0.0 <= pulse.value(xi) <= peak
