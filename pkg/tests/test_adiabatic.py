import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stirap5 import adiabatic, eigen, propagator
from stirap5.errors import DegenerateInputError, ValidationError
from stirap5.model import PulseSet, SimConfig


def finite_difference_overlaps(xi, pulses, gamma, step=1e-5):
    """Independent oracle for the nonadiabatic coupling.

    Central differences of the two closed-form eigenvectors, combined both
    ways.  The two overlaps are antisymmetric because the vectors stay
    orthogonal at every time.
    """
    v1p = eigen.null_eigenvector(xi + step, pulses)
    v1m = eigen.null_eigenvector(xi - step, pulses)
    _, v2p = eigen.strong_limit_pair(xi + step, pulses, gamma)
    _, v2m = eigen.strong_limit_pair(xi - step, pulses, gamma)
    v1 = eigen.null_eigenvector(xi, pulses)
    _, v2 = eigen.strong_limit_pair(xi, pulses, gamma)
    fd_12 = complex(np.vdot(v1, (v2p - v2m) / (2 * step)))
    fd_21 = complex(np.vdot(v2, (v1p - v1m) / (2 * step)))
    return fd_12, fd_21


class TestCouplingO21:
    def test_vanishes_without_pump(self, fig2a):
        assert abs(adiabatic.coupling_O21(-4.5, fig2a, 750.0)) < 1e-3
        # ratio to a mid-pulse value shows the pump factor at work
        mid = adiabatic.coupling_O21(0.5, fig2a, 750.0)
        assert abs(adiabatic.coupling_O21(-4.5, fig2a, 750.0)) < 1e-3 * abs(mid)

    def test_vanishes_for_proportional_stokes_branch(self):
        # S3/S4 = B3/B4 keeps the cross term identically zero
        pulses = PulseSet.from_peaks(10, 30, 60, 15, 30)
        for xi in (-1.0, 0.0, 0.5, 1.0):
            assert adiabatic.coupling_O21(xi, pulses, 500.0) == 0.0

    def test_matches_finite_difference_oracle(self, fig2a):
        # the closed form equals the derivative overlap taken with the
        # monitoring-created state on the left; the opposite order flips
        # the sign (the vectors are orthogonal, so the overlap matrix is
        # antisymmetric)
        gamma = 750.0
        for xi in (0.2, 0.5, 0.8, 1.2):
            o21 = adiabatic.coupling_O21(xi, fig2a, gamma)
            fd_12, fd_21 = finite_difference_overlaps(xi, fig2a, gamma)
            assert abs(fd_12.imag) < 1e-8 and abs(fd_21.imag) < 1e-8
            assert fd_21.real == pytest.approx(o21, abs=1e-6)
            assert fd_12.real == pytest.approx(-o21, abs=1e-6)

    def test_finite_difference_on_dense_grid(self, fig2a):
        gamma = 750.0
        for xi in np.linspace(-0.5, 2.0, 26):
            o21 = adiabatic.coupling_O21(xi, fig2a, gamma)
            _, fd_21 = finite_difference_overlaps(xi, fig2a, gamma)
            assert abs(fd_21.real - o21) <= 1e-5

    def test_zero_gamma_rejected(self, fig2a):
        with pytest.raises(ValidationError):
            adiabatic.coupling_O21(0.5, fig2a, 0.0)

    def test_degenerate_normalization_rejected(self):
        pulses = PulseSet.from_peaks(0, 0, 0, 0, 0)
        with pytest.raises(DegenerateInputError):
            adiabatic.coupling_O21(0.5, pulses, 100.0)


class TestTwoLevel:
    def test_decoupled_when_cross_term_vanishes(self):
        pulses = PulseSet.from_peaks(10, 30, 60, 15, 30)
        res = adiabatic.integrate_two_level(pulses, 500.0)
        assert np.abs(res.c1 - 1.0).max() <= 1e-9
        assert np.abs(res.c2).max() <= 1e-9

    def test_adiabatic_regime_keeps_null_state(self, fig2a):
        # (peak)^2 far above gamma: negligible leakage, ratio stays B1
        res = adiabatic.integrate_two_level(fig2a, 30.0)
        assert abs(res.final_c2) <= 0.05
        b = adiabatic.branching_ratio_theory(res.final_c1, res.final_c2, fig2a)
        assert b == pytest.approx(2500.0 / 900.0, rel=0.05)

    def test_norm_conserved_without_decay(self, fig2a):
        # same coupled equations with the decay term removed: the
        # two-state norm must be constant
        from scipy.integrate import solve_ivp
        gamma = 750.0
        coeffs = adiabatic._coeff_factory(fig2a, gamma)

        def rhs(xi, y):
            o21, _ = coeffs(xi)
            return (o21 * y[1], -o21 * y[0])

        lo, hi = SimConfig().window
        sol = solve_ivp(rhs, (lo, hi), np.array([1.0 + 0j, 0j]),
                        method="DOP853", rtol=1e-10, atol=1e-13)
        norms = np.abs(sol.y[0]) ** 2 + np.abs(sol.y[1]) ** 2
        assert np.abs(norms - 1.0).max() <= 1e-8

    def test_matches_exact_propagation_fig2a(self, fig2a):
        gamma = 750.0
        res = adiabatic.integrate_two_level(fig2a, gamma)
        p3t, p4t = adiabatic.theory_populations(res.final_c1, res.final_c2, fig2a)
        rec = propagator.propagate(fig2a, SimConfig(gamma=gamma))
        assert p3t == pytest.approx(float(rec.final_populations[2]), abs=0.03)
        assert p4t == pytest.approx(float(rec.final_populations[3]), abs=0.03)

    def test_survival_decreases(self, fig2a):
        res = adiabatic.integrate_two_level(fig2a, 750.0)
        s = res.survival
        assert s[0] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(s) <= 1e-10)
        assert s[-1] < 0.5

    def test_gamma_zero_rejected(self, fig2a):
        with pytest.raises(ValidationError):
            adiabatic.integrate_two_level(fig2a, 0.0)


class TestBranchingRatioTheory:
    def test_pure_null_state_gives_b1(self, fig2a):
        assert adiabatic.branching_ratio_theory(1.0, 0.0, fig2a) == pytest.approx(
            2500.0 / 900.0, rel=1e-12)

    def test_pure_monitored_state_gives_b2(self, fig2a):
        assert adiabatic.branching_ratio_theory(0.0, 1.0, fig2a) == pytest.approx(
            900.0 / 2500.0, rel=1e-12)

    def test_interference_reaches_zero_and_infinity(self, fig2a):
        b3, b4 = 30.0, 50.0
        assert adiabatic.branching_ratio_theory(1.0, -b4 / b3, fig2a) == 0.0
        assert math.isinf(
            adiabatic.branching_ratio_theory(1.0, b3 / b4, fig2a))

    def test_indeterminate_flagged(self, fig2a):
        assert math.isnan(adiabatic.branching_ratio_theory(0.0, 0.0, fig2a))

    @given(phi=st.floats(0, 2 * math.pi),
           c1r=st.floats(-1, 1), c1i=st.floats(-1, 1),
           c2r=st.floats(-1, 1), c2i=st.floats(-1, 1))
    @settings(max_examples=60, deadline=None)
    def test_global_phase_invariance(self, phi, c1r, c1i, c2r, c2i):
        pulses = PulseSet.from_peaks(10, 30, 70, 30, 50)
        c1, c2 = complex(c1r, c1i), complex(c2r, c2i)
        b0 = adiabatic.branching_ratio_theory(c1, c2, pulses)
        rot = complex(math.cos(phi), math.sin(phi))
        b1 = adiabatic.branching_ratio_theory(c1 * rot, c2 * rot, pulses)
        if math.isnan(b0):
            assert math.isnan(b1)
        elif math.isinf(b0):
            assert math.isinf(b1) or b1 > 1e9
        else:
            assert b1 == pytest.approx(b0, rel=1e-9, abs=1e-12)

    @given(scale=st.floats(0.01, 100), phase=st.floats(0, 2 * math.pi))
    @settings(max_examples=60, deadline=None)
    def test_rescaling_invariance(self, scale, phase):
        pulses = PulseSet.from_peaks(10, 30, 70, 30, 50)
        c1, c2 = 0.3 + 0.4j, -0.2 + 0.1j
        z = scale * complex(math.cos(phase), math.sin(phase))
        b0 = adiabatic.branching_ratio_theory(c1, c2, pulses)
        b1 = adiabatic.branching_ratio_theory(c1 * z, c2 * z, pulses)
        assert b1 == pytest.approx(b0, rel=1e-9)

    def test_theory_populations_sum_to_survival(self, fig2a):
        c1, c2 = 0.5 + 0.1j, -0.3 + 0.2j
        p3, p4 = adiabatic.theory_populations(c1, c2, fig2a)
        assert p3 + p4 == pytest.approx(abs(c1) ** 2 + abs(c2) ** 2, rel=1e-12)


class TestClassifyRegime:
    def test_examples(self):
        strong_pulses = PulseSet.from_peaks(75, 0, 0, 0, 0)
        assert adiabatic.classify_regime(strong_pulses, 3.0) == "adiabatic"
        mid = PulseSet.from_peaks(10, 30, 70, 30, 50)
        assert adiabatic.classify_regime(mid, 900.0) == "intermediate"
        weak_pulses = PulseSet.from_peaks(10, 0, 0, 0, 0)
        assert adiabatic.classify_regime(weak_pulses, 1e5) == "zeno"

    def test_gamma_zero_is_adiabatic(self, fig2a):
        assert adiabatic.classify_regime(fig2a, 0.0) == "adiabatic"

    def test_custom_ratio(self, fig2a):
        # max peak 70: boundary at gamma = 4900/ratio
        assert adiabatic.classify_regime(fig2a, 2449.0, ratio=2.0) == "adiabatic"
        assert adiabatic.classify_regime(fig2a, 2451.0, ratio=2.0) == "intermediate"
