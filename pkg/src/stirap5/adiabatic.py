"""Reduced dynamics in the two slow adiabatic states.

Under strong branch monitoring only the null eigenvector and the slowly
decaying monitoring-created eigenvector matter; the five-level problem then
reduces to two coupled amplitudes driven by a real nonadiabatic coupling
and an imaginary-eigenvalue decay term.  The final amplitudes determine the
branching ratio through an interference formula that is not a simple
mixture of the two states' individual ratios, which is what makes the
measurement strength a control knob.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import model, propagator
from .errors import DegenerateInputError, IntegrationError, ValidationError
from .model import PulseSet

REGIME_RATIO = 10.0


def coupling_O21(xi: float, pulses: PulseSet, gamma: float) -> float:
    """Nonadiabatic coupling between the two slow adiabatic states.

    ``-2*P*SB*(S3*B3 + S4*B4) / (N1*N2')`` per unit xi, where ``N1`` and
    ``N2'`` are the normalizations of the two closed-form eigenvectors.
    Equal to the overlap of the monitoring-created eigenvector with the
    xi-derivative of the null eigenvector (and to minus the transposed
    overlap), for the sign conventions used in :mod:`stirap5.eigen`.
    """
    if gamma <= 0:
        raise ValidationError(f"gamma must be > 0, got {gamma}")
    o21, _ = _coeff_factory(pulses, gamma, lenient=False)(float(xi))
    return o21


def _coeff_factory(pulses: PulseSet, gamma: float, lenient: bool = True):
    """Scalar evaluator for (O21, lambda2') against raw pulse arrays."""
    peaks, centers, coefs = pulses.as_arrays()
    pk = peaks.tolist()
    ct = centers.tolist()
    cf = coefs.tolist()

    def coeffs(xi: float):
        x = xi - ct[0]
        p = pk[0] * math.exp(-cf[0] * x * x)
        x = xi - ct[1]
        s3 = pk[1] * math.exp(-cf[1] * x * x)
        x = xi - ct[2]
        s4 = pk[2] * math.exp(-cf[2] * x * x)
        x = xi - ct[3]
        b3 = pk[3] * math.exp(-cf[3] * x * x)
        x = xi - ct[4]
        b4 = pk[4] * math.exp(-cf[4] * x * x)
        sb = s3 * b4 - s4 * b3
        kap = p * p * (b3 * b3 + b4 * b4) + sb * sb
        w1 = p * (s4 * b4 + s3 * b3)
        w3 = s3 * s4 * b4 - b3 * (p * p + s4 * s4)
        w4 = s3 * s4 * b3 - b4 * (p * p + s3 * s3)
        w5 = kap / gamma
        n1 = math.sqrt(kap)
        n2 = math.sqrt(w1 * w1 + w3 * w3 + w4 * w4 + w5 * w5)
        if n1 == 0.0 or n2 == 0.0:
            if lenient:
                # pulses numerically vanish here; the states are decoupled
                return 0.0, 0j
            raise DegenerateInputError(
                "slow-eigenvector normalizations vanish; the nonadiabatic "
                "coupling is undefined at this time")
        o21 = -2.0 * p * sb * (s3 * b3 + s4 * b4) / (n1 * n2)
        lam2 = -1j * kap * kap / (gamma * n2 * n2)
        return o21, lam2

    return coeffs


@dataclass
class TwoLevelResult:
    """Solution of the reduced dynamics on a uniform grid."""

    xi: np.ndarray
    c1: np.ndarray
    c2: np.ndarray

    @property
    def final_c1(self) -> complex:
        return complex(self.c1[-1])

    @property
    def final_c2(self) -> complex:
        return complex(self.c2[-1])

    @property
    def survival(self) -> np.ndarray:
        """Norm remaining in the two-state subspace, |c1|^2 + |c2|^2."""
        return np.abs(self.c1) ** 2 + np.abs(self.c2) ** 2


def integrate_two_level(pulses: PulseSet, gamma: float,
                        window: tuple[float, float] = model.DEFAULT_WINDOW,
                        tol: float = 1e-9, samples: int = 401) -> TwoLevelResult:
    """Integrate the reduced two-state equations over ``window``.

    Starts from unit amplitude on the null adiabatic state, which is where
    the initial level sits at early times.  ``d c1/dxi = O21*c2`` and
    ``d c2/dxi = -i*lam2'*c2 - O21*c1``, with the coupling and the decaying
    eigenvalue evaluated from the closed forms at every step.
    """
    pulses.validate()
    if gamma <= 0:
        raise ValidationError(f"gamma must be > 0, got {gamma}")
    coeffs = _coeff_factory(pulses, gamma)

    def rhs(xi, y):
        o21, lam2 = coeffs(xi)
        return (o21 * y[1], -1j * lam2 * y[1] - o21 * y[0])

    lo, hi = window
    t_eval = np.linspace(lo, hi, samples)
    sol = solve_ivp(rhs, (lo, hi), np.array([1.0 + 0j, 0j]), method="DOP853",
                    rtol=tol, atol=tol * 1e-3, t_eval=t_eval)
    if not sol.success:
        raise IntegrationError(f"two-level integration failed: {sol.message}",
                               xi=float(sol.t[-1]) if sol.t.size else lo)
    return TwoLevelResult(xi=sol.t, c1=sol.y[0], c2=sol.y[1])


def _final_branch_amplitudes(pulses: PulseSet, xi_end: float | None):
    if xi_end is None:
        b3 = pulses.branch3.peak
        b4 = pulses.branch4.peak
    else:
        _, _, _, b3, b4 = (float(v) for v in pulses.rabi(xi_end))
    if b3 == 0.0 and b4 == 0.0:
        raise DegenerateInputError("both branch amplitudes vanish; the "
                                   "adiabatic-state compositions are undefined")
    return b3, b4


def theory_populations(c1: complex, c2: complex, pulses: PulseSet,
                       xi_end: float | None = None) -> tuple[float, float]:
    """Final target populations implied by the two-state amplitudes.

    At late times the null state is proportional to ``(-B4, B3)`` on the
    target pair and the monitoring-created state to ``(-B3, -B4)``, so the
    superposition ``c1, c2`` lands on the targets with interfering weights.
    Uses peak branch amplitudes unless ``xi_end`` is given (the ratio is
    time-independent for the default shared branch envelope).
    """
    b3, b4 = _final_branch_amplitudes(pulses, xi_end)
    den = b3 * b3 + b4 * b4
    p3 = abs(c1 * b4 + c2 * b3) ** 2 / den
    p4 = abs(c1 * b3 - c2 * b4) ** 2 / den
    return float(p3), float(p4)


def branching_ratio_theory(c1: complex, c2: complex, pulses: PulseSet,
                           floor: float = propagator.BRANCHING_FLOOR) -> float:
    """Interference branching ratio from the final two-state amplitudes.

    ``(|c1|^2*B4^2 + |c2|^2*B3^2 + 2*Re(c1*conj(c2))*B3*B4) / (|c1|^2*B3^2
    + |c2|^2*B4^2 - 2*Re(c1*conj(c2))*B3*B4)`` with peak branch amplitudes;
    evaluated in complete-square form.  Returns ``inf`` when only the
    denominator is below ``floor`` (relative to the subspace norm) and
    ``nan`` when both are (indeterminate).
    """
    scale = abs(c1) ** 2 + abs(c2) ** 2
    if scale == 0.0:
        return math.nan
    p3, p4 = theory_populations(c1, c2, pulses)
    return propagator.branching_ratio(p3 / scale, p4 / scale, floor)


def classify_regime(pulses: PulseSet, gamma: float, ratio: float = REGIME_RATIO) -> str:
    """Which of the three measurement-strength regimes applies.

    Compares the squared Rabi scale (largest peak) against gamma:
    ``adiabatic`` when (peak)^2 exceeds ratio*gamma, ``zeno`` when it is
    below gamma/ratio, ``intermediate`` otherwise.  The intermediate regime
    is where the branching ratio is tunable.
    """
    if gamma < 0:
        raise ValidationError(f"gamma must be >= 0, got {gamma}")
    if ratio <= 1:
        raise ValidationError(f"ratio must be > 1, got {ratio}")
    if gamma == 0:
        return "adiabatic"
    o2 = pulses.max_peak ** 2
    if o2 > ratio * gamma:
        return "adiabatic"
    if o2 < gamma / ratio:
        return "zeno"
    return "intermediate"
