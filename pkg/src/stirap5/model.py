"""Pulse envelopes and the five-level control Hamiltonian.

The level scheme is: initial state ``|1>`` pumped to intermediate ``|2>``,
which a Stokes pulse couples to two degenerate targets ``|3>`` and ``|4>``;
a branching pulse couples both targets to the branch state ``|5>``, whose
population is continuously monitored.  The monitoring enters as an
anti-Hermitian ``-i*gamma`` term on the branch-state diagonal.

Everything here is dimensionless: times are measured in units of the pulse
duration T (``xi = t/T``) and energies/rates in units of 1/T, so peak Rabi
frequencies are the products ``Omega*T`` and the measurement strength is
``Gamma*T``.  The coupling matrix is built with the Rabi frequencies
entering directly (no factor 1/2), which is the convention the closed-form
eigensystem in :mod:`stirap5.eigen` assumes.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Scenario windows are considered valid only if every active pulse has
# decayed below this fraction of its peak at both endpoints.
ENDPOINT_ENVELOPE_LIMIT = 1e-6

DEFAULT_WINDOW = (-5.0, 6.0)


@dataclass(frozen=True)
class GaussianPulse:
    """Gaussian envelope ``peak * exp(-shape*((xi-center)/width)**2)``.

    ``shape`` is the dimensionless exponent prefactor (0.5 for the wider
    branching pulse, 1.0 for pump and Stokes), ``center`` and ``width`` are
    in units of T.
    """

    peak: float
    center: float
    width: float = 1.0
    shape: float = 1.0

    def envelope(self, xi):
        u = (np.asarray(xi, dtype=float) - self.center) / self.width
        return np.exp(-self.shape * u * u)

    def value(self, xi):
        return self.peak * self.envelope(xi)


def _default_pump(peak: float) -> GaussianPulse:
    return GaussianPulse(peak=peak, center=1.0, width=1.0, shape=1.0)


def _default_stokes(peak: float) -> GaussianPulse:
    return GaussianPulse(peak=peak, center=0.0, width=1.0, shape=1.0)


def _default_branch(peak: float) -> GaussianPulse:
    return GaussianPulse(peak=peak, center=0.5, width=1.0, shape=0.5)


@dataclass(frozen=True)
class PulseSet:
    """The five pulses driving the system.

    Pump couples 1-2, the two Stokes components couple 2-3 and 2-4, and the
    two branching components couple 3-5 and 4-5.  Peak amplitudes are
    dimensionless ``Omega*T`` values and must be non-negative.
    """

    pump: GaussianPulse
    stokes3: GaussianPulse
    stokes4: GaussianPulse
    branch3: GaussianPulse
    branch4: GaussianPulse

    @classmethod
    def from_peaks(cls, pump: float, stokes3: float, stokes4: float,
                   branch3: float, branch4: float) -> "PulseSet":
        """Build a set with the canonical counter-intuitive envelope shapes.

        Stokes peaks at xi=0, the branching pulse (wider, shape 0.5) at
        xi=0.5 and the pump at xi=1.
        """
        ps = cls(
            pump=_default_pump(pump),
            stokes3=_default_stokes(stokes3),
            stokes4=_default_stokes(stokes4),
            branch3=_default_branch(branch3),
            branch4=_default_branch(branch4),
        )
        ps.validate()
        return ps

    def __iter__(self):
        return iter((self.pump, self.stokes3, self.stokes4,
                     self.branch3, self.branch4))

    @property
    def peaks(self) -> np.ndarray:
        return np.array([p.peak for p in self], dtype=float)

    @property
    def max_peak(self) -> float:
        return float(self.peaks.max())

    def validate(self) -> None:
        for name, p in zip(("pump", "stokes3", "stokes4", "branch3", "branch4"), self):
            if not np.isfinite(p.peak) or p.peak < 0:
                raise ValidationError(f"{name} peak must be >= 0, got {p.peak}")
            if p.width <= 0:
                raise ValidationError(f"{name} width must be > 0, got {p.width}")
            if p.shape <= 0:
                raise ValidationError(f"{name} envelope exponent prefactor must be > 0, "
                                      f"got {p.shape}")

    def rabi(self, xi):
        """Instantaneous Rabi values ``(P, S3, S4, B3, B4)`` at ``xi``."""
        return np.stack([p.value(xi) for p in self])

    def as_arrays(self):
        """Peak/center/exponent-coefficient arrays for the compiled stepper."""
        peaks = self.peaks
        centers = np.array([p.center for p in self], dtype=float)
        coefs = np.array([p.shape / p.width**2 for p in self], dtype=float)
        return peaks, centers, coefs


@dataclass(frozen=True)
class SimConfig:
    """Run parameters: measurement strength, window, tolerances, noise.

    ``gamma`` is the branch-state measurement strength Gamma*T, ``decay3``
    and ``decay4`` optional product-state amplitude decay rates gamma*T
    (lifetime T/5 corresponds to 5.0).  The dephasing block (``delta`` =
    Delta*T, ``tau`` = tau/T, ``n_realizations``, ``master_seed``) drives
    the stochastic-fluctuation ensembles.
    """

    gamma: float = 0.0
    decay3: float = 0.0
    decay4: float = 0.0
    window: tuple[float, float] = DEFAULT_WINDOW
    rtol: float = 1e-9
    atol: float = 1e-12
    max_step: float = 0.05
    samples: int = 2000
    delta: float = 0.0
    tau: float = 0.02
    noise_refresh: float | None = None
    n_realizations: int = 1
    master_seed: int = 0
    jobs: int | None = None

    def validate(self) -> None:
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise ValidationError(f"gamma must be >= 0, got {self.gamma}")
        for name in ("decay3", "decay4", "delta"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValidationError(f"{name} must be >= 0, got {v}")
        if self.tau <= 0:
            raise ValidationError(f"tau must be > 0, got {self.tau}")
        lo, hi = self.window
        if not lo < hi:
            raise ValidationError(f"window must satisfy start < end, got {self.window}")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValidationError("rtol and atol must be > 0")
        if self.max_step <= 0:
            raise ValidationError("max_step must be > 0")
        if self.samples < 2:
            raise ValidationError(f"samples must be >= 2, got {self.samples}")
        if self.noise_refresh is not None and self.noise_refresh <= 0:
            raise ValidationError("noise_refresh must be > 0")
        if self.n_realizations < 1:
            raise ValidationError(f"n_realizations must be >= 1, got {self.n_realizations}")
        if self.master_seed < 0:
            raise ValidationError(f"master_seed must be >= 0, got {self.master_seed}")
        if self.jobs is not None and self.jobs < 1:
            raise ValidationError(f"jobs must be >= 1, got {self.jobs}")

    @property
    def noise_step(self) -> float:
        """Refresh interval of the piecewise-constant dephasing diagonal."""
        return self.noise_refresh if self.noise_refresh is not None else self.tau / 10.0

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)


def validate_run(pulses: PulseSet, config: SimConfig) -> None:
    """Check the joint pulse/window invariant for a scenario run.

    Every pulse with a nonzero peak must have decayed below
    ``ENDPOINT_ENVELOPE_LIMIT`` of its peak at both window endpoints.
    """
    pulses.validate()
    config.validate()
    names = ("pump", "stokes3", "stokes4", "branch3", "branch4")
    for name, p in zip(names, pulses):
        if p.peak == 0:
            continue
        for edge in config.window:
            env = float(p.envelope(edge))
            if env >= ENDPOINT_ENVELOPE_LIMIT:
                raise ValidationError(
                    f"{name} envelope is {env:.3e} of peak at window edge "
                    f"xi={edge}; must be < {ENDPOINT_ENVELOPE_LIMIT:.0e}")


def envelopes(xi, pulses: PulseSet):
    """Instantaneous Rabi values ``(P, S3, S4, B3, B4)`` at ``xi``.

    Accepts a scalar or an array of times; returns an array whose leading
    axis indexes the five pulses.
    """
    return pulses.rabi(xi)


def omega_sb(xi, pulses: PulseSet):
    """The Stokes/branch cross term ``S3*B4 - S4*B3`` at ``xi``."""
    _, s3, s4, b3, b4 = pulses.rabi(xi)
    return s3 * b4 - s4 * b3


def omega_m2(xi, pulses: PulseSet):
    """Sum of squares of the five instantaneous Rabi values."""
    om = pulses.rabi(xi)
    return (om * om).sum(axis=0)


def coupling_matrix(xi: float, pulses: PulseSet) -> np.ndarray:
    """The real-symmetric coupling part of the Hamiltonian at ``xi``."""
    p, s3, s4, b3, b4 = (float(v) for v in pulses.rabi(xi))
    h = np.zeros((5, 5))
    h[0, 1] = h[1, 0] = p
    h[1, 2] = h[2, 1] = s3
    h[1, 3] = h[3, 1] = s4
    h[2, 4] = h[4, 2] = b3
    h[3, 4] = h[4, 3] = b4
    return h


def assemble_hamiltonian(xi: float, pulses: PulseSet, config: SimConfig,
                         dephasing_diag=None) -> np.ndarray:
    """Full 5x5 Hamiltonian (in units of 1/T) at time ``xi``.

    Real-symmetric laser couplings, ``-i*gamma`` on the branch-state
    diagonal, optional ``-i*decay`` terms on the two product states, and an
    optional real dephasing diagonal (five level-energy fluctuations; the
    caller is responsible for keeping entries 3 and 4 equal).
    """
    h = coupling_matrix(xi, pulses).astype(complex)
    h[4, 4] = -1j * config.gamma
    h[2, 2] += -1j * config.decay3
    h[3, 3] += -1j * config.decay4
    if dephasing_diag is not None:
        d = np.asarray(dephasing_diag, dtype=float)
        if d.shape != (5,):
            raise ValidationError(
                f"dephasing diagonal must have 5 entries, got shape {d.shape}")
        h[np.diag_indices(5)] += d
    return h
