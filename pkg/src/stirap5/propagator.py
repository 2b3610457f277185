"""Direct numerical integration of the five-level dynamics.

Produces population histories on a uniform output grid and the final
branching ratio between the two target states.  Norm is not restored after
absorption through the monitored branch state: the lost fraction is the
measured/broken-up population, so yields are reported relative to an
initial norm of one.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _stepper
from .errors import IntegrationError, ValidationError
from .model import PulseSet, SimConfig

BRANCHING_FLOOR = 1e-10


def basis_state(k: int) -> np.ndarray:
    """Unit amplitude on level ``k`` (1-based), zeros elsewhere."""
    if k not in (1, 2, 3, 4, 5):
        raise ValidationError(f"level index must be in 1..5, got {k}")
    psi = np.zeros(5, dtype=complex)
    psi[k - 1] = 1.0
    return psi


def populations(state) -> np.ndarray:
    """Squared magnitudes of the five amplitudes (no renormalization)."""
    state = np.asarray(state)
    return np.abs(state) ** 2


def branching_ratio(p3: float, p4: float, floor: float = BRANCHING_FLOOR) -> float:
    """P3/P4 with markers: ``inf`` when only P4 is below ``floor``,
    ``nan`` (indeterminate) when both are."""
    if p4 >= floor:
        return p3 / p4
    if p3 >= floor:
        return math.inf
    return math.nan


@dataclass
class TrajectoryRecord:
    """One propagated trajectory sampled on a uniform grid."""

    xi: np.ndarray
    populations: np.ndarray  # (len(xi), 5)
    norm: np.ndarray
    final_state: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def final_populations(self) -> np.ndarray:
        return self.populations[-1]

    def population(self, level: int) -> np.ndarray:
        return self.populations[:, level - 1]


def final_branching(record: TrajectoryRecord, floor: float = BRANCHING_FLOOR) -> float:
    """Final P3/P4 of a trajectory (with the inf/nan markers)."""
    p = record.final_populations
    return branching_ratio(float(p[2]), float(p[3]), floor)


def config_digest(pulses: PulseSet, config: SimConfig) -> str:
    """Short stable hash of the physical configuration."""
    payload = {
        "pulses": [(p.peak, p.center, p.width, p.shape) for p in pulses],
        "gamma": config.gamma,
        "decay": (config.decay3, config.decay4),
        "window": list(config.window),
        "rtol": config.rtol,
        "atol": config.atol,
        "samples": config.samples,
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def propagate(pulses: PulseSet, config: SimConfig, noise=None,
              initial=None) -> TrajectoryRecord:
    """Propagate over ``config.window`` from ``initial`` (default level 1).

    ``noise``, when given, is a :class:`stirap5.dephasing.NoisePath` whose
    grid spans the window; its piecewise-constant diagonal energies are
    advanced exactly inside each refresh interval.
    """
    pulses.validate()
    config.validate()
    if initial is None:
        psi0 = basis_state(1)
    else:
        psi0 = np.asarray(initial, dtype=complex).copy()
        if psi0.shape != (5,):
            raise ValidationError(f"initial state must have 5 amplitudes, "
                                  f"got shape {psi0.shape}")
        n = np.linalg.norm(psi0)
        if abs(n - 1.0) > 1e-8:
            raise ValidationError(f"initial state must be normalized, "
                                  f"|psi|={n:.6g}")

    lo, hi = (float(v) for v in config.window)
    out_xi = np.linspace(lo, hi, config.samples)

    if noise is None:
        edges = np.array([lo, hi])
        deph = np.zeros((1, 5))
    else:
        edges = np.asarray(noise.grid, dtype=float)
        deph = np.asarray(noise.diagonal(), dtype=float)
        if abs(edges[0] - lo) > 1e-12 or abs(edges[-1] - hi) > 1e-12:
            raise ValidationError(
                f"noise grid [{edges[0]}, {edges[-1]}] does not span the "
                f"window [{lo}, {hi}]")

    decay = np.array([0.0, 0.0, config.decay3, config.decay4, config.gamma])
    dvals = (-decay[None, :] - 1j * deph).astype(complex)

    peaks, centers, coefs = pulses.as_arrays()
    out, status, xi_fail, nsteps = _stepper.propagate_core(
        peaks, centers, coefs, dvals, edges, out_xi, psi0,
        config.rtol, config.atol, config.max_step)
    if status == _stepper.STATUS_STEP_UNDERFLOW:
        raise IntegrationError("step size underflow", xi=xi_fail)
    if status == _stepper.STATUS_NOT_FINITE:
        raise IntegrationError("non-finite amplitudes", xi=xi_fail)

    pops = np.abs(out) ** 2
    norm = np.sqrt(pops.sum(axis=1))
    meta = {
        "gamma": config.gamma,
        "decay3": config.decay3,
        "decay4": config.decay4,
        "rtol": config.rtol,
        "atol": config.atol,
        "window": list(config.window),
        "steps": int(nsteps),
        "config_digest": config_digest(pulses, config),
    }
    if noise is not None and getattr(noise, "seed", None) is not None:
        meta["noise_seed"] = noise.seed
    return TrajectoryRecord(xi=out_xi, populations=pops, norm=norm,
                            final_state=out[-1].copy(), metadata=meta)
