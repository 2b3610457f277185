"""Built-in scenario presets.

``fig2a`` and ``fig2b`` are the two strong-monitoring branching-control
configurations (they differ only in the Stokes peak split); ``fig3`` is the
weak-monitoring dephasing-recovery configuration with its strong-noise
parameters and 1000-realization default.
"""

from __future__ import annotations

from .model import PulseSet, SimConfig

_PEAKS = {
    "fig2a": (10.0, 30.0, 70.0, 30.0, 50.0),
    "fig2b": (10.0, 60.0, 40.0, 30.0, 50.0),
    "fig3": (20.0, 50.0, 40.0, 15.0, 75.0),
}

PRESET_NAMES = tuple(_PEAKS)


def get_preset(name: str) -> tuple[PulseSet, SimConfig]:
    if name not in _PEAKS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
    pulses = PulseSet.from_peaks(*_PEAKS[name])
    if name == "fig3":
        config = SimConfig(delta=15.0, tau=0.02, n_realizations=1000)
    else:
        config = SimConfig()
    return pulses, config
