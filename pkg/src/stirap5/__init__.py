"""Five-level STIRAP with measurement-controlled branching.

A simulator and analysis toolkit for population transfer between two
degenerate target states when a fifth "branch" state is continuously
monitored: exact non-Hermitian propagation, closed-form and perturbative
eigensystems, the reduced two-state interference model, stochastic
dephasing ensembles, and scenario runners for the measurement-strength
sweeps and the dephasing-recovery study.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("stirap5")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .adiabatic import (branching_ratio_theory, classify_regime, coupling_O21,
                        integrate_two_level, theory_populations)
from .dephasing import EnsembleResult, NoisePath, ensemble_run, generate_path
from .eigen import (EigenSystem, analytic_eigensystem, branching_deviation,
                    hr_spectrum, null_eigenvector, numeric_oracle,
                    strong_limit_pair, weak_limit_spectrum)
from .errors import (DegenerateInputError, IntegrationError,
                     OracleConvergenceError, SingularDenominatorError,
                     StirapError, ValidationError)
from .experiments import (SweepResult, ZenoProbeResult, dephasing_study,
                          gamma_sweep, theory_exact_deviation,
                          zeno_limit_probe)
from .model import (GaussianPulse, PulseSet, SimConfig, assemble_hamiltonian,
                    envelopes, omega_m2, omega_sb, validate_run)
from .presets import PRESET_NAMES, get_preset
from .propagator import (TrajectoryRecord, basis_state, branching_ratio,
                         final_branching, populations, propagate)

__all__ = [
    "__version__",
    "GaussianPulse", "PulseSet", "SimConfig",
    "assemble_hamiltonian", "envelopes", "omega_m2", "omega_sb",
    "validate_run",
    "EigenSystem", "analytic_eigensystem", "branching_deviation",
    "hr_spectrum", "null_eigenvector", "numeric_oracle",
    "strong_limit_pair", "weak_limit_spectrum",
    "branching_ratio_theory", "classify_regime", "coupling_O21",
    "integrate_two_level", "theory_populations",
    "TrajectoryRecord", "basis_state", "branching_ratio", "final_branching",
    "populations", "propagate",
    "EnsembleResult", "NoisePath", "ensemble_run", "generate_path",
    "SweepResult", "ZenoProbeResult", "dephasing_study", "gamma_sweep",
    "theory_exact_deviation", "zeno_limit_probe",
    "PRESET_NAMES", "get_preset",
    "StirapError", "ValidationError", "DegenerateInputError",
    "SingularDenominatorError", "IntegrationError", "OracleConvergenceError",
]
