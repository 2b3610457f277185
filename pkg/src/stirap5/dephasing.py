"""Stochastic level-energy fluctuations and Monte Carlo ensembles.

Dephasing is modelled by zero-mean Gaussian fluctuations of the level
energies with exponential temporal correlation of amplitude ``delta`` and
correlation time ``tau`` (an Ornstein-Uhlenbeck process).  Levels 1, 2, 3
and 5 carry independent processes; level 4 copies level 3 so the target
degeneracy is maintained.  Paths are generated with the exact one-step
discretization, held piecewise-constant over each refresh interval of the
integrator, and seeded through a splittable counter scheme so ensembles
are reproducible independently of execution order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import propagator
from .errors import IntegrationError, StirapError, ValidationError
from .model import PulseSet, SimConfig

# Physical level index of each independent process; level 4 is a copy of 3.
INDEPENDENT_LEVELS = (1, 2, 3, 5)


def _seed_tuple(seed) -> tuple[int, ...]:
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


def level_generator(seed, level: int) -> np.random.Generator:
    """Deterministic per-(seed, level) random stream."""
    entropy = _seed_tuple(seed) + (level,)
    return np.random.default_rng(np.random.SeedSequence(entropy))


def ou_exact(delta: float, tau: float, n: int, step: float,
             rng: np.random.Generator) -> np.ndarray:
    """Exponentially correlated Gaussian samples at uniform spacing.

    Exact discretization: a stationary initial draw of standard deviation
    ``delta`` followed by ``x' = x*r + delta*sqrt(1-r^2)*z`` with
    ``r = exp(-step/tau)``, which reproduces the continuous-time
    autocovariance ``delta^2 * exp(-lag/tau)`` at every lag exactly.
    """
    if tau <= 0:
        raise ValidationError(
            f"correlation time must be > 0 (white-noise limit is not "
            f"defined for this kernel), got {tau}")
    if delta < 0:
        raise ValidationError(f"delta must be >= 0, got {delta}")
    if n < 1:
        raise ValidationError(f"need at least one sample, got {n}")
    if delta == 0.0:
        return np.zeros(n)
    r = math.exp(-step / tau)
    z = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = delta * z[0]
    q = delta * math.sqrt(1.0 - r * r)
    for i in range(1, n):
        x[i] = x[i - 1] * r + q * z[i]
    return x


@dataclass(frozen=True)
class NoisePath:
    """One realization of the level-energy fluctuations.

    ``grid`` holds the M+1 refresh-interval edges; ``values[m]`` is the
    five-level diagonal (units of 1/T) on ``[grid[m], grid[m+1])``, with
    column 4 equal to column 3 (level degeneracy maintained).
    """

    grid: np.ndarray
    values: np.ndarray
    seed: tuple = ()

    def diagonal(self) -> np.ndarray:
        return self.values

    def process(self, level: int) -> np.ndarray:
        """Sample series of a single level's fluctuation."""
        if level not in (1, 2, 3, 4, 5):
            raise ValidationError(f"level must be in 1..5, got {level}")
        return self.values[:, level - 1]


def generate_path(delta: float, tau: float, grid, seed) -> NoisePath:
    """Four independent exponentially correlated paths on ``grid``.

    ``grid`` are the interval edges (uniform spacing); each of levels
    1, 2, 3, 5 gets an independent process seeded by ``(seed..., level)``,
    and level 4 copies level 3.  The same seed reproduces the path
    bit-identically.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValidationError("noise grid needs at least two edges")
    steps = np.diff(grid)
    if np.any(steps <= 0):
        raise ValidationError("noise grid must be strictly increasing")
    step = float(steps.mean())
    n = grid.size - 1
    values = np.zeros((n, 5))
    for level in INDEPENDENT_LEVELS:
        rng = level_generator(seed, level)
        values[:, level - 1] = ou_exact(delta, tau, n, step, rng)
    values[:, 3] = values[:, 2]
    return NoisePath(grid=grid, values=values, seed=_seed_tuple(seed))


def make_noise_grid(config: SimConfig) -> np.ndarray:
    """Uniform refresh-interval edges spanning the configured window."""
    lo, hi = config.window
    n = max(1, int(math.ceil((hi - lo) / config.noise_step)))
    return np.linspace(lo, hi, n + 1)


@dataclass
class EnsembleResult:
    """Averages over stochastic-dephasing realizations.

    ``b_ratio_of_means`` divides the ensemble-mean final populations (this
    is the headline branching ratio); ``b_mean_of_ratios`` averages the
    per-realization ratios (recorded for comparison, excluding realizations
    whose P4 is below the branching floor).
    """

    xi: np.ndarray
    mean_populations: np.ndarray
    mean_norm: np.ndarray
    stderr_populations: np.ndarray
    final_p3: float
    final_p4: float
    final_p3_stderr: float
    final_p4_stderr: float
    b_ratio_of_means: float
    b_mean_of_ratios: float
    n_ratio_excluded: int
    n_realizations: int
    master_seed: int
    gamma: float
    n_failed: int = 0
    metadata: dict = field(default_factory=dict)

    @property
    def branching_ratio(self) -> float:
        return self.b_ratio_of_means


def ensemble_run(pulses: PulseSet, config: SimConfig, jobs: int | None = None) -> EnsembleResult:
    """Propagate ``config.n_realizations`` noisy trajectories and average.

    Each realization draws its own noise path from the master seed and the
    realization index, so results are independent of scheduling; the
    reduction runs on the collecting thread in realization order, making
    serial and parallel runs bit-identical.  Fails if more than 0.1% of
    realizations fail to integrate (failed ones are excluded and counted).
    """
    pulses.validate()
    config.validate()
    n = config.n_realizations
    delta, tau = config.delta, config.tau
    edges = make_noise_grid(config)
    workers = jobs if jobs is not None else (config.jobs or 1)

    def one(i: int):
        path = generate_path(delta, tau, edges, (config.master_seed, i))
        try:
            rec = propagator.propagate(pulses, config, noise=path)
        except IntegrationError as exc:
            return i, None, str(exc)
        return i, rec, None

    nxi = config.samples
    sum_p = np.zeros((nxi, 5))
    sumsq_p = np.zeros((nxi, 5))
    sum_norm = np.zeros(nxi)
    finals = []
    failures: list[str] = []

    def consume(result):
        i, rec, err = result
        if rec is None:
            failures.append(f"realization {i}: {err}")
            return
        sum_p[:] += rec.populations
        sumsq_p[:] += rec.populations ** 2
        sum_norm[:] += rec.norm
        finals.append(rec.final_populations.copy())

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for result in pool.map(one, range(n)):
                consume(result)
    else:
        for i in range(n):
            consume(one(i))

    if len(failures) > max(0.001 * n, 0):
        raise StirapError(
            f"{len(failures)} of {n} realizations failed; first: {failures[0]}")
    ngood = n - len(failures)

    mean_p = sum_p / ngood
    mean_norm = sum_norm / ngood
    if ngood > 1:
        var = np.maximum(sumsq_p / ngood - mean_p ** 2, 0.0) * ngood / (ngood - 1)
        stderr_p = np.sqrt(var / ngood)
    else:
        stderr_p = np.zeros_like(mean_p)

    finals_arr = np.array(finals)
    p3, p4 = float(mean_p[-1, 2]), float(mean_p[-1, 3])
    ratios = np.array([propagator.branching_ratio(f[2], f[3]) for f in finals_arr])
    good_ratios = ratios[np.isfinite(ratios)]
    return EnsembleResult(
        xi=np.linspace(config.window[0], config.window[1], nxi),
        mean_populations=mean_p,
        mean_norm=mean_norm,
        stderr_populations=stderr_p,
        final_p3=p3,
        final_p4=p4,
        final_p3_stderr=float(stderr_p[-1, 2]),
        final_p4_stderr=float(stderr_p[-1, 3]),
        b_ratio_of_means=propagator.branching_ratio(p3, p4),
        b_mean_of_ratios=float(good_ratios.mean()) if good_ratios.size else math.nan,
        n_ratio_excluded=int(ratios.size - good_ratios.size),
        n_realizations=n,
        master_seed=config.master_seed,
        gamma=config.gamma,
        n_failed=len(failures),
        metadata={"delta": delta, "tau": tau, "noise_step": config.noise_step,
                  "failures": failures},
    )
