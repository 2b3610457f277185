"""Command-line front end.

Subcommands cover one deterministic propagation, the eigensystem at a
chosen time, the measurement-strength sweep, the stochastic-dephasing
ensembles, the frozen-transition limit probe and the theory-versus-exact
comparison.  Every run writes its artifacts plus a ``manifest.json`` that
contains the fully resolved configuration and can itself be passed back
via ``--config`` to reproduce the run byte for byte.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__, adiabatic, dephasing, eigen, experiments, model, presets, propagator, reporting
from .errors import StirapError, ValidationError
from .model import GaussianPulse, PulseSet, SimConfig

ENV_OUTPUT_ROOT = "STIRAP5_OUTDIR"

_PULSE_NAMES = ("pump", "stokes3", "stokes4", "branch3", "branch4")
_PULSE_KEYS = {"peak", "center", "width", "shape"}
_TOP_KEYS = {"scenario", "preset", "pulses", "peaks", "gamma", "decay3",
             "decay4", "window", "rtol", "atol", "max_step", "samples",
             "dephasing", "gamma_grid", "xi", "jobs"}
_DEPHASING_KEYS = {"delta", "tau", "refresh", "realizations", "seed"}
_GRID_KEYS = {"start", "stop", "points", "spacing"}

_SCENARIOS = ("propagate", "eigen", "sweep-gamma", "dephasing", "zeno-probe",
              "theory-vs-exact")


def config_to_dict(pulses: PulseSet, config: SimConfig, scenario: str,
                   extras: dict | None = None) -> dict:
    """Materialize every setting into the config-file schema."""
    d = {
        "scenario": scenario,
        "pulses": {
            name: {"peak": p.peak, "center": p.center,
                   "width": p.width, "shape": p.shape}
            for name, p in zip(_PULSE_NAMES, pulses)
        },
        "gamma": config.gamma,
        "decay3": config.decay3,
        "decay4": config.decay4,
        "window": [config.window[0], config.window[1]],
        "rtol": config.rtol,
        "atol": config.atol,
        "max_step": config.max_step,
        "samples": config.samples,
        "dephasing": {
            "delta": config.delta,
            "tau": config.tau,
            "refresh": config.noise_refresh,
            "realizations": config.n_realizations,
            "seed": config.master_seed,
        },
        "jobs": config.jobs,
    }
    if extras:
        d.update(extras)
    return d


def _reject_unknown(given: dict, allowed: set, context: str) -> None:
    unknown = sorted(set(given) - allowed)
    if unknown:
        raise ValidationError(f"unknown {context} key(s): {', '.join(unknown)}")


def _build_pulses(data: dict, base: PulseSet | None) -> PulseSet:
    defaults = {
        "pump": GaussianPulse(0.0, 1.0, 1.0, 1.0),
        "stokes3": GaussianPulse(0.0, 0.0, 1.0, 1.0),
        "stokes4": GaussianPulse(0.0, 0.0, 1.0, 1.0),
        "branch3": GaussianPulse(0.0, 0.5, 1.0, 0.5),
        "branch4": GaussianPulse(0.0, 0.5, 1.0, 0.5),
    }
    if base is not None:
        defaults = dict(zip(_PULSE_NAMES, base))
    built = {}
    for name in _PULSE_NAMES:
        spec = data.get(name)
        if spec is None:
            built[name] = defaults[name]
            continue
        if not isinstance(spec, dict):
            raise ValidationError(f"pulses.{name} must be a mapping")
        _reject_unknown(spec, _PULSE_KEYS, f"pulses.{name}")
        ref = defaults[name]
        built[name] = GaussianPulse(
            peak=float(spec.get("peak", ref.peak)),
            center=float(spec.get("center", ref.center)),
            width=float(spec.get("width", ref.width)),
            shape=float(spec.get("shape", ref.shape)),
        )
    _reject_unknown(data, set(_PULSE_NAMES), "pulses")
    ps = PulseSet(**built)
    ps.validate()
    return ps


def build_from_dict(data: dict):
    """Resolve a config mapping into (pulses, config, scenario, extras)."""
    if not isinstance(data, dict):
        raise ValidationError("configuration must be a key-value mapping")
    _reject_unknown(data, _TOP_KEYS, "configuration")

    pulses: PulseSet | None = None
    config = SimConfig()
    if "preset" in data:
        try:
            pulses, config = presets.get_preset(str(data["preset"]))
        except KeyError as exc:
            raise ValidationError(str(exc.args[0])) from exc

    if "peaks" in data and "pulses" in data:
        raise ValidationError("give either 'peaks' or 'pulses', not both")
    if "peaks" in data:
        peaks = data["peaks"]
        if not isinstance(peaks, (list, tuple)) or len(peaks) != 5:
            raise ValidationError("peaks must be a list of five values "
                                  "[pump, stokes3, stokes4, branch3, branch4]")
        pulses = PulseSet.from_peaks(*(float(v) for v in peaks))
    elif "pulses" in data:
        pulses = _build_pulses(data["pulses"], pulses)
    if pulses is None:
        raise ValidationError("no pulses configured: set 'preset', 'peaks' "
                              "or 'pulses'")

    changes = {}
    for key, attr in (("gamma", "gamma"), ("decay3", "decay3"),
                      ("decay4", "decay4"), ("rtol", "rtol"), ("atol", "atol"),
                      ("max_step", "max_step")):
        if key in data:
            changes[attr] = float(data[key])
    if "samples" in data:
        changes["samples"] = int(data["samples"])
    if "jobs" in data and data["jobs"] is not None:
        changes["jobs"] = int(data["jobs"])
    if "window" in data:
        w = data["window"]
        if not isinstance(w, (list, tuple)) or len(w) != 2:
            raise ValidationError("window must be [start, end]")
        changes["window"] = (float(w[0]), float(w[1]))
    if "dephasing" in data:
        dep = data["dephasing"]
        if not isinstance(dep, dict):
            raise ValidationError("dephasing must be a mapping")
        _reject_unknown(dep, _DEPHASING_KEYS, "dephasing")
        if "delta" in dep:
            changes["delta"] = float(dep["delta"])
        if "tau" in dep:
            changes["tau"] = float(dep["tau"])
        if "refresh" in dep and dep["refresh"] is not None:
            changes["noise_refresh"] = float(dep["refresh"])
        if "realizations" in dep:
            changes["n_realizations"] = int(dep["realizations"])
        if "seed" in dep:
            changes["master_seed"] = int(dep["seed"])
    config = config.replace(**changes)
    config.validate()

    extras = {}
    if "gamma_grid" in data:
        extras["gamma_grid"] = _parse_gamma_grid(data["gamma_grid"])
    if "xi" in data:
        extras["xi"] = float(data["xi"])
    scenario = data.get("scenario")
    if scenario is not None and scenario not in _SCENARIOS:
        raise ValidationError(f"unknown scenario {scenario!r}; expected one "
                              f"of {', '.join(_SCENARIOS)}")
    return pulses, config, scenario, extras


def _parse_gamma_grid(value) -> np.ndarray:
    if isinstance(value, (list, tuple)):
        grid = np.array([float(v) for v in value])
    elif isinstance(value, dict):
        _reject_unknown(value, _GRID_KEYS, "gamma_grid")
        start = float(value.get("start", experiments.SWEEP_GAMMA_RANGE[0]))
        stop = float(value.get("stop", experiments.SWEEP_GAMMA_RANGE[1]))
        points = int(value.get("points", experiments.SWEEP_POINTS))
        spacing = value.get("spacing", "log")
        if start <= 0 and spacing == "log":
            raise ValidationError("gamma_grid.start must be > 0 for log spacing")
        if points < 1:
            raise ValidationError("gamma_grid.points must be >= 1")
        if spacing == "log":
            grid = np.geomspace(start, stop, points)
        elif spacing == "linear":
            grid = np.linspace(start, stop, points)
        else:
            raise ValidationError("gamma_grid.spacing must be 'log' or 'linear'")
    else:
        raise ValidationError("gamma_grid must be a list or a mapping")
    if np.any(grid < 0):
        raise ValidationError("gamma grid values must be >= 0")
    return grid


def _load_config_file(path: Path):
    if not path.exists():
        raise ValidationError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = (f" at line {mark.line + 1}, column {mark.column + 1}"
                 if mark is not None else "")
        raise ValidationError(f"parse error in {path}{where}: {exc}") from exc
    if isinstance(data, dict) and data.get("tool") == "stirap5" and "config" in data:
        data = data["config"]  # a manifest reproduces its own run
    return build_from_dict(data)


def parse_config(path):
    """Load a config file (or manifest) into ``(pulses, config, scenario)``."""
    pulses, config, scenario, _ = _load_config_file(Path(path))
    return pulses, config, scenario


def _resolve(args) -> tuple[PulseSet, SimConfig, dict]:
    if args.config and args.preset:
        raise ValidationError("give either --preset or --config, not both")
    if args.config:
        pulses, config, _, extras = _load_config_file(Path(args.config))
    elif args.preset:
        try:
            pulses, config = presets.get_preset(args.preset)
        except KeyError as exc:
            raise ValidationError(str(exc.args[0])) from exc
        extras = {}
    else:
        raise ValidationError("provide --preset or --config")

    changes = {}
    if getattr(args, "gamma", None) is not None:
        changes["gamma"] = args.gamma
    if args.seed is not None:
        changes["master_seed"] = args.seed
    if args.realizations is not None:
        changes["n_realizations"] = args.realizations
    if args.jobs is not None:
        changes["jobs"] = args.jobs
    if args.tol is not None:
        changes["rtol"] = args.tol
    if args.samples is not None:
        changes["samples"] = args.samples
    if changes:
        config = config.replace(**changes)
    model.validate_run(pulses, config)
    return pulses, config, extras


def _outdir(args) -> Path:
    if args.out:
        out = Path(args.out)
    else:
        root = Path(os.environ.get(ENV_OUTPUT_ROOT, "runs"))
        out = root / args.command
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(outdir: Path, args, pulses, config, extras, outputs) -> Path:
    manifest = {
        "tool": "stirap5",
        "version": __version__,
        "scenario": args.command,
        "argv": args.raw_argv,
        "master_seed": config.master_seed,
        "config": config_to_dict(pulses, config, args.command, _json_extras(extras)),
        "outputs": sorted(outputs),
    }
    return reporting.write_manifest(outdir / "manifest.json", manifest)


def _json_extras(extras: dict) -> dict:
    out = {}
    for key, value in extras.items():
        if isinstance(value, np.ndarray):
            out[key] = [float(v) for v in value]
        else:
            out[key] = value
    return out


def _cmd_propagate(args) -> int:
    pulses, config, extras = _resolve(args)
    rec = propagator.propagate(pulses, config)
    outdir = _outdir(args)
    reporting.write_trajectory_csv(rec, outdir / "trajectory.csv")
    b = propagator.final_branching(rec)
    items = [("scenario", "propagate"), ("gamma", config.gamma)]
    items += [(f"final_P{k}", float(rec.final_populations[k - 1]))
              for k in range(1, 6)]
    items += [
        ("branching_ratio", b),
        ("max_P2", float(rec.population(2).max())),
        ("final_norm", float(rec.norm[-1])),
        ("steps", str(rec.metadata["steps"])),
    ]
    reporting.write_summary(outdir / "summary.txt", items)
    outputs = ["trajectory.csv", "summary.txt"]
    if args.plot:
        (outdir / "plot_trajectory.py").write_text(
            reporting.TRAJECTORY_PLOT_SCRIPT, encoding="utf-8")
        outputs.append("plot_trajectory.py")
    _write_manifest(outdir, args, pulses, config, extras, outputs)
    print(f"propagate: gamma={config.gamma:g} B={b:.6g} "
          f"P3={rec.final_populations[2]:.6g} P4={rec.final_populations[3]:.6g}")
    print(f"artifacts in {outdir}")
    return 0


def _cmd_eigen(args) -> int:
    pulses, config, extras = _resolve(args)
    xi = args.xi if args.xi is not None else extras.get("xi", 0.5)
    system = eigen.analytic_eigensystem(xi, pulses)
    hr = model.coupling_matrix(xi, pulses)
    residuals = system.residuals(hr)
    lines = [f"eigensystem at xi={xi:g} ({system.provenance})"]
    print(lines[0])
    for lam, res in zip(system.eigenvalues, residuals):
        line = (f"  lambda = {lam.real:+.9e} {lam.imag:+.9e}j   "
                f"residual = {res:.3e}")
        lines.append(line)
        print(line)
    if config.gamma > 0:
        full = eigen.numeric_oracle(
            model.assemble_hamiltonian(xi, pulses, config))
        lines.append(f"full-H oracle eigenvalues (gamma={config.gamma:g}):")
        print(lines[-1])
        for lam in full.eigenvalues:
            line = f"  lambda = {lam.real:+.9e} {lam.imag:+.9e}j"
            lines.append(line)
            print(line)
    outdir = _outdir(args)
    (outdir / "eigen.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _write_manifest(outdir, args, pulses, config, {**extras, "xi": xi},
                    ["eigen.txt"])
    return 0


def _sweep_summary_items(result, deviation):
    items = [("scenario", result.scenario),
             ("points", str(len(result.rows))),
             ("row_errors", str(sum(1 for r in result.rows if r.error)))]
    for target, est in sorted(result.minima.items()):
        items += [
            (f"min_{target}_gamma", est.gamma),
            (f"min_{target}_P3", est.p3),
            (f"min_{target}_P4", est.p4),
            (f"min_{target}_B", est.b),
        ]
    items += [
        ("theory_dev_range", f"[{deviation['gamma_lo']:g}, {deviation['gamma_hi']:g}]"),
        ("theory_dev_points", str(deviation["points"])),
        ("theory_max_dev_P3", deviation["max_dev_p3"]),
        ("theory_max_dev_P4", deviation["max_dev_p4"]),
    ]
    return items


def _cmd_sweep(args) -> int:
    pulses, config, extras = _resolve(args)
    gammas = extras.get("gamma_grid")
    result = experiments.gamma_sweep(pulses, config, gammas=gammas,
                                     refine=True, jobs=config.jobs)
    outdir = _outdir(args)
    reporting.write_sweep_csv(result, outdir / "sweep.csv")
    deviation = experiments.theory_exact_deviation(result)
    reporting.write_summary(outdir / "summary.txt",
                            _sweep_summary_items(result, deviation))
    outputs = ["sweep.csv", "summary.txt"]
    if args.plot:
        (outdir / "plot_sweep.py").write_text(reporting.SWEEP_PLOT_SCRIPT,
                                              encoding="utf-8")
        outputs.append("plot_sweep.py")
    _write_manifest(outdir, args, pulses, config, extras, outputs)
    for target, est in sorted(result.minima.items()):
        print(f"min {target}: gamma={est.gamma:.4g} P3={est.p3:.4g} "
              f"P4={est.p4:.4g} B={est.b:.4g}")
    print(f"artifacts in {outdir}")
    return 0


def _cmd_theory_vs_exact(args) -> int:
    pulses, config, extras = _resolve(args)
    gammas = extras.get("gamma_grid")
    result = experiments.gamma_sweep(pulses, config, gammas=gammas,
                                     refine=False, jobs=config.jobs)
    outdir = _outdir(args)
    header = ["gamma", "P3_exact", "P3_theory", "dP3",
              "P4_exact", "P4_theory", "dP4"]
    rows = ((r.gamma, r.p3_exact, r.p3_theory, abs(r.p3_exact - r.p3_theory),
             r.p4_exact, r.p4_theory, abs(r.p4_exact - r.p4_theory))
            for r in result.rows)
    reporting.write_csv(outdir / "comparison.csv", header, rows)
    deviation = experiments.theory_exact_deviation(result)
    reporting.write_summary(
        outdir / "summary.txt",
        [("scenario", "theory-vs-exact"),
         ("points", str(len(result.rows))),
         ("range", f"[{deviation['gamma_lo']:g}, {deviation['gamma_hi']:g}]"),
         ("max_dev_P3", deviation["max_dev_p3"]),
         ("max_dev_P4", deviation["max_dev_p4"])])
    _write_manifest(outdir, args, pulses, config, extras,
                    ["comparison.csv", "summary.txt"])
    print(f"max |exact-theory| in range: P3 {deviation['max_dev_p3']:.4g}, "
          f"P4 {deviation['max_dev_p4']:.4g}")
    print(f"artifacts in {outdir}")
    return 0


def _ensemble_summary_items(res):
    return [
        ("scenario", "dephasing"),
        ("gamma", res.gamma),
        ("realizations", str(res.n_realizations)),
        ("master_seed", str(res.master_seed)),
        ("failed_realizations", str(res.n_failed)),
        ("final_P3_mean", res.final_p3),
        ("final_P4_mean", res.final_p4),
        ("final_P3_stderr", res.final_p3_stderr),
        ("final_P4_stderr", res.final_p4_stderr),
        ("B_ratio_of_means", res.b_ratio_of_means),
        ("B_mean_of_ratios", res.b_mean_of_ratios),
        ("ratio_excluded", str(res.n_ratio_excluded)),
    ]


def _cmd_dephasing(args) -> int:
    pulses, config, extras = _resolve(args)
    if args.gammas:
        try:
            gammas = [float(v) for v in args.gammas.split(",")]
        except ValueError as exc:
            raise ValidationError(f"bad --gammas list: {args.gammas!r}") from exc
    else:
        gammas = [config.gamma]
    outdir = _outdir(args)
    outputs = []
    table = []
    for g in gammas:
        res = dephasing.ensemble_run(pulses, config.replace(gamma=g))
        sub = outdir if len(gammas) == 1 else outdir / f"gamma_{g:g}"
        sub.mkdir(parents=True, exist_ok=True)
        prefix = "" if len(gammas) == 1 else f"gamma_{g:g}/"
        reporting.write_ensemble_csvs(res, sub / "ensemble_mean.csv",
                                      sub / "ensemble_stderr.csv")
        reporting.write_summary(sub / "summary.txt",
                                _ensemble_summary_items(res))
        outputs += [prefix + "ensemble_mean.csv", prefix + "ensemble_stderr.csv",
                    prefix + "summary.txt"]
        if args.plot:
            (sub / "plot_ensemble.py").write_text(
                reporting.ENSEMBLE_PLOT_SCRIPT, encoding="utf-8")
            outputs.append(prefix + "plot_ensemble.py")
        table.append((g, res.b_ratio_of_means, res.final_p3, res.final_p4))
        print(f"gamma={g:g}: B={res.b_ratio_of_means:.4g} "
              f"P3={res.final_p3:.4g} P4={res.final_p4:.4g} "
              f"(N={res.n_realizations}, seed={res.master_seed})")
    if len(gammas) > 1:
        reporting.write_csv(outdir / "study_summary.csv",
                            ["gamma", "B", "P3", "P4"], table)
        outputs.append("study_summary.csv")
    _write_manifest(outdir, args, pulses, config,
                    {**extras, "gammas": [float(g) for g in gammas]}, outputs)
    print(f"artifacts in {outdir}")
    return 0


def _cmd_zeno_probe(args) -> int:
    pulses, config, extras = _resolve(args)
    result = experiments.zeno_limit_probe(pulses, config)
    outdir = _outdir(args)
    reporting.write_csv(outdir / "zeno.csv", ["gamma", "B"],
                        zip(result.gammas, result.b_values))
    reporting.write_summary(
        outdir / "summary.txt",
        [("scenario", "zeno-probe"),
         ("criterion_gamma", result.criterion_gamma),
         ("B_at_criterion", result.b_at_criterion),
         ("B_four_level_oracle", result.b_four_level),
         ("B_stokes_formula", result.b_stokes_formula),
         ("B_extrapolated", result.b_extrapolated)])
    _write_manifest(outdir, args, pulses, config, extras,
                    ["zeno.csv", "summary.txt"])
    print(f"B at gamma={result.criterion_gamma:g}: {result.b_at_criterion:.5g} "
          f"(four-level oracle {result.b_four_level:.5g}, "
          f"formula {result.b_stokes_formula:.5g})")
    print(f"artifacts in {outdir}")
    return 0


_COMMANDS = {
    "propagate": _cmd_propagate,
    "eigen": _cmd_eigen,
    "sweep-gamma": _cmd_sweep,
    "dephasing": _cmd_dephasing,
    "zeno-probe": _cmd_zeno_probe,
    "theory-vs-exact": _cmd_theory_vs_exact,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stirap5",
        description="Five-level STIRAP with measurement-controlled branching")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", choices=presets.PRESET_NAMES,
                        help="built-in scenario configuration")
    common.add_argument("--config", metavar="PATH",
                        help="YAML config file or a previous manifest.json")
    common.add_argument("--gamma", type=float, default=None,
                        help="measurement strength Gamma*T")
    common.add_argument("--seed", type=int, default=None,
                        help="master seed for stochastic runs")
    common.add_argument("-n", "--realizations", type=int, default=None,
                        help="ensemble size")
    common.add_argument("--jobs", type=int, default=None,
                        help="worker threads (default: all cores)")
    common.add_argument("--out", metavar="DIR", default=None,
                        help=f"output directory (default: ${ENV_OUTPUT_ROOT} "
                             "or ./runs, plus the subcommand name)")
    common.add_argument("--tol", type=float, default=None,
                        help="integrator relative tolerance")
    common.add_argument("--samples", type=int, default=None,
                        help="output samples per window")
    common.add_argument("--plot", action="store_true",
                        help="emit matplotlib plot scripts next to the CSVs")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("propagate", parents=[common],
                   help="one deterministic propagation")
    p_eigen = sub.add_parser("eigen", parents=[common],
                             help="eigensystem at a chosen time")
    p_eigen.add_argument("--xi", type=float, default=None,
                         help="evaluation time t/T (default 0.5)")
    sub.add_parser("sweep-gamma", parents=[common],
                   help="exact+theory yields over a measurement-strength grid")
    p_deph = sub.add_parser("dephasing", parents=[common],
                            help="stochastic-dephasing ensemble(s)")
    p_deph.add_argument("--gammas", default=None,
                        help="comma-separated list, one ensemble each")
    sub.add_parser("zeno-probe", parents=[common],
                   help="approach to the frozen-transition limit")
    sub.add_parser("theory-vs-exact", parents=[common],
                   help="pointwise reduced-model deviation table")
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.raw_argv = argv
    try:
        return _COMMANDS[args.command](args)
    except StirapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
