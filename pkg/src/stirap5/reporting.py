"""Deterministic output formatting: CSV, summaries, manifests, plot scripts.

All numbers are written with 12 significant digits in scientific notation
so artifacts diff and hash identically across runs and platforms.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path


def fmt(x) -> str:
    """12-significant-digit scientific notation; inf/nan spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.11e}"


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def write_summary(path, items) -> Path:
    """Ordered ``key: value`` lines; floats via :func:`fmt`."""
    path = Path(path)
    lines = []
    for key, value in items:
        if isinstance(value, float):
            value = fmt(value)
        lines.append(f"{key}: {value}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def write_manifest(path, manifest: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8", newline="\n")
    return path


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_trajectory_csv(record, path) -> Path:
    rows = ((record.xi[i], *record.populations[i], record.norm[i])
            for i in range(record.xi.size))
    return write_csv(path, ["xi", "P1", "P2", "P3", "P4", "P5", "norm"], rows)


def write_ensemble_csvs(result, mean_path, stderr_path):
    header = ["xi", "P1", "P2", "P3", "P4", "P5", "norm"]
    mean_rows = ((result.xi[i], *result.mean_populations[i], result.mean_norm[i])
                 for i in range(result.xi.size))
    # stderr of the norm series is not tracked; the norm column carries the
    # RMS of the per-level standard errors as a scale indicator
    err_rows = ((result.xi[i], *result.stderr_populations[i],
                 math.sqrt(float((result.stderr_populations[i] ** 2).sum())))
                for i in range(result.xi.size))
    return (write_csv(mean_path, header, mean_rows),
            write_csv(stderr_path, header, err_rows))


def write_sweep_csv(result, path) -> Path:
    header = ["gamma", "P3_exact", "P4_exact", "B_exact",
              "P3_theory", "P4_theory", "B_theory"]
    rows = ((r.gamma, r.p3_exact, r.p4_exact, r.b_exact,
             r.p3_theory, r.p4_theory, r.b_theory) for r in result.rows)
    return write_csv(path, header, rows)


SWEEP_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Render target yields versus measurement strength from sweep.csv.\"\"\"
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "sweep.csv"
cols = {}
with open(path) as fh:
    reader = csv.DictReader(fh)
    for row in reader:
        for k, v in row.items():
            cols.setdefault(k, []).append(float(v))

fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(cols["gamma"], cols["P3_theory"], "-", label="P3 theory")
ax.plot(cols["gamma"], cols["P4_theory"], "--", label="P4 theory")
ax.plot(cols["gamma"], cols["P3_exact"], "o", ms=3, label="P3 exact")
ax.plot(cols["gamma"], cols["P4_exact"], "s", ms=3, label="P4 exact")
ax.set_xscale("log")
ax.set_xlabel("Gamma*T")
ax.set_ylabel("final population")
ax.legend()
fig.tight_layout()
fig.savefig("sweep.png", dpi=150)
print("wrote sweep.png")
"""

ENSEMBLE_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Render mean target populations versus time from ensemble_mean.csv.\"\"\"
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "ensemble_mean.csv"
cols = {}
with open(path) as fh:
    reader = csv.DictReader(fh)
    for row in reader:
        for k, v in row.items():
            cols.setdefault(k, []).append(float(v))

fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(cols["xi"], cols["P3"], label="P3")
ax.plot(cols["xi"], cols["P4"], label="P4")
ax.set_xlabel("t/T")
ax.set_ylabel("mean population")
ax.legend()
fig.tight_layout()
fig.savefig("ensemble.png", dpi=150)
print("wrote ensemble.png")
"""

TRAJECTORY_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Render level populations versus time from trajectory.csv.\"\"\"
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "trajectory.csv"
cols = {}
with open(path) as fh:
    reader = csv.DictReader(fh)
    for row in reader:
        for k, v in row.items():
            cols.setdefault(k, []).append(float(v))

fig, ax = plt.subplots(figsize=(6, 4))
for name in ("P1", "P2", "P3", "P4", "P5"):
    ax.plot(cols["xi"], cols[name], label=name)
ax.plot(cols["xi"], cols["norm"], "k--", label="norm")
ax.set_xlabel("t/T")
ax.set_ylabel("population")
ax.legend()
fig.tight_layout()
fig.savefig("trajectory.png", dpi=150)
print("wrote trajectory.png")
"""
