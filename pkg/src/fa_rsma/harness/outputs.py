"""CSV tables, SVG plots and the run manifest.

Every CSV starts with a ``# schema <name> v<version>`` line followed by a
header row. Floats are written with ``repr`` so that reading a table back
gives the identical rows.

Tables:

* ``results.csv``: one :class:`ResultRow` per (scheme, drop, power, S0, region).
* ``convergence.csv``: one :class:`TracePoint` per accepted or rejected subproblem step.
* ``rate_vs_region.csv``, ``rate_vs_power.csv``, ``rate_vs_s0.csv``: mean
  secrecy sum rate per scheme and sweep value over successful runs, with the
  number of runs averaged (``n``) and failed (``failed``).
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import platform
from importlib import metadata
from pathlib import Path

import numpy as np

from .experiment import ExperimentResult, ResultRow, TracePoint

SCHEMA_VERSION = 1
SUMMARY_COLUMNS = ("scheme", "csi", "value", "mean_secrecy", "n", "failed")
SWEEPS = {"region": "region_lambda", "power": "power_dbm", "s0": "s0_share"}


class OutputError(RuntimeError):
    pass


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(text: str, kind):
    if kind is bool:
        if text not in ("true", "false"):
            raise OutputError(f"bad boolean {text!r}")
        return text == "true"
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    return text


def write_table(path: Path, name: str, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(f"# schema {name} v{SCHEMA_VERSION}\n")
            w = csv.writer(fh)
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc


def write_records(path: Path, records, cls) -> None:
    names = [f.name for f in dataclasses.fields(cls)]
    write_table(path, cls.__name__, names, ([getattr(r, n) for n in names] for r in records))


def read_records(path: str | Path, cls) -> list:
    """Parse a table written by :func:`write_records`; checks the schema line and header."""
    fields = dataclasses.fields(cls)
    kinds = {f.name: {"bool": bool, "int": int, "float": float}.get(str(f.type), str) for f in fields}
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        if first != f"# schema {cls.__name__} v{SCHEMA_VERSION}":
            raise OutputError(f"{path}: unexpected schema line {first!r}")
        reader = csv.reader(fh)
        header = next(reader)
        if header != [f.name for f in fields]:
            raise OutputError(f"{path}: header {header} does not match {cls.__name__}")
        return [cls(**{n: _parse(v, kinds[n]) for n, v in zip(header, row)}) for row in reader]


def summarize(rows, sweep: str):
    """(scheme, csi, sweep value, mean secrecy, n ok, n failed) per scheme and sweep value."""
    col = SWEEPS[sweep]
    keys = sorted({(r.scheme, r.csi, getattr(r, col)) for r in rows})
    out = []
    for scheme, csi, value in keys:
        sel = [r for r in rows if r.scheme == scheme and r.csi == csi and getattr(r, col) == value]
        ok = [r.secrecy for r in sel if r.ok]
        out.append((scheme, csi, float(value), float(np.mean(ok)) if ok else math.nan, len(ok), len(sel) - len(ok)))
    return out


def _plot_summary(path: Path, table, xlabel: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for scheme in sorted({t[0] for t in table}):
        pts = sorted((t[2], t[3]) for t in table if t[0] == scheme)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=scheme)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("secrecy sum rate (bit/s/Hz)")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def _plot_convergence(path: Path, traces) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 3.5))
    runs = sorted({(t.scheme, t.drop, t.power_dbm, t.region_lambda, t.s0_share) for t in traces})
    for run in runs[:8]:
        pts = [t for t in traces if (t.scheme, t.drop, t.power_dbm, t.region_lambda, t.s0_share) == run and t.accepted]
        best = {}
        for t in pts:
            best[t.outer] = max(best.get(t.outer, -math.inf), t.objective)
        xs = sorted(best)
        ax.plot(xs, [best[x] for x in xs], marker=".", label=f"{run[0]} drop {run[1]}")
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("objective")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def versions() -> dict:
    out = {"python": platform.python_version()}
    for pkg in ("artifact", "numpy", "scipy", "cvxpy", "clarabel", "matplotlib"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def emit_outputs(result: ExperimentResult, out_dir: str | Path | None = None, plots: bool = True) -> dict:
    """Write every table, plot and the manifest; returns the manifest."""
    if not result.rows:
        raise OutputError("no results to emit (empty sweep)")
    out = Path(out_dir if out_dir is not None else result.config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc}") from exc
    files = {"results": "results.csv", "convergence": "convergence.csv"}
    write_records(out / files["results"], result.rows, ResultRow)
    write_records(out / files["convergence"], result.traces, TracePoint)
    labels = {"region": "region side (wavelengths)", "power": "transmit power (dBm)", "s0": "sensing threshold (share of best case)"}
    for sweep in SWEEPS:
        table = summarize(result.rows, sweep)
        name = f"rate_vs_{sweep}"
        write_table(out / f"{name}.csv", name, SUMMARY_COLUMNS, table)
        files[name] = f"{name}.csv"
        if plots:
            _plot_summary(out / f"{name}.svg", table, labels[sweep])
            files[name + "_plot"] = f"{name}.svg"
    if plots and result.traces:
        _plot_convergence(out / "convergence.svg", result.traces)
        files["convergence_plot"] = "convergence.svg"
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "config": result.config.to_dict(),
        "config_hash": result.config.digest(),
        "versions": versions(),
        "runs": len(result.rows),
        "failed_runs": len(result.failures),
        "failures": [f"{r.scheme} drop {r.drop} P={r.power_dbm} A0={r.region_lambda}: {r.status}" for r in result.failures],
        "files": files,
    }
    try:
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {out / 'manifest.json'}: {exc}") from exc
    return manifest
