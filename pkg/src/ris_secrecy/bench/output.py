"""CSV and figure output for result tables."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .runner import PRIMARY_METRIC, ResultTable, Row

HEADER = ("family", "x", "method", "seed", "metric", "value")

AXIS_LABEL = {
    "rate_vs_power": "transmit power P (dBm)",
    "rate_vs_M": "number of reflecting elements M",
    "rate_vs_R": "element resistance R (ohm)",
    "runtime_vs_M": "number of reflecting elements M",
    "convergence_trace": "outer iteration",
    "stepsize_compare": "fixed step size (0 = adaptive)",
    "cpdm_vs_M": "number of reflecting elements M",
    "cpdm_runtime": "number of reflecting elements M",
}
METRIC_LABEL = {
    "C_sec": "secrecy rate (bit/s/Hz)",
    "n_evals": "objective evaluations",
    "evals_to_target": "evaluations to reach target",
    "wall_time": "wall time (s)",
}


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write(path, family, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for r in rows:
            w.writerow([family, _fmt(r.x), r.method, _fmt(r.seed), r.metric, _fmt(r.value)])


def ordered_rows(table: ResultTable) -> list:
    """Data rows followed, per ``(x, method)``, by their mean and stderr rows."""
    aggs = table.aggregates()
    out = []
    for x in table.sweep:
        for m in table.methods:
            out.extend(r for r in table.rows if r.x == x and r.method == m)
            out.extend(r for r in aggs if r.x == x and r.method == m)
    return out


def emit_csv(table: ResultTable, path) -> None:
    """Write ``family,x,method,seed,metric,value`` rows in a fixed order.

    Floats are written with ``repr``, so values round-trip exactly and a
    rerun of the same config produces identical bytes.
    """
    _write(path, table.family, ordered_rows(table))


def emit_diagnostics(table: ResultTable, path) -> None:
    _write(path, table.family, table.diagnostics)


def emit_timings(table: ResultTable, path) -> None:
    """Wall-clock rows; these change between runs and are kept out of the main CSV."""
    _write(path, table.family, table.timings)


def _parse(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path) -> ResultTable:
    """Inverse of :func:`emit_csv` (aggregate rows are dropped; they are derived)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != HEADER:
            raise ValueError(f"unexpected header {header}")
        family, sweep, methods, rows = None, [], [], []
        for fam, x, method, seed, metric, value in reader:
            family = fam
            if seed in ("mean", "stderr"):
                continue
            xv = _parse(x)
            if xv not in sweep:
                sweep.append(xv)
            if method not in methods:
                methods.append(method)
            rows.append(Row(xv, method, int(seed), metric, value if metric == "failure" else float(value)))
    return ResultTable(family or "", tuple(sweep), tuple(methods), rows)


def plot_series(table: ResultTable, metric: str | None = None) -> dict:
    """``{method: (x, mean, stderr)}`` arrays, the data behind the figure."""
    metric = metric or PRIMARY_METRIC[table.family]
    series = {}
    for m in table.methods:
        xs, means, errs = [], [], []
        for x in table.sweep:
            v = table.values(x, m, metric)
            v = v[np.isfinite(v)]
            if v.size == 0:
                continue
            xs.append(float(x))
            means.append(float(v.mean()))
            errs.append(float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0)
        if xs:
            series[m] = (np.array(xs), np.array(means), np.array(errs))
    return series


def emit_plots(table: ResultTable, out_dir, name: str | None = None) -> dict:
    """Draw mean +- stderr per method against the sweep axis.

    Returns the plotted arrays (see :func:`plot_series`) keyed by method.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    metric = PRIMARY_METRIC[table.family]
    series = plot_series(table, metric)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    for m, (x, mean, err) in series.items():
        ax.errorbar(x, mean, yerr=err, marker="o", capsize=3, label=m)
    ax.set_xlabel(AXIS_LABEL[table.family])
    ax.set_ylabel(METRIC_LABEL.get(metric, metric))
    ax.set_title(name or table.family)
    ax.grid(True, alpha=0.3)
    if series:
        ax.legend()
    fig.tight_layout()
    fig.savefig(out / f"{name or table.family}.png", dpi=120, metadata={"Software": None})
    plt.close(fig)
    return series
