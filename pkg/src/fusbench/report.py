"""Delimited metric reports and companion figures.

Rows are written sorted with ``repr``-formatted floats and ``\\n`` line
endings so identical runs produce byte-identical files.  ``render_figures``
draws per-metric strategy comparisons and per-frame contamination curves
next to the delimited output (headless Agg backend).
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import write_json
from .metrics import aggregate_rows

CSV_COLUMNS = [
    "strategy",
    "seed",
    "frame",
    "part",
    "n_samples",
    "from_queue",
    "chamfer",
    "consistency",
    "contamination",
    "coverage",
]

_METRICS = ["chamfer", "consistency", "contamination", "coverage"]

_ROW_KEY = ("strategy", "seed", "frame", "part")


def _sorted_rows(rows: list[dict]) -> list[dict]:
    return sorted(rows, key=lambda r: tuple(r[k] for k in _ROW_KEY))


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))  # numpy scalars repr as np.float64(...)
    return str(value)


def write_rows_csv(path, rows: list[dict]) -> Path:
    """Write metric rows as CSV with a fixed column order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in _sorted_rows(rows):
            writer.writerow([_cell(row.get(col)) for col in CSV_COLUMNS])
    return path


def write_rows_json(path, rows: list[dict]) -> Path:
    """Write metric rows as a JSON array (same order and fields as the CSV)."""
    payload = [{col: row.get(col) for col in CSV_COLUMNS} for row in _sorted_rows(rows)]
    return write_json(path, payload)


def write_summary(path, rows: list[dict]) -> Path:
    """Write per-strategy aggregate statistics as JSON."""
    return write_json(path, aggregate_rows(rows))


def _strategy_series(rows: list[dict], metric: str) -> dict[str, np.ndarray]:
    series: dict[str, list[float]] = {}
    for row in rows:
        value = row.get(metric)
        if value is None:
            continue
        series.setdefault(row["strategy"], []).append(float(value))
    return {name: np.asarray(vals) for name, vals in sorted(series.items())}


def _frame_curves(rows: list[dict], metric: str) -> dict[str, np.ndarray]:
    """Per-strategy mean of ``metric`` at each frame index."""
    buckets: dict[str, dict[int, list[float]]] = {}
    for row in rows:
        value = row.get(metric)
        if value is None:
            continue
        buckets.setdefault(row["strategy"], {}).setdefault(int(row["frame"]), []).append(float(value))
    curves = {}
    for name, per_frame in sorted(buckets.items()):
        frames = sorted(per_frame)
        curves[name] = np.array([[f, float(np.mean(per_frame[f]))] for f in frames])
    return curves


def render_figures(directory, rows: list[dict], prefix: str = "report") -> list[Path]:
    """Render comparison figures alongside the delimited output.

    One bar chart per metric (strategy means with std error bars) and one
    contamination-over-frames line chart.  Returns the written paths.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for metric in _METRICS:
        series = _strategy_series(rows, metric)
        if not series:
            continue
        fig, ax = plt.subplots(figsize=(7, 4))
        names = list(series)
        means = [s.mean() for s in series.values()]
        stds = [s.std() for s in series.values()]
        ax.bar(range(len(names)), means, yerr=stds, capsize=3, color="#4878cf")
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=20, ha="right")
        ax.set_ylabel(metric)
        ax.set_title(f"{metric} by strategy")
        fig.tight_layout()
        out = directory / f"{prefix}_{metric}.png"
        fig.savefig(out, dpi=120)
        plt.close(fig)
        written.append(out)

    curves = _frame_curves(rows, "contamination")
    if curves:
        fig, ax = plt.subplots(figsize=(7, 4))
        for name, curve in curves.items():
            ax.plot(curve[:, 0], curve[:, 1], marker=".", label=name)
        ax.set_xlabel("frame")
        ax.set_ylabel("contamination")
        ax.set_title("contamination over frames")
        ax.legend(fontsize=8)
        fig.tight_layout()
        out = directory / f"{prefix}_contamination_frames.png"
        fig.savefig(out, dpi=120)
        plt.close(fig)
        written.append(out)
    return written


def write_report(directory, rows: list[dict], fmt: str = "csv",
                 figures: bool = True, stem: str = "metrics") -> dict[str, object]:
    """Write rows + summary + figures into ``directory``; returns the paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        table = write_rows_csv(directory / f"{stem}.csv", rows)
    elif fmt == "json":
        table = write_rows_json(directory / f"{stem}.json", rows)
    else:
        raise ValueError(f"unknown report format: {fmt!r}")
    summary = write_summary(directory / f"{stem}_summary.json", rows)
    paths = {"table": table, "summary": summary, "figures": []}
    if figures:
        paths["figures"] = render_figures(directory, rows, prefix=stem)
    return paths
