"""
src/plotting.py

Static SVG figures of simulation results.

- Line charts of a metric against a sweep axis (Nt, SNR or d0), one line per
  transmitter design
- Scatter charts of the noiseless induced received points H w over the
  sqrt(gamma)-scaled constellation lattice

Output is deterministic for fixed input: fixed SVG hash salt and no date
metadata. Every plotted series carries a gid ("series-<label>") so it can be
located in the SVG.
"""

import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from constants import linear_to_decibel
from metrics_collector import MetricsRecord

logger = logging.getLogger(__name__)

matplotlib.rcParams["svg.hashsalt"] = "dmqam-sim"
matplotlib.rcParams["svg.fonttype"] = "none"

_METRIC_LABELS = {
    "avg_total_power": "Average total power ||w||^2 (linear)",
    "avg_peak_power": "Average spatial peak power max|w_k|^2 (linear)",
    "ser": "Symbol error rate",
    "ber": "Bit error rate",
    "goodput": "Goodput (bits/symbol per unit power)",
}

_AXIS_LABELS = {
    "nt": "Transmit antennas Nt",
    "snr_db": "SNR (dB)",
    "d0": "Relaxed half-width d0",
}

Series = Dict[str, Tuple[Sequence[float], Sequence[float]]]


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote {path}")
    return path


def emit_line_plot(series: Series, path, xlabel: str, ylabel: str, title: str = "",
                   power_db: bool = False, log_y: bool = False) -> Path:
    """
    Line chart, one line per entry of `series` ({label: (x, y)}).

    With power_db a secondary axis shows the same values in dB.

    Raises:
        ValueError: No series, or a series without points
    """
    if not series:
        raise ValueError("line plot needs at least one series")
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    for label, (x, y) in series.items():
        if len(x) == 0:
            raise ValueError(f"series '{label}' is empty")
        (line,) = ax.plot(x, y, marker="o", label=label)
        line.set_gid(f"series-{label}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if log_y:
        ax.set_yscale("log")
    if power_db:
        secondary = ax.secondary_yaxis(
            "right",
            functions=(lambda v: 10.0 * np.log10(np.maximum(v, 1e-300)),
                       lambda d: 10.0 ** (np.asarray(d) / 10.0)))
        secondary.set_ylabel("dB")
    if title:
        ax.set_title(title)
    ax.grid(True)
    ax.legend()
    return _save(fig, path)


def emit_scatter(points: np.ndarray, lattice: np.ndarray, gamma: float, path,
                 title: str = "") -> Path:
    """
    Induced received points with the sqrt(gamma)-scaled lattice overlaid.

    Raises:
        ValueError: No points to plot
    """
    points = np.asarray(points, dtype=complex).ravel()
    if points.size == 0:
        raise ValueError("scatter plot needs at least one point")
    scaled = np.sqrt(gamma) * np.asarray(lattice, dtype=complex)
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    cloud = ax.scatter(points.real, points.imag, s=4, alpha=0.4, label="induced Hw")
    cloud.set_gid("series-induced")
    marks = ax.scatter(scaled.real, scaled.imag, s=40, marker="x", color="k",
                       label="sqrt(gamma) * lattice")
    marks.set_gid("series-lattice")
    ax.set_xlabel("Re(h^T w)")
    ax.set_ylabel("Im(h^T w)")
    ax.set_aspect("equal")
    ax.grid(True)
    ax.legend(loc="upper right")
    ax.set_title(title or f"Induced constellation (gamma = {linear_to_decibel(gamma):.1f} dB)")
    return _save(fig, path)


def sweep_axis(records: List[MetricsRecord]) -> str:
    """The record field that varies across a scenario's records."""
    for axis in ("nt", "snr_db", "d0"):
        if len({getattr(r, axis) for r in records}) > 1:
            return axis
    return "snr_db"


def records_to_series(records: List[MetricsRecord], metric: str, axis: str) -> Series:
    """{design: (axis values, metric values)} sorted along the axis."""
    series: Dict[str, List[Tuple[float, float]]] = {}
    for rec in records:
        series.setdefault(rec.design, []).append((getattr(rec, axis), getattr(rec, metric)))
    out: Series = {}
    for design, pairs in series.items():
        pairs.sort()
        out[design] = ([p[0] for p in pairs], [p[1] for p in pairs])
    return out


def emit_scenario_plot(records: List[MetricsRecord], path, metric: str = "avg_total_power",
                       title: str = "") -> Path:
    """Metric against the scenario's sweep axis, one line per design."""
    if not records:
        raise ValueError("no records to plot")
    axis = sweep_axis(records)
    return emit_line_plot(
        records_to_series(records, metric, axis), path,
        xlabel=_AXIS_LABELS[axis], ylabel=_METRIC_LABELS.get(metric, metric),
        title=title or records[0].scenario,
        power_db=metric in ("avg_total_power", "avg_peak_power"),
        log_y=metric in ("ser", "ber"),
    )


def emit_plot(data, kind: str, path, **kwargs) -> Path:
    """
    Dispatch on chart kind.

    Args:
        data: Metrics records for "line"; (points, lattice, gamma) for "scatter"
        kind: "line" or "scatter"
        path: Output SVG path
    """
    if kind == "line":
        return emit_scenario_plot(data, path, **kwargs)
    if kind == "scatter":
        points, lattice, gamma = data
        return emit_scatter(points, lattice, gamma, path, **kwargs)
    raise ValueError(f"Unknown plot kind '{kind}' (expected line or scatter)")
