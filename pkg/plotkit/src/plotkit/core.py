"""Turn sweep-result CSVs into metric-vs-parameter panels.

The input contract is the fixed sweep header
``experiment,method,param,value,seed,ari,ami,angle_deg,J,wallclock_s``.
Series extraction is a pure function of the CSV bytes and the spec: rows are
grouped by method, seeds are averaged at each parameter value, and the
+/- 1 standard deviation band rides along. No metric is recomputed here; the
CSV is the single source of truth.
"""

from __future__ import annotations

import csv
import hashlib
import io
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

EXPECTED_HEADER = ("experiment", "method", "param", "value", "seed",
                   "ari", "ami", "angle_deg", "J", "wallclock_s")

# plotted metrics are clamped to their natural ranges; adjusted indices may
# legitimately dip below zero
_Y_RANGES = {
    "ari": (-0.55, 1.05),
    "ami": (-0.55, 1.05),
    "angle_deg": (0.0, 95.0),
    "wallclock_s": (0.0, None),
    "J": (0.0, None),
}


class ColumnError(KeyError):
    """A requested column is absent from the CSV header."""


@dataclass(frozen=True)
class PlotSpec:
    """What to read and what to draw: columns, grouping, output, title."""

    csv_path: str
    x: str = "value"
    y: str = "ari"
    group: str = "method"
    out_path: str | None = None
    title: str = ""

    def validate_against(self, header: list[str]) -> None:
        for column in (self.x, self.y, self.group):
            if column not in header:
                raise ColumnError(column)


def read_rows(csv_bytes: bytes) -> tuple[list[str], list[dict]]:
    """Parse the CSV payload; returns (header, rows as dicts)."""
    text = csv_bytes.decode("utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise ValueError("empty CSV input")
    if tuple(reader.fieldnames) != EXPECTED_HEADER:
        raise ValueError(
            f"unexpected CSV header {reader.fieldnames}; expected {list(EXPECTED_HEADER)}")
    return list(reader.fieldnames), list(reader)


def extract_series(csv_bytes: bytes, spec: PlotSpec) -> dict[str, dict[str, np.ndarray]]:
    """Per-group (x, mean, std, count) arrays, deterministically ordered.

    The mean and band aggregate over every row sharing a (group, x) pair,
    one entry per seed in the sweep contract.
    """
    header, rows = read_rows(csv_bytes)
    spec.validate_against(header)
    buckets: dict[str, dict[float, list[float]]] = {}
    for row in rows:
        group = row[spec.group]
        x = float(row[spec.x])
        y = float(row[spec.y])
        buckets.setdefault(group, {}).setdefault(x, []).append(y)
    series = {}
    for group in sorted(buckets):
        xs = np.array(sorted(buckets[group]))
        means = np.array([np.mean(buckets[group][x]) for x in xs])
        stds = np.array([np.std(buckets[group][x]) for x in xs])
        counts = np.array([len(buckets[group][x]) for x in xs])
        series[group] = {"x": xs, "mean": means, "std": stds, "count": counts}
    return series


def series_digest(series: dict[str, dict[str, np.ndarray]]) -> str:
    """Stable hash of the plotted data; equal inputs must collide."""
    digest = hashlib.sha256()
    for group in sorted(series):
        digest.update(group.encode("utf-8"))
        for key in ("x", "mean", "std", "count"):
            digest.update(np.ascontiguousarray(series[group][key], dtype=float).tobytes())
    return digest.hexdigest()


def _draw_panel(ax, series, spec: PlotSpec) -> None:
    for group, data in series.items():
        ax.plot(data["x"], data["mean"], marker="o", markersize=3,
                linewidth=1.5, label=group)
        ax.fill_between(data["x"], data["mean"] - data["std"],
                        data["mean"] + data["std"], alpha=0.2)
    ax.set_xlabel(spec.x)
    ax.set_ylabel(spec.y)
    if spec.title:
        ax.set_title(spec.title)
    low, high = _Y_RANGES.get(spec.y, (None, None))
    ax.set_ylim(bottom=low, top=high)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)


def render(spec: PlotSpec) -> str:
    """Draw one panel from the spec's CSV and write it to ``spec.out_path``.

    The output format follows the file suffix (.png or .svg). Returns the
    digest of the plotted series so callers can assert determinism.
    """
    if spec.out_path is None:
        raise ValueError("spec.out_path is required")
    with open(spec.csv_path, "rb") as fh:
        payload = fh.read()
    series = extract_series(payload, spec)
    fig, ax = plt.subplots(figsize=(5.0, 3.5), dpi=120)
    try:
        _draw_panel(ax, series, spec)
        fig.tight_layout()
        fig.savefig(spec.out_path)
    finally:
        plt.close(fig)
    return series_digest(series)


def render_panels(specs: list[PlotSpec], out_path: str, ncols: int = 2) -> list[str]:
    """Draw several specs as one figure grid (four specs give the classic
    2x2 sweep summary). Returns the per-panel series digests."""
    if not specs:
        raise ValueError("need at least one panel spec")
    nrows = (len(specs) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(5.0 * ncols, 3.5 * nrows),
                             dpi=120, squeeze=False)
    digests = []
    try:
        for idx, spec in enumerate(specs):
            ax = axes[idx // ncols][idx % ncols]
            with open(spec.csv_path, "rb") as fh:
                payload = fh.read()
            series = extract_series(payload, spec)
            _draw_panel(ax, series, spec)
            digests.append(series_digest(series))
        for idx in range(len(specs), nrows * ncols):
            axes[idx // ncols][idx % ncols].axis("off")
        fig.tight_layout()
        fig.savefig(out_path)
    finally:
        plt.close(fig)
    return digests
