"""Figure rendering from metrics CSVs.

Five kinds: per-round accuracy / loss / knowledge-gain curves (one series
per scheme), cumulative-energy bars, and the theta-vs-selected-count
sweep. Every render also writes a sidecar CSV with the aggregated numbers
behind the figure, so downstream checks never have to read pixels.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import pandas as pd

METRICS_COLUMNS = [
    "round", "node", "scheme", "loss", "accuracy",
    "tx_energy_j", "delivered_gain", "num_selected", "num_received",
]
SWEEP_COLUMNS = ["theta", "median_selected"]

# figure kind -> (value column, y label, title)
_METRIC_KINDS = {
    "acc": ("accuracy", "mean test accuracy", "Average accuracy per round"),
    "loss": ("loss", "mean test loss", "Average loss per round"),
    "gain": ("delivered_gain", "mean knowledge gain delivered", "Knowledge gain per round"),
    "energy": ("tx_energy_j", "total transmit energy [J]", "Consumed communication energy"),
}
FIGURE_KINDS = (*_METRIC_KINDS, "theta-sweep")

_FIGSIZE = (6.4, 4.2)
_DPI = 120


class SchemaError(ValueError):
    """Input CSV does not match the expected schema."""


@dataclass
class FigureSpec:
    csv_paths: list[str]
    kind: str
    out_path: str
    sidecar_path: str | None = None  # default: out_path with .csv suffix

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}, have {FIGURE_KINDS}")
        if not self.csv_paths:
            raise ValueError("need at least one input CSV")
        if self.sidecar_path is None:
            self.sidecar_path = os.path.splitext(self.out_path)[0] + ".csv"


def _load(paths: list[str], required: list[str]) -> pd.DataFrame:
    frames = []
    for path in paths:
        try:
            frame = pd.read_csv(path)
        except pd.errors.EmptyDataError:
            raise SchemaError(f"{path}: empty CSV")
        for column in required:
            if column not in frame.columns:
                raise SchemaError(f"{path}: missing column {column!r}")
        if len(frame) == 0:
            raise SchemaError(f"{path}: no data rows")
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def _render_metric(spec: FigureSpec) -> None:
    column, ylabel, title = _METRIC_KINDS[spec.kind]
    data = _load(spec.csv_paths, METRICS_COLUMNS)

    per_round = (
        data.groupby(["scheme", "round"], sort=True)[column].mean().reset_index()
        .rename(columns={column: f"mean_{column}"})
    )
    per_round.to_csv(spec.sidecar_path, index=False)

    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    schemes = sorted(per_round["scheme"].unique())
    if spec.kind == "energy":
        # bars of the run totals; the sidecar still carries per-round means
        totals = data.groupby("scheme", sort=True)[column].sum()
        ax.bar(schemes, [totals[s] for s in schemes], color="tab:blue", width=0.6)
        ax.set_xlabel("scheme")
    else:
        for scheme in schemes:
            rows = per_round[per_round["scheme"] == scheme]
            ax.plot(rows["round"], rows[f"mean_{column}"], marker="o",
                    markersize=3, label=scheme)
        ax.set_xlabel("round")
        ax.legend()
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.out_path)
    plt.close(fig)


def _render_sweep(spec: FigureSpec) -> None:
    data = _load(spec.csv_paths, SWEEP_COLUMNS)
    agg = (
        data.groupby("theta", sort=True)["median_selected"].mean().reset_index()
        .rename(columns={"median_selected": "mean_median_selected"})
    )
    agg.to_csv(spec.sidecar_path, index=False)

    fig, ax = plt.subplots(figsize=_FIGSIZE, dpi=_DPI)
    ax.plot(agg["theta"], agg["mean_median_selected"], marker="o")
    ax.set_xlabel("regularization strength")
    ax.set_ylabel("median selected neighbors")
    ax.set_title("Selection rate vs regularization")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(spec.out_path)
    plt.close(fig)


def render(spec: FigureSpec) -> str:
    """Render one figure plus its sidecar CSV; returns the image path."""
    if spec.kind == "theta-sweep":
        _render_sweep(spec)
    else:
        _render_metric(spec)
    return spec.out_path
