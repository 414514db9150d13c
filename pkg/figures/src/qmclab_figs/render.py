"""Figure rendering from qmclab result CSVs.

Six figure ids are supported; each consumes one or more result CSVs and
aggregates numeric columns as mean +- std (population std) over seed
replicas, grouped by series and x value:

==========  =====================  ===========  =========================
figure      input experiment       x axis       series
==========  =====================  ===========  =========================
temp        temp-sweep             temperature  train/test metric curves
bp-pauli    bp-scan (pauli)        locality     n_layers (log-y variance)
bp-proj     bp-scan (projector)    locality     n_layers (log-y variance)
nc          nc-sweep               n_layers     model kind (3 panels)
curse       curse-sweep            n_qubits     model kind (3 panels)
imbalance   imbalance-sweep        ratio        model kind (3 panels)
==========  =====================  ===========  =========================

Multiple ``--in`` files concatenate before aggregation (bp scans store one
seed per file). Rendering has no timestamps or run-dependent state, so the
same inputs produce identical bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGURES = ("temp", "bp-pauli", "bp-proj", "nc", "curse", "imbalance")

_REQUIRED = {
    "temp": ("model_kind", "temperature", "seed", "train_loss", "train_f1", "test_f1"),
    "bp-pauli": ("obs_kind", "locality", "n_layers", "loss_var", "theory_proxy"),
    "bp-proj": ("obs_kind", "locality", "n_layers", "loss_var", "theory_proxy"),
    "nc": ("model_kind", "n_layers", "seed", "test_f1", "intra", "inter"),
    "curse": ("model_kind", "n_qubits", "seed", "test_f1", "intra", "inter"),
    "imbalance": ("model_kind", "ratio", "seed", "test_f1", "intra", "inter"),
}

_SERIES_COLORS = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2",
]


class SchemaError(ValueError):
    """Input CSV does not match the expected result schema."""


@dataclass(frozen=True)
class FigureSpec:
    figure: str
    inputs: tuple[str, ...]
    output: str

    def __post_init__(self):
        if self.figure not in FIGURES:
            raise SchemaError(f"unknown figure id {self.figure!r}; have {FIGURES}")
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")


@dataclass
class SeriesAggregate:
    """One plotted line: x values with mean and std bands per y column."""

    label: str
    x: np.ndarray
    mean: dict[str, np.ndarray] = field(default_factory=dict)
    std: dict[str, np.ndarray] = field(default_factory=dict)


def _load_rows(spec: FigureSpec) -> list[dict]:
    required = _REQUIRED[spec.figure]
    rows: list[dict] = []
    for path in spec.inputs:
        path = Path(path)
        if not path.exists():
            raise SchemaError(f"input CSV not found: {path}")
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            for col in required:
                if col not in header:
                    raise SchemaError(f"{path} is missing column {col!r}")
            rows.extend(reader)
    if not rows:
        raise SchemaError(f"no data rows in {', '.join(map(str, spec.inputs))}")
    return rows


def _aggregate(rows, series_col, x_col, y_cols) -> list[SeriesAggregate]:
    """Group rows by (series, x); mean +- population std per y column."""
    groups: dict[str, dict[float, dict[str, list[float]]]] = {}
    for row in rows:
        label = row[series_col]
        x = float(row[x_col])
        bucket = groups.setdefault(label, {}).setdefault(x, {c: [] for c in y_cols})
        for col in y_cols:
            if row[col] not in ("", None):
                bucket[col].append(float(row[col]))
    out = []
    for label in sorted(groups):
        xs = np.array(sorted(groups[label]))
        agg = SeriesAggregate(label, xs)
        for col in y_cols:
            means, stds = [], []
            for x in xs:
                vals = groups[label][x][col]
                if vals:
                    means.append(sum(vals) / len(vals))
                    sq = sum((v - means[-1]) ** 2 for v in vals) / len(vals)
                    stds.append(sq**0.5)
                else:
                    means.append(np.nan)
                    stds.append(np.nan)
            agg.mean[col] = np.array(means)
            agg.std[col] = np.array(stds)
        out.append(agg)
    return out


def _band(ax, agg, col, color, label, log_x=False, marker="o", linestyle="-"):
    ax.plot(agg.x, agg.mean[col], marker=marker, markersize=3.5,
            color=color, label=label, linestyle=linestyle, linewidth=1.4)
    lo = agg.mean[col] - agg.std[col]
    hi = agg.mean[col] + agg.std[col]
    ax.fill_between(agg.x, lo, hi, color=color, alpha=0.18, linewidth=0)
    if log_x:
        ax.set_xscale("log")


def _panel_grid(n_panels, width=4.2, height=3.4):
    fig, axes = plt.subplots(
        1, n_panels, figsize=(width * n_panels, height), squeeze=False, dpi=120
    )
    return fig, axes[0]


def _render_bp(rows, figure) -> tuple[plt.Figure, list[SeriesAggregate]]:
    want = "pauli" if figure == "bp-pauli" else "projector"
    rows = [r for r in rows if r["obs_kind"] == want]
    if not rows:
        raise SchemaError(f"no rows with obs_kind={want!r}")
    aggs = _aggregate(rows, "n_layers", "locality", ["loss_var", "theory_proxy"])
    fig, (ax,) = _panel_grid(1, width=5.2, height=4.0)
    for i, agg in enumerate(sorted(aggs, key=lambda a: int(a.label))):
        _band(ax, agg, "loss_var", _SERIES_COLORS[i % len(_SERIES_COLORS)],
              f"$n_l$={agg.label}")
    # the module-purity predictor is layer-independent; draw it once
    proxy = aggs[0]
    ax.plot(proxy.x, proxy.mean["theory_proxy"], color="black", linestyle="--",
            linewidth=1.0, label="module proxy")
    ax.set_yscale("log")
    ax.set_xlabel("observable locality" if want == "pauli" else "measured qubits")
    ax.set_ylabel("loss variance")
    ax.set_title(f"Loss concentration, {want} observables")
    ax.legend(fontsize=8)
    return fig, aggs


def _render_temp(rows) -> tuple[plt.Figure, list[SeriesAggregate]]:
    aggs = _aggregate(rows, "model_kind", "temperature",
                      ["train_loss", "train_f1", "test_f1"])
    fig, (ax_loss, ax_f1) = _panel_grid(2)
    for i, agg in enumerate(aggs):
        color = _SERIES_COLORS[i % len(_SERIES_COLORS)]
        _band(ax_loss, agg, "train_loss", color, f"{agg.label} train loss", log_x=True)
        _band(ax_f1, agg, "train_f1", color, f"{agg.label} train", log_x=True,
              linestyle="--", marker="s")
        _band(ax_f1, agg, "test_f1", color, f"{agg.label} test", log_x=True)
    ax_loss.set_yscale("log")
    ax_loss.set_xlabel("softmax temperature")
    ax_loss.set_ylabel("final train loss")
    ax_f1.set_xlabel("softmax temperature")
    ax_f1.set_ylabel("macro F1")
    for ax in (ax_loss, ax_f1):
        ax.legend(fontsize=8)
    return fig, aggs


def _render_kind_panels(rows, x_col, x_label, haar_curve=False):
    aggs = _aggregate(rows, "model_kind", x_col, ["test_f1", "intra", "inter"])
    fig, axes = _panel_grid(3)
    panels = [("test_f1", "test macro F1"), ("intra", "Intra"), ("inter", "Inter")]
    for i, agg in enumerate(aggs):
        color = _SERIES_COLORS[i % len(_SERIES_COLORS)]
        dashed = agg.label.endswith("-init")
        for ax, (col, _) in zip(axes, panels):
            _band(ax, agg, col, color, agg.label,
                  linestyle="--" if dashed else "-",
                  marker="^" if dashed else "o")
    if haar_curve:
        xs = np.array(sorted({float(r[x_col]) for r in rows}))
        axes[2].plot(xs, 0.5**xs, color="black", linestyle=":",
                     linewidth=1.2, label="Haar 1/2^n")
        axes[2].set_yscale("log")
    for ax, (_, label) in zip(axes, panels):
        ax.set_xlabel(x_label)
        ax.set_ylabel(label)
        ax.legend(fontsize=7)
    return fig, aggs


def render(spec: FigureSpec) -> list[SeriesAggregate]:
    """Render the figure to `spec.output`; returns the plotted aggregates."""
    rows = _load_rows(spec)
    if spec.figure in ("bp-pauli", "bp-proj"):
        fig, aggs = _render_bp(rows, spec.figure)
    elif spec.figure == "temp":
        fig, aggs = _render_temp(rows)
    elif spec.figure == "nc":
        fig, aggs = _render_kind_panels(rows, "n_layers", "re-uploading layers")
    elif spec.figure == "curse":
        fig, aggs = _render_kind_panels(rows, "n_qubits", "qubits", haar_curve=True)
    else:
        fig, aggs = _render_kind_panels(rows, "ratio", "imbalance ratio")
    fig.tight_layout()
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, metadata=_fixed_metadata(out.suffix))
    plt.close(fig)
    return aggs


def _fixed_metadata(suffix: str) -> dict:
    # strip tool/version/date stamps so identical inputs give identical bytes
    if suffix == ".png":
        return {"Software": "qmclab-figs"}
    if suffix == ".svg":
        return {"Date": None, "Creator": "qmclab-figs"}
    return {}
