"""Figure construction from spinnet CSV files.

Inputs are the persisted outputs of the spinnet command-line tools:
``results.csv`` tables (``# schema=1`` comment line + header row),
``histograms/*.csv`` bin tables, ``measures.csv`` from graph generation,
and ``collapse_curves.csv`` from the collapse report. Histogram panels
draw the committed bin edges and counts verbatim — no re-binning.

Curve conventions: exact-diagonalization curves solid in the model color,
generalized mean-field curves dashed in the model color, uniform
mean-field (closed form) curves solid black. Model colors: ER yellow,
WS blue, BA red.
"""

from __future__ import annotations

import glob
import os
import re

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

SCHEMA_COMMENT = "# schema=1"

MEASURES = ("k_over_n1", "C", "d")
MOMENTS = ("mean", "width", "skew")
MEASURE_LABELS = {"k_over_n1": "k/(n-1)", "C": "C", "d": "d", "k": "k"}
MODEL_COLORS = {"er": "#d4a017", "ws": "tab:blue", "ba": "tab:red"}

RESULTS_COLUMNS = ("source", "model", "lam", "measure", "mean", "width", "skew")
HISTOGRAM_COLUMNS = ("bin_left", "bin_right", "count")
COLLAPSE_COLUMNS = ("model", "label", "lam", "normalized_mean")


class SchemaError(ValueError):
    """Input CSV does not match the expected spinnet schema."""


def load_csv(path, required_columns) -> pd.DataFrame:
    """Read a spinnet CSV, verifying the schema marker and required columns."""
    with open(path) as f:
        first = f.readline().strip()
    if first != SCHEMA_COMMENT:
        raise SchemaError(f"{path}: missing '{SCHEMA_COMMENT}' marker "
                          f"(found {first!r})")
    table = pd.read_csv(path, comment="#")
    for col in required_columns:
        if col not in table.columns:
            raise SchemaError(f"{path}: missing required column {col!r}")
    return table


def _infer_model(path) -> str | None:
    name = os.path.basename(os.path.normpath(path)).lower()
    for token in ("er", "ws", "ba"):
        if re.search(rf"(^|[^a-z]){token}([^a-z]|$)", name):
            return token
    return None


def _histogram_blocks(in_dir, point: int):
    """Yield (measure, bin table) pairs for one input directory.

    Accepts either a graph-generation directory (single ``measures.csv``
    with a ``measure`` column) or an experiment directory
    (``histograms/h<point>_<measure>.csv`` files).
    """
    measures_csv = os.path.join(in_dir, "measures.csv")
    hist_dir = os.path.join(in_dir, "histograms")
    blocks = []
    if os.path.exists(measures_csv):
        table = load_csv(measures_csv, HISTOGRAM_COLUMNS + ("measure",))
        for measure, block in table.groupby("measure", sort=False):
            blocks.append((str(measure), block.reset_index(drop=True)))
    elif os.path.isdir(hist_dir):
        pattern = os.path.join(hist_dir, f"h{point:02d}_*.csv")
        for path in sorted(glob.glob(pattern)):
            measure = os.path.basename(path)[len(f"h{point:02d}_"):-len(".csv")]
            blocks.append((measure, load_csv(path, HISTOGRAM_COLUMNS)))
        if not blocks:
            raise SchemaError(f"{hist_dir}: no histogram files for "
                              f"grid point {point}")
    else:
        raise SchemaError(f"{in_dir}: neither measures.csv nor histograms/ "
                          "found")
    order = {m: i for i, m in enumerate(MEASURES + ("k",))}
    blocks.sort(key=lambda pair: order.get(pair[0], len(order)))
    return blocks


def render_histogram_grid(in_dirs, out_path, point: int = 0) -> None:
    """One row of panels per input directory, one column per measure.

    Bars are drawn directly from (bin_left, bin_right, count) rows.
    """
    per_dir = [(d, _histogram_blocks(d, point)) for d in in_dirs]
    ncols = max(len(blocks) for _, blocks in per_dir)
    nrows = len(per_dir)
    fig, axes = plt.subplots(nrows, ncols, figsize=(4 * ncols, 3 * nrows),
                             squeeze=False)
    for r, (in_dir, blocks) in enumerate(per_dir):
        model = _infer_model(in_dir)
        color = MODEL_COLORS.get(model, "0.4")
        for c in range(ncols):
            ax = axes[r][c]
            if c >= len(blocks):
                ax.set_axis_off()
                continue
            measure, block = blocks[c]
            left = block["bin_left"].to_numpy(dtype=float)
            right = block["bin_right"].to_numpy(dtype=float)
            counts = block["count"].to_numpy(dtype=float)
            ax.bar(left, counts, width=right - left, align="edge",
                   color=color, edgecolor="black", linewidth=0.3)
            ax.set_xlabel(MEASURE_LABELS.get(measure, measure))
            if c == 0:
                label = model.upper() if model else os.path.basename(
                    os.path.normpath(in_dir))
                ax.set_ylabel(f"{label}\ncount")
            else:
                ax.set_ylabel("count")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def _curve_style(source: str, model: str):
    if source == "mf0":
        return {"color": "black", "linestyle": "-"}
    color = MODEL_COLORS.get(model, "0.4")
    return {"color": color, "linestyle": "--" if source == "mf" else "-"}


def render_moments_vs_lambda(in_dirs, out_path) -> None:
    """3x3 grid: rows = measures (k/(n-1), C, d), columns = moments
    (mean, width, skew); one curve per (source, model) found in the
    concatenated results tables."""
    tables = [load_csv(os.path.join(d, "results.csv"), RESULTS_COLUMNS)
              for d in in_dirs]
    table = pd.concat(tables, ignore_index=True)
    fig, axes = plt.subplots(3, 3, figsize=(12, 9), squeeze=False)
    for r, measure in enumerate(MEASURES):
        for c, moment in enumerate(MOMENTS):
            ax = axes[r][c]
            sub = table[table["measure"] == measure]
            for (source, model), block in sub.groupby(["source", "model"]):
                block = block.sort_values("lam")
                lam = block["lam"].to_numpy(dtype=float)
                y = block[moment].to_numpy(dtype=float)
                finite = np.isfinite(y)
                label = (f"MF0" if source == "mf0"
                         else f"{model.upper()} ({source})")
                ax.plot(lam[finite], y[finite], label=label,
                        **_curve_style(str(source), str(model)))
            ax.set_xlabel(r"$\lambda$")
            ax.set_ylabel(f"{moment}[{MEASURE_LABELS[measure]}]")
            if r == 0 and c == 0:
                ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def render_collapse(in_dirs, out_path) -> None:
    """One single-axis panel per model; one normalized curve per label."""
    if len(in_dirs) != 1:
        raise SchemaError("collapse takes exactly one report directory")
    path = os.path.join(in_dirs[0], "collapse_curves.csv")
    table = load_csv(path, COLLAPSE_COLUMNS)
    models = sorted(table["model"].unique())
    fig, axes = plt.subplots(1, len(models), figsize=(4 * len(models), 3.5),
                             squeeze=False)
    for c, model in enumerate(models):
        ax = axes[0][c]
        block = table[table["model"] == model]
        for label, curve in block.groupby("label"):
            curve = curve.sort_values("lam")
            ax.plot(curve["lam"], curve["normalized_mean"], label=str(label))
        ax.set_title(str(model).upper())
        ax.set_xlabel(r"$\lambda$")
        ax.set_ylabel("Mean[k] / Mean[k(h=0)]")
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
