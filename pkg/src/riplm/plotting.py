"""Figure rendering for run output directories.

Reads the per-trial CSVs emitted by a run and writes PNG figures next to
them: regret curves, variance growth, and the temperature schedule when it
varies.  Rendering is optional and additive; the delimited output is the
canonical record.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_DPI = 150


def _load_trials(data_dir: Path) -> dict[str, dict[str, np.ndarray]]:
    trials = {}
    for path in sorted(data_dir.glob("trial_*.csv")):
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            cols: dict[str, list[float]] = {name: [] for name in reader.fieldnames or []}
            for row in reader:
                for k, v in row.items():
                    cols[k].append(float(v))
        trials[path.stem] = {k: np.array(v) for k, v in cols.items()}
    return trials


def _seed_curves(ax, trials, column, ylabel):
    stacks = []
    for name, cols in trials.items():
        ax.plot(cols["round"], cols[column], lw=0.8, alpha=0.45)
        stacks.append(cols[column])
    if stacks and all(len(s) == len(stacks[0]) for s in stacks):
        mean = np.mean(stacks, axis=0)
        ax.plot(next(iter(trials.values()))["round"], mean, lw=2.0, color="black", label="mean")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("round")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)


def render_run_figures(data_dir, fig_dir=None) -> list[Path]:
    """Render figures from a run's CSVs; returns the written image paths."""
    data = Path(data_dir)
    out = Path(fig_dir) if fig_dir is not None else data
    trials = _load_trials(data)
    if not trials:
        raise FileNotFoundError(f"no trial_*.csv files under {data}")
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    _seed_curves(ax, trials, "regret_to_date", "regret vs prefix rank benchmark")
    ax.set_title(f"regret to date ({len(trials)} trials)")
    path = out / "regret_curves.png"
    fig.savefig(path, dpi=FIGURE_DPI, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    fig, axes = plt.subplots(1, 2, figsize=(10.0, 4.0))
    _seed_curves(axes[0], trials, "cumulative_variance", "cumulative played variance")
    axes[0].set_title("variance growth")
    _seed_curves(axes[1], trials, "cumulative_max_variance", "cumulative worst-case variance")
    axes[1].set_title("worst-case budget")
    path = out / "variance_growth.png"
    fig.savefig(path, dpi=FIGURE_DPI, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    _seed_curves(ax, trials, "cumulative_loss", "cumulative expected loss")
    ax.set_title("cumulative loss")
    path = out / "loss_curves.png"
    fig.savefig(path, dpi=FIGURE_DPI, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    temps = np.concatenate([c["temperature"] for c in trials.values()])
    finite = temps[np.isfinite(temps)]
    if len(finite) and float(finite.max() - finite.min()) > 0:
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        _seed_curves(ax, trials, "temperature", "temperature")
        ax.set_title("temperature schedule")
        path = out / "temperature.png"
        fig.savefig(path, dpi=FIGURE_DPI, bbox_inches="tight")
        plt.close(fig)
        written.append(path)

    return written
