"""Figure rendering for completed runs.

Reads the delimited artifacts of an output directory (moments.csv,
density_*.txt, convergence.csv, bkw_error.csv, trubnikov*.csv) and renders
matplotlib figures next to them.  Every function is tolerant of missing
inputs, so ``render_all`` can be pointed at any run directory.
"""

from __future__ import annotations

import csv
import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update({"figure.dpi": 110, "font.size": 9, "axes.grid": True, "grid.alpha": 0.3})


def _read_csv(path: Path) -> dict[str, list[str]]:
    with path.open() as fh:
        reader = csv.reader(fh)
        header = next(reader)
        columns: dict[str, list[str]] = {name: [] for name in header}
        for row in reader:
            for name, value in zip(header, row):
                columns[name].append(value)
    return columns


def _floats(columns: dict, name: str, mask=None) -> np.ndarray:
    vals = np.array([float(x) for x in columns[name]])
    return vals if mask is None else vals[mask]


def render_moments(out_dir: Path) -> list[Path]:
    path = out_dir / "moments.csv"
    if not path.exists():
        return []
    cols = _read_csv(path)
    stats = np.array(cols["statistic"])
    exp_mask = stats == "expectation"
    t = _floats(cols, "t", exp_mask)
    fig, axes = plt.subplots(2, 2, figsize=(9, 6.5))

    ax = axes[0, 0]
    node_labels = sorted({s for s in stats if s.startswith("node")})
    for label in node_labels:
        mask = stats == label
        tt = _floats(cols, "t", mask)
        px = _floats(cols, "px", mask)
        py = _floats(cols, "py", mask)
        drift = np.hypot(px - px[0], py - py[0])
        ax.plot(tt, drift, lw=0.8)
    ax.set_yscale("symlog", linthresh=1e-16)
    ax.set_title("momentum drift per node")
    ax.set_xlabel("t")

    ax = axes[0, 1]
    energy = _floats(cols, "energy", exp_mask)
    ax.plot(t, energy - energy[0], "k-")
    ax.set_title("expected energy drift")
    ax.set_xlabel("t")

    ax = axes[1, 0]
    ax.plot(t, _floats(cols, "H", exp_mask), "b-")
    ax.set_title("expected entropy")
    ax.set_xlabel("t")

    ax = axes[1, 1]
    ax.semilogy(t, np.maximum(_floats(cols, "D", exp_mask), 1e-300), "r-")
    ax.set_title("expected dissipation")
    ax.set_xlabel("t")

    fig.tight_layout()
    target = out_dir / "figures" / "moments.png"
    target.parent.mkdir(exist_ok=True)
    fig.savefig(target)
    plt.close(fig)
    return [target]


def render_density_grids(out_dir: Path) -> list[Path]:
    outputs = []
    for path in sorted(out_dir.glob("density_*.txt")):
        header = path.open().readline().lstrip("# ").strip()
        fields = dict(item.split("=") for item in header.split())
        extent = float(fields["extent"])
        values = np.loadtxt(path)
        fig, ax = plt.subplots(figsize=(4.2, 3.6))
        im = ax.imshow(
            values.T,
            origin="lower",
            extent=[-extent, extent, -extent, extent],
            cmap="viridis",
        )
        fig.colorbar(im, ax=ax, shrink=0.85)
        ax.set_title(f"{fields['statistic']}  t={fields['time']}")
        ax.set_xlabel("v_x")
        ax.set_ylabel("v_y")
        ax.grid(False)
        fig.tight_layout()
        target = out_dir / "figures" / (path.stem + ".png")
        target.parent.mkdir(exist_ok=True)
        fig.savefig(target)
        plt.close(fig)
        outputs.append(target)
    return outputs


def render_convergence(out_dir: Path) -> list[Path]:
    path = out_dir / "convergence.csv"
    if not path.exists():
        return []
    cols = _read_csv(path)
    labels = np.array(cols["label"])
    orders = _floats(cols, "M")
    times = _floats(cols, "t")
    errors = _floats(cols, "error")
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    for label in dict.fromkeys(labels):
        for t in dict.fromkeys(times[labels == label]):
            mask = (labels == label) & (times == t)
            ax.semilogy(orders[mask], np.maximum(errors[mask], 1e-300), "o-",
                        label=f"{label}, t={t:g}")
    ax.set_xlabel("expansion order M")
    ax.set_ylabel("l2-in-z error of M4")
    ax.legend(fontsize=7)
    fig.tight_layout()
    target = out_dir / "figures" / "convergence.png"
    target.parent.mkdir(exist_ok=True)
    fig.savefig(target)
    plt.close(fig)
    return [target]


def render_bkw(out_dir: Path) -> list[Path]:
    path = out_dir / "bkw_error.csv"
    if not path.exists():
        return []
    cols = _read_csv(path)
    counts = _floats(cols, "N").astype(int)
    times = _floats(cols, "t")
    errors = _floats(cols, "expected_l2_error")
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    for n in dict.fromkeys(counts):
        mask = counts == n
        ax.semilogy(times[mask], errors[mask], "o-", label=f"N={n}")
    ax.set_xlabel("t")
    ax.set_ylabel("expected relative l2 density error")
    ax.legend(fontsize=8)
    fig.tight_layout()
    target = out_dir / "figures" / "bkw_error.png"
    target.parent.mkdir(exist_ok=True)
    fig.savefig(target)
    plt.close(fig)
    return [target]


def render_relaxation(out_dir: Path) -> list[Path]:
    series = sorted(out_dir.glob("relaxation_series_*.csv"))
    if not series:
        return []
    summary = {}
    summary_path = out_dir / "trubnikov.csv"
    if summary_path.exists():
        cols = _read_csv(summary_path)
        for i, name in enumerate(cols["scenario"]):
            summary[name] = float(cols["predicted_rate"][i])
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    for path in series:
        scenario = re.sub(r"^relaxation_series_|\.csv$", "", path.name)
        cols = _read_csv(path)
        t = _floats(cols, "t")
        ratio = _floats(cols, "ratio")
        line, = ax.semilogy(t, np.maximum(ratio, 1e-300), label=scenario)
        if scenario in summary:
            ax.semilogy(t, np.exp(-summary[scenario] * t), "--", color=line.get_color(),
                        lw=0.8, label=f"{scenario} predicted")
    ax.set_xlabel("t")
    ax.set_ylabel("expected anisotropy ratio")
    ax.legend(fontsize=7)
    fig.tight_layout()
    target = out_dir / "figures" / "relaxation.png"
    target.parent.mkdir(exist_ok=True)
    fig.savefig(target)
    plt.close(fig)
    return [target]


def render_all(out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    produced = []
    produced += render_moments(out_dir)
    produced += render_density_grids(out_dir)
    produced += render_convergence(out_dir)
    produced += render_bkw(out_dir)
    produced += render_relaxation(out_dir)
    return produced
