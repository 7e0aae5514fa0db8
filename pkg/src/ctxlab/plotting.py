"""Figures for the ``report`` command, written to files next to the CSV tables."""
from __future__ import annotations

import csv
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STATUS_COLORS = {"Noncontextual": "#3b75af", "Contextual": "#c44e52"}


def setup_plt() -> None:
    plt.rcParams["figure.dpi"] = 120
    plt.rcParams["axes.spines.top"] = False
    plt.rcParams["axes.spines.right"] = False
    plt.rcParams["figure.constrained_layout.use"] = True


def write_csv(path: Path, rows: Sequence[Mapping], fields: Sequence[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fields))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in fields})
    return path


def save_fig(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_noise_sweep(rows: Iterable[Mapping], path: Path) -> Path:
    """Verdict against PR-box visibility; columns: visibility (float), status."""
    setup_plt()
    rows = list(rows)
    xs = [float(Fraction(r["visibility"])) for r in rows]
    ys = [1 if r["status"] == "Contextual" else 0 for r in rows]
    fig, ax = plt.subplots(figsize=(5, 2.6))
    ax.step(xs, ys, where="post", color="0.6", lw=1)
    for x, y, r in zip(xs, ys, rows):
        ax.plot(x, y, "o", color=STATUS_COLORS[r["status"]])
    ax.axvline(0.5, ls="--", color="0.3", lw=0.8)
    ax.set_yticks([0, 1], ["noncontextual", "contextual"])
    ax.set_xlabel("visibility of the PR box")
    ax.set_ylim(-0.3, 1.3)
    return save_fig(fig, path)


def plot_corpus(rows: Iterable[Mapping], path: Path) -> Path:
    """LP size of each system against that of its consistification, by verdict."""
    setup_plt()
    rows = list(rows)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
    for status, color in STATUS_COLORS.items():
        sel = [r for r in rows if r["status"] == status]
        ax1.scatter(
            [r["lp_columns"] for r in sel],
            [r["consistified_lp_columns"] for r in sel],
            s=12, color=color, label=status, alpha=0.8,
        )
    ax1.set_xlabel("LP columns (original)")
    ax1.set_ylabel("LP columns (consistified)")
    ax1.legend(frameon=False, fontsize=8)

    groups = [("consistent", True), ("inconsistent", False)]
    width = 0.38
    for k, (status, color) in enumerate(STATUS_COLORS.items()):
        counts = [
            sum(1 for r in rows if r["status"] == status and r["consistent"] == flag)
            for _, flag in groups
        ]
        ax2.bar([i + (k - 0.5) * width for i in range(len(groups))], counts, width,
                color=color, label=status)
    ax2.set_xticks(range(len(groups)), [g for g, _ in groups])
    ax2.set_ylabel("systems")
    disagreements = sum(1 for r in rows if not r["agree"])
    ax2.set_title(f"{len(rows)} systems, {disagreements} disagreements", fontsize=9)
    return save_fig(fig, path)
