"""Report writers: delimited trial tables, summary JSON, and figures.

CSV layout is fixed; one row per trial with the columns

    trial, seed, n_used, risk_id, risk_ood, risk_mixed, ci, wall_time_s

where wall_time_s is the only non-deterministic column (same config and
seed reproduce every other byte).  Figures are rendered with matplotlib
to files next to the delimited output; the sweep chart is additionally
written as a self-contained SVG.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

CSV_COLUMNS = ("trial", "seed", "n_used", "risk_id", "risk_ood",
               "risk_mixed", "ci", "wall_time_s")


@dataclass(frozen=True)
class TrialRow:
    trial: int
    seed: int
    n_used: int
    risk_id: float
    risk_ood: float
    risk_mixed: float
    ci: float
    wall_time_s: float


def write_trials_csv(path: Path, rows: list[TrialRow]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow([
                r.trial, r.seed, r.n_used,
                f"{r.risk_id:.12g}", f"{r.risk_ood:.12g}", f"{r.risk_mixed:.12g}",
                f"{r.ci:.12g}", f"{r.wall_time_s:.6f}",
            ])


def write_summary_json(path: Path, summary: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def render_trials_figure(path: Path, rows: list[TrialRow], epsilon: float | None,
                         title: str) -> None:
    """Per-trial mixed risk with the target line, as a PNG."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 4))
    xs = [r.trial for r in rows]
    ax.plot(xs, [r.risk_mixed for r in rows], ".", ms=4, alpha=0.7, label="mixed risk")
    if epsilon is not None:
        ax.axhline(epsilon, color="crimson", lw=1.2, ls="--", label=f"target {epsilon:g}")
    ax.set_xlabel("trial")
    ax.set_ylabel("risk")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_game_figure(path: Path, risks, bound: float | None, title: str) -> None:
    """Histogram of per-trial game risks with the information floor."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.hist(list(risks), bins=40, color="steelblue", alpha=0.8)
    if bound is not None:
        ax.axvline(bound, color="crimson", lw=1.2, ls="--", label=f"floor {bound:g}")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("mixed risk")
    ax.set_ylabel("trials")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_sweep_figure(path_base: Path, ns: list[int], risks: list[float],
                        labels: list[str] | None, title: str) -> list[Path]:
    """Risk against sample count N, written as both SVG and PNG.

    Returns the written paths.
    """
    path_base.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(ns, risks, "o-", color="steelblue")
    if labels:
        for n, r, lab in zip(ns, risks, labels):
            ax.annotate(lab, (n, r), textcoords="offset points", xytext=(4, 4),
                        fontsize=7)
    ax.set_xlabel("samples N")
    ax.set_ylabel("mean mixed risk")
    ax.set_title(title)
    if min(ns) > 0 and max(ns) / max(min(ns), 1) > 50:
        ax.set_xscale("log")
    fig.tight_layout()
    written = []
    for ext in ("svg", "png"):
        p = path_base.with_suffix("." + ext)
        fig.savefig(p, dpi=130)
        written.append(p)
    plt.close(fig)
    return written
