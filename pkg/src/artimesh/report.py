"""Figures for evaluation reports and refinement traces (rendered off-screen)."""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def eval_figures(report: dict, out_dir) -> list[Path]:
    """Per-joint angle and position error bars; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = report["rows"]
    labels = [f"{r['object_name']}\n{r['joint_id']}" if r["object_name"] else r["joint_id"] for r in rows]
    fig, axes = plt.subplots(1, 2, figsize=(max(6.0, 1.4 * len(rows) + 2), 4.0))
    axes[0].bar(range(len(rows)), [r["angle_error"] for r in rows], color="#4c72b0")
    axes[0].set_ylabel("angle error (deg)")
    pos = [r["position_error"] if r["position_error"] is not None else 0.0 for r in rows]
    colors = ["#dd8452" if r["position_error"] is not None else "#cccccc" for r in rows]
    axes[1].bar(range(len(rows)), pos, color=colors)
    axes[1].set_ylabel("position error (normalized)")
    for ax in axes:
        ax.set_xticks(range(len(rows)))
        ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
        ax.grid(axis="y", alpha=0.3)
    fig.suptitle(f"mean angle {report['mean_angle_error']:.4g} deg, mean position "
                 + ("-" if report["mean_position_error"] is None else f"{report['mean_position_error']:.3g}"))
    fig.tight_layout()
    path = out / "eval_errors.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return [path]


def objective_figure(values: Sequence[float], path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    ax.plot(range(len(values)), list(values), lw=1.2)
    ax.set_xlabel("iteration")
    ax.set_ylabel("objective")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
