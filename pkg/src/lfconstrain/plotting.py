"""Figures for benchmark reports."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .bench import BenchReport

_COLORS = {"NSP": "0.45", "NSP-G": "tab:orange", "NSP-GC": "tab:blue"}


def _color(model: str) -> str:
    return _COLORS.get(model.split("(")[0], "tab:gray")


def _style(ax):
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    ax.tick_params(direction="out")
    ax.grid(axis="y", linestyle=":", linewidth=0.6)
    ax.set_axisbelow(True)


def plot_report(report: BenchReport, outdir, fmt: str = "png", dpi: int = 150) -> list[Path]:
    """Write per-query time and permissible-token bar charts; returns the paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    models = [r.model for r in report.rows]
    x = np.arange(len(models))
    colors = [_color(m) for m in models]
    env = report.environment
    subtitle = f"|V|={env['vocab_size']}, d={env['d']}, {env['n_queries']} queries x {env['n_runs']} runs"

    fig = Figure(figsize=(6.4, 3.6))
    FigureCanvasAgg(fig)
    ax = fig.add_subplot()
    means = [r.mean_query_seconds * 1e3 for r in report.rows]
    stds = [r.std_query_seconds * 1e3 for r in report.rows]
    ax.bar(x, means, yerr=stds, color=colors, capsize=3, linewidth=0)
    ax.set_xticks(x, models, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("prediction time per query (ms)")
    ax.set_title(subtitle, fontsize=8)
    _style(ax)
    fig.tight_layout()
    time_path = outdir / f"bench_time.{fmt}"
    fig.savefig(time_path, dpi=dpi)

    fig = Figure(figsize=(6.4, 3.6))
    FigureCanvasAgg(fig)
    ax = fig.add_subplot()
    ax.bar(x, [r.avg_permissible_tokens for r in report.rows], color=colors, linewidth=0)
    ax.axhline(env["vocab_size"], color="k", linestyle="--", linewidth=0.7, label="|V|")
    ax.set_yscale("log")
    ax.set_xticks(x, models, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("avg softmax width per step")
    ax.set_title(subtitle, fontsize=8)
    ax.legend(frameon=False, fontsize=7, loc="lower left")
    _style(ax)
    fig.tight_layout()
    tokens_path = outdir / f"bench_tokens.{fmt}"
    fig.savefig(tokens_path, dpi=dpi)
    return [time_path, tokens_path]
