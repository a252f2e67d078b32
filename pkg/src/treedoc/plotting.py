"""Figure rendering for the report paths.

Every CLI report that writes delimited output can render a matching
matplotlib figure next to it; rendering is headless (Agg) and the file
format follows the requested extension.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from treedoc.bench import BenchReport  # noqa: E402
from treedoc.metrics import EntropyReport  # noqa: E402


def render_bench_figure(reports: list[BenchReport], path: str) -> None:
    """Stacked time decomposition per benchmark row."""
    labels = [f"{r.doc_id}\n{r.mode}" + (f"\n{r.step}" if r.step else "") for r in reports]
    compiling = [r.t_compiling * 1e3 for r in reports]
    rendering = [r.t_rendering * 1e3 for r in reports]
    io = [r.t_io * 1e3 for r in reports]
    xs = range(len(reports))
    fig, ax = plt.subplots(figsize=(max(6, len(reports) * 0.9), 4.2))
    ax.bar(xs, compiling, label="compiling")
    ax.bar(xs, rendering, bottom=compiling, label="rendering")
    bottoms = [c + r for c, r in zip(compiling, rendering)]
    ax.bar(xs, io, bottom=bottoms, label="io")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_ylabel("time (ms, mean of trials)")
    ax.set_title("full vs incremental resolution")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_entropy_figure(reports: list[EntropyReport], path: str) -> None:
    """Bits per token by format and order."""
    labels = [f"{r.format}\norder {r.order}" for r in reports]
    values = [r.bits_per_token for r in reports]
    fig, ax = plt.subplots(figsize=(max(5, len(reports) * 1.1), 4.0))
    bars = ax.bar(range(len(reports)), values, color="#4878cf")
    for b, v in zip(bars, values):
        ax.text(b.get_x() + b.get_width() / 2, v, f"{v:.3f}", ha="center", va="bottom", fontsize=8)
    ax.set_xticks(range(len(reports)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("bits / token")
    ax.set_title("token entropy by format")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
