"""Figure rendering for simulation reports and dataset statistics.

Figures are written next to the delimited output files; every renderer
returns the paths it produced.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .instances import ProblemInstance
from .mining import (
    OUTPUT_CAP,
    PREV_CHANGE_CAP,
    QUERY_CAP,
    SIGNATURE_CAP,
)
from .simulation import SimulationResult, Summary
from .tokenizers import Tokenizer

METRICS = ("lines", "levenshtein", "keystrokes")


def render_simulation_figures(
    results: Sequence[SimulationResult], summary: Summary, out_base: Path
) -> list[Path]:
    """Mean-gain bars (multi vs single round) and a rounds histogram."""
    paths = []

    fig, ax = plt.subplots(figsize=(6, 4))
    multi = [
        summary.lines_gain_pct,
        summary.levenshtein_gain_pct,
        summary.keystrokes_gain_pct,
    ]
    single = [summary.single_round[f"{m}_gain_pct"] for m in METRICS]
    x = range(len(METRICS))
    width = 0.38
    ax.bar([i - width / 2 for i in x], multi, width, label="multi-round")
    ax.bar([i + width / 2 for i in x], single, width, label="single round")
    ax.set_xticks(list(x), [m.capitalize() for m in METRICS])
    ax.set_ylabel("mean total gain (%)")
    ax.axhline(0, color="black", linewidth=0.8)
    ax.legend()
    ax.set_title(f"Editing gains over {summary.episodes} episodes")
    fig.tight_layout()
    gains_path = out_base.with_name(out_base.stem + "_gains.png")
    fig.savefig(gains_path, dpi=150)
    plt.close(fig)
    paths.append(gains_path)

    fig, ax = plt.subplots(figsize=(5, 3.5))
    rounds = [r.rounds for r in results]
    top = max(rounds, default=1)
    ax.hist(rounds, bins=[b + 0.5 for b in range(0, top + 1)], rwidth=0.85)
    ax.set_xlabel("rounds")
    ax.set_ylabel("episodes")
    ax.set_title("Rounds to completion")
    fig.tight_layout()
    rounds_path = out_base.with_name(out_base.stem + "_rounds.png")
    fig.savefig(rounds_path, dpi=150)
    plt.close(fig)
    paths.append(rounds_path)
    return paths


def render_stats_figures(
    instances: Sequence[ProblemInstance], tokenizer: Tokenizer, out_base: Path
) -> list[Path]:
    """Histograms of the four token-count distributions."""
    from .encoding import enc_output

    series = {
        "query tokens": (
            [i.query_stream().token_count(tokenizer) for i in instances],
            QUERY_CAP,
        ),
        "output tokens": (
            [enc_output(i.ground_truth, i.region).token_count(tokenizer) for i in instances],
            OUTPUT_CAP,
        ),
        "prev change tokens": (
            [
                sum(pc.stream.token_count(tokenizer) for pc in i.prior_changes)
                for i in instances
            ],
            PREV_CHANGE_CAP,
        ),
        "signature tokens": (
            [
                sum(tokenizer.count(t) + 1 for t in i.signature_doc.split("\n"))
                if i.signature_doc
                else 0
                for i in instances
            ],
            SIGNATURE_CAP,
        ),
    }
    fig, axes = plt.subplots(2, 2, figsize=(9, 6))
    for ax, (label, (counts, cap)) in zip(axes.flat, series.items()):
        ax.hist(counts or [0], bins=20)
        ax.axvline(cap, color="red", linestyle="--", linewidth=0.8, label=f"cap {cap}")
        ax.set_title(label, fontsize=10)
        ax.legend(fontsize=8)
    fig.suptitle("Token-count distributions")
    fig.tight_layout()
    path = out_base.with_name(out_base.stem + "_tokens.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]
