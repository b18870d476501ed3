"""
Grouped bar charts of the summary table: one SVG per metric, attacks along
the x axis, one bar per AV design. Each bar carries the id bar-av{N}-{attack}.
"""
from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from evaluation.metrics import SummaryRow  # noqa: E402
from utils.csv_utils import read_rows  # noqa: E402

logger = logging.getLogger(__name__)

PLOT_METRICS = {
    'ft_inc': 'False track increment per frame',
    'mt_inc': 'Missed track increment per frame',
    'unsafe_fraction': 'Fraction of unsafe scenes',
}
BAR_GROUP_WIDTH = 0.8


def bar_id(av: int, attack: str) -> str:
    return f'bar-av{av}-{attack}'


def read_summary(path) -> list:
    return [SummaryRow.from_row(row) for row in read_rows(path)]


def plot_metric(rows, metric: str, path) -> Path:
    attacks = list(dict.fromkeys(row.attack for row in rows))
    avs = sorted({row.av for row in rows})
    values = {(row.av, row.attack): getattr(row, metric) for row in rows}
    width = BAR_GROUP_WIDTH / len(avs)
    x = np.arange(len(attacks))

    fig, ax = plt.subplots(figsize=(8, 4))
    for i, av in enumerate(avs):
        for j, attack in enumerate(attacks):
            if (av, attack) not in values:
                continue
            (bar,) = ax.bar(x[j] - BAR_GROUP_WIDTH / 2 + (i + 0.5) * width, values[(av, attack)], width,
                            color=f'C{i}', label=f'AV.{av}' if j == 0 else None)
            bar.set_gid(bar_id(av, attack))
    ax.axhline(0.0, color='black', linewidth=0.5)
    ax.set_xticks(x)
    ax.set_xticklabels(attacks)
    ax.set_title(PLOT_METRICS[metric])
    ax.legend()
    fig.tight_layout()

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({'svg.hashsalt': 'lidar-attack-lab'}):
        fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    return path


def emit_plots(rows, out_dir) -> list:
    """
    Write one SVG per plotted metric.

    Args:
        rows: SummaryRow list
        out_dir: Directory for the SVG files

    Returns:
        list[Path]: written files; empty for an empty summary
    """
    rows = list(rows)
    if not rows:
        logger.info("Empty summary, no plots written")
        return []
    paths = [plot_metric(rows, metric, Path(out_dir) / f'{metric}.svg') for metric in PLOT_METRICS]
    logger.info(f"Wrote {len(paths)} plots to {out_dir}")
    return paths
