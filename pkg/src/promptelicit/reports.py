"""Benchmark output writers: long-form results, aggregated curves with
confidence intervals, a compact summary table, and per-metric figures.

CSV output is deterministic: fixed column order, rows sorted, floats
written at full repr precision, so two runs with equal configs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Mapping, Sequence

RESULT_COLUMNS = ("case_id", "category", "strategy", "run", "iteration", "metric", "value")

CURVE_COLUMNS = ("strategy", "metric", "iteration", "mean", "ci_low", "ci_high", "n")

SUMMARY_COLUMNS = ("strategy", "metric", "mean", "ci_low", "ci_high", "n")


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def t_interval(values: Sequence[float], confidence: float = 0.95) -> tuple[float, float, float]:
    """(mean, low, high) via the t-quantile; a single value has zero width."""
    if not values:
        raise ValueError("cannot aggregate an empty sample")
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        return mean, mean, mean
    variance = sum((v - mean) ** 2 for v in values) / (n - 1)
    stderr = math.sqrt(variance / n)
    from scipy import stats

    quantile = float(stats.t.ppf(0.5 + confidence / 2.0, n - 1))
    half = quantile * stderr
    return mean, mean - half, mean + half


def write_results_csv(rows: Iterable[Mapping], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ordered = sorted(rows, key=lambda r: (r["case_id"], r["strategy"], r["run"],
                                          r["iteration"], r["metric"]))
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for row in ordered:
            writer.writerow([_fmt(row[col]) for col in RESULT_COLUMNS])
    return path


def aggregate_curves(rows: Iterable[Mapping]) -> list[dict]:
    """Mean and 95% interval per (strategy, metric, iteration) across runs."""
    grouped: dict[tuple, list[float]] = defaultdict(list)
    for row in rows:
        grouped[(row["strategy"], row["metric"], row["iteration"])].append(float(row["value"]))
    curves = []
    for (strategy, metric, iteration), values in sorted(grouped.items()):
        mean, low, high = t_interval(values)
        curves.append({"strategy": strategy, "metric": metric, "iteration": iteration,
                       "mean": mean, "ci_low": low, "ci_high": high, "n": len(values)})
    return curves


def final_summary(rows: Iterable[Mapping]) -> list[dict]:
    """Per (strategy, metric): aggregate each run's value at its last iteration."""
    last: dict[tuple, tuple[int, float]] = {}
    for row in rows:
        key = (row["strategy"], row["metric"], row["case_id"], row["run"])
        iteration = int(row["iteration"])
        if key not in last or iteration >= last[key][0]:
            last[key] = (iteration, float(row["value"]))
    finals: dict[tuple, list[float]] = defaultdict(list)
    for (strategy, metric, _case, _run), (_iteration, value) in last.items():
        finals[(strategy, metric)].append(value)
    summary = []
    for (strategy, metric), values in sorted(finals.items()):
        mean, low, high = t_interval(values)
        summary.append({"strategy": strategy, "metric": metric, "mean": mean,
                        "ci_low": low, "ci_high": high, "n": len(values)})
    return summary


def write_csv(rows: Sequence[Mapping], columns: Sequence[str], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[col]) for col in columns])
    return path


def write_summary_table(summary: Sequence[Mapping], path: str | Path) -> Path:
    """Strategy-by-metric matrix of "mean [low, high]" cells."""
    path = Path(path)
    strategies = sorted({row["strategy"] for row in summary})
    metrics = sorted({row["metric"] for row in summary})
    cells = {(row["strategy"], row["metric"]): row for row in summary}
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", *metrics])
        for strategy in strategies:
            line = [strategy]
            for metric in metrics:
                row = cells.get((strategy, metric))
                line.append("" if row is None else
                            f"{row['mean']:.4f} [{row['ci_low']:.4f}, {row['ci_high']:.4f}]")
            writer.writerow(line)
    return path


def plot_curves(curves: Sequence[Mapping], out_dir: str | Path,
                prefix: str = "curves") -> list[Path]:
    """One figure per metric: mean lines with shaded intervals per strategy."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics = sorted({c["metric"] for c in curves})
    written = []
    for metric in metrics:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        for strategy in sorted({c["strategy"] for c in curves if c["metric"] == metric}):
            points = sorted((c for c in curves
                             if c["metric"] == metric and c["strategy"] == strategy),
                            key=lambda c: c["iteration"])
            xs = [p["iteration"] for p in points]
            means = [p["mean"] for p in points]
            ax.plot(xs, means, marker="o", markersize=3, label=strategy)
            ax.fill_between(xs, [p["ci_low"] for p in points],
                            [p["ci_high"] for p in points], alpha=0.15)
        ax.set_xlabel("iteration")
        ax.set_ylabel(metric.replace("_", " "))
        ax.set_title(f"{metric.replace('_', ' ')} over iterations")
        ax.legend()
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        target = out / f"{prefix}_{metric}.png"
        fig.savefig(target, dpi=120)
        plt.close(fig)
        written.append(target)
    return written
