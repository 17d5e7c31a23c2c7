"""CSV and static SVG output for evaluation results.

Files written by :func:`emit_report`:

* ``per_node.csv``: ``node,tp,tn,fp,fn,accuracy,tnr,tpr,f1`` (empty cell = undefined)
* ``aggregate.csv``: ``metric,value``
* ``boxplot.svg`` and one ``<metric>.svg`` bar chart per rate
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import GammaRow, NodeMetrics, aggregate, defined  # noqa: E402

RATES = ("accuracy", "tnr", "tpr")
_SVG_META = {"Date": None, "Creator": None}


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _save(fig, path):
    with matplotlib.rc_context({"svg.hashsalt": "arnn-botnet", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def write_per_node(path, metrics: Sequence[NodeMetrics], node_ids=None):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("node", "tp", "tn", "fp", "fn", "accuracy", "tnr", "tpr", "f1"))
        for m in metrics:
            name = node_ids[m.node] if node_ids is not None else m.node
            w.writerow((name, m.tp, m.tn, m.fp, m.fn, _fmt(m.accuracy), _fmt(m.tnr), _fmt(m.tpr), _fmt(m.f1)))


def write_aggregate(path, summary: Mapping):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("metric", "value"))
        for k, v in summary.items():
            w.writerow((k, _fmt(v)))


def boxplot_svg(path, metrics: Sequence[NodeMetrics], title=""):
    data, labels = [], []
    for r in RATES:
        vals = [100 * v for v in defined(getattr(m, r) for m in metrics)]
        if vals:
            data.append(vals)
            labels.append(r.upper())
    fig, ax = plt.subplots(figsize=(5, 4))
    if data:
        ax.boxplot(data, whis=1.5)
        ax.set_xticks(range(1, len(labels) + 1), labels)
    ax.set_ylabel("%")
    ax.set_ylim(-2, 102)
    ax.set_title(title)
    _save(fig, path)


def bar_svg(path, metrics: Sequence[NodeMetrics], rate: str, title=""):
    pts = [(m.node, getattr(m, rate)) for m in metrics if getattr(m, rate) is not None]
    fig, ax = plt.subplots(figsize=(8, 3))
    if pts:
        ax.bar([p[0] for p in pts], [100 * p[1] for p in pts], width=0.8)
    ax.set_xlabel("node")
    ax.set_ylabel(f"{rate.upper()} (%)")
    ax.set_ylim(0, 102)
    ax.set_title(title)
    _save(fig, path)


def emit_report(metrics: Sequence[NodeMetrics], path, node_ids=None, title="ARNN") -> dict:
    """Write the per-node/aggregate CSVs and SVG figures into directory ``path``."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    summary = aggregate(metrics)
    write_per_node(out / "per_node.csv", metrics, node_ids)
    write_aggregate(out / "aggregate.csv", summary)
    boxplot_svg(out / "boxplot.svg", metrics, title)
    for r in RATES:
        bar_svg(out / f"{r}.svg", metrics, r, title)
    return summary


def emit_comparison(results: Mapping[str, Sequence[NodeMetrics]], path) -> dict:
    """Side-by-side table ``model,metric,value`` plus a grouped bar chart of
    macro means."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    summaries = {name: aggregate(ms) for name, ms in results.items()}
    with (out / "comparison.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("model", "metric", "value"))
        for name, s in summaries.items():
            for k, v in s.items():
                w.writerow((name, k, _fmt(v)))
    metric_names = ("accuracy", "f1", "tnr", "tpr")
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.8 / max(len(summaries), 1)
    for k, (name, s) in enumerate(summaries.items()):
        ys = [100 * (s[f"macro_mean_{m}"] or 0.0) for m in metric_names]
        ax.bar([i + k * width for i in range(len(metric_names))], ys, width=width, label=name)
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(metric_names))], [m.upper() for m in metric_names])
    ax.set_ylabel("mean over nodes (%)")
    ax.set_ylim(0, 105)
    ax.legend()
    _save(fig, out / "comparison.svg")
    return summaries


def write_gamma_sweep(path, rows: Sequence[GammaRow]):
    keys = ("tp", "tn", "fp", "fn", "macro_mean_accuracy", "macro_median_accuracy",
            "macro_mean_tnr", "macro_mean_tpr", "macro_mean_f1", "pooled_accuracy", "pooled_f1")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("gamma",) + keys)
        for r in rows:
            w.writerow((_fmt(r.gamma),) + tuple(_fmt(r.summary[k]) for k in keys))
