"""Per-node confusion counts, rates, F1, box statistics and gamma sweeps.

Undefined rates (no positive or no negative slots for a node) are ``None``
and are dropped from summaries, never counted as zero.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, InvalidSizeError


class EmptyMetricError(DataError):
    pass


@dataclass(frozen=True)
class NodeMetrics:
    node: int
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def accuracy(self) -> float | None:
        return (self.tp + self.tn) / self.total if self.total else None

    @property
    def tnr(self) -> float | None:
        neg = self.tn + self.fp
        return self.tn / neg if neg else None

    @property
    def tpr(self) -> float | None:
        pos = self.tp + self.fn
        return self.tp / pos if pos else None

    @property
    def f1(self) -> float | None:
        return f1_score(self.tp, self.fp, self.fn)

    def as_row(self) -> dict:
        row = asdict(self)
        row.update(accuracy=self.accuracy, tnr=self.tnr, tpr=self.tpr, f1=self.f1)
        return row


@dataclass(frozen=True)
class BoxStats:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    count: int


def confusion_counts(G, Z):
    G = np.asarray(G).astype(bool)
    Z = np.asarray(Z).astype(bool)
    if G.shape != Z.shape:
        raise InvalidSizeError(f"ground truth {G.shape} and decisions {Z.shape} differ in shape")
    tp = (G & Z).sum(axis=0)
    tn = (~G & ~Z).sum(axis=0)
    fp = (~G & Z).sum(axis=0)
    fn = (G & ~Z).sum(axis=0)
    return tp, tn, fp, fn


def per_node_metrics(G, Z) -> list[NodeMetrics]:
    """``G`` and ``Z`` are slot-by-node 0/1 matrices."""
    G = np.atleast_2d(G)
    Z = np.atleast_2d(Z)
    tp, tn, fp, fn = confusion_counts(G, Z)
    return [NodeMetrics(i, int(tp[i]), int(tn[i]), int(fp[i]), int(fn[i])) for i in range(G.shape[1])]


def f1_score(tp: int, fp: int, fn: int) -> float | None:
    """``TP / (TP + (FP + FN) / 2)``; ``None`` when all three are zero."""
    if min(tp, fp, fn) < 0:
        raise ValueError("counts must be non-negative")
    denom = tp + 0.5 * (fp + fn)
    return tp / denom if denom else None


def defined(values) -> list[float]:
    return [float(v) for v in values if v is not None and np.isfinite(v)]


def box_stats(values) -> BoxStats:
    """Five-number summary. Quartiles interpolate linearly between closest
    ranks (the ``linear`` quantile method, position ``p * (m - 1)``)."""
    v = defined(values)
    if not v:
        raise EmptyMetricError("no defined values to summarise")
    q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75], method="linear")
    return BoxStats(min(v), float(q1), float(med), float(q3), max(v), len(v))


def _mean(values):
    v = defined(values)
    return float(np.mean(v)) if v else None


def _median(values):
    v = defined(values)
    return float(np.median(v)) if v else None


def aggregate(metrics: Sequence[NodeMetrics]) -> dict:
    """Macro (per-node mean and median over defined nodes) and pooled
    (all slot-node pairs) summaries."""
    tp = sum(m.tp for m in metrics)
    tn = sum(m.tn for m in metrics)
    fp = sum(m.fp for m in metrics)
    fn = sum(m.fn for m in metrics)
    pooled = NodeMetrics(-1, tp, tn, fp, fn)
    out = {"tp": tp, "tn": tn, "fp": fp, "fn": fn}
    for name in ("accuracy", "tnr", "tpr", "f1"):
        vals = [getattr(m, name) for m in metrics]
        out[f"macro_mean_{name}"] = _mean(vals)
        out[f"macro_median_{name}"] = _median(vals)
        out[f"pooled_{name}"] = getattr(pooled, name)
        out[f"defined_{name}"] = len(defined(vals))
    return out


@dataclass(frozen=True)
class GammaRow:
    gamma: float
    summary: dict
    nodes: list


def gamma_sweep(L, G, gammas: Sequence[float]) -> list[GammaRow]:
    """Re-threshold a slot-by-node ratio matrix at every ``gamma``."""
    if len(gammas) == 0:
        raise ValueError("need at least one gamma")
    L = np.asarray(L, dtype=float)
    rows = []
    for g in gammas:
        nodes = per_node_metrics(G, (L > g).astype(np.int8))
        rows.append(GammaRow(float(g), aggregate(nodes), nodes))
    return rows
