"""Labelled packet traces to per-slot, per-node ratios.

Packet CSV columns are ``t,src,dst,label``. ``t`` is in seconds, node ids
are opaque strings, and ``label`` is 1 for an attack packet. Slots are
1-based: slot ``l`` covers ``[(l - 1) tau, l tau)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import InvalidParameterError, ParseError, WindowError
from .learn import TrainingSample

PACKET_HEADER = ("t", "src", "dst", "label")
FEATURE_HEADER = ("slot", "node", "A", "K", "G")
DEFAULT_TAU = 10.0
DEFAULT_THETA = 0.3
DEFAULT_HALF_WIDTH = 12


class PacketRecord(NamedTuple):
    t: float
    src: str
    dst: str
    label: int


class NodeRegistry:
    """Dense, stable indexing of node ids in order of first appearance."""

    def __init__(self, ids: Iterable[str] = ()):
        self._index: dict[str, int] = {}
        for i in ids:
            self.add(i)

    def add(self, node_id: str) -> int:
        idx = self._index.get(node_id)
        if idx is None:
            idx = self._index[node_id] = len(self._index)
        return idx

    def index(self, node_id: str) -> int:
        return self._index[node_id]

    @property
    def ids(self) -> list[str]:
        return list(self._index)

    def __len__(self):
        return len(self._index)

    def __contains__(self, node_id):
        return node_id in self._index

    def __eq__(self, other):
        return isinstance(other, NodeRegistry) and self.ids == other.ids

    def __repr__(self):
        return f"NodeRegistry({self._index!r})"

    def as_dict(self) -> dict[str, int]:
        return dict(self._index)


@dataclass(frozen=True)
class SlotFeatures:
    slot: int
    attack_ratio: np.ndarray
    compromised_ratio: np.ndarray
    ground_truth: np.ndarray | None = None

    def to_sample(self) -> TrainingSample:
        return TrainingSample(self.attack_ratio, self.compromised_ratio, self.slot)


def parse_packets(path) -> tuple[list[PacketRecord], NodeRegistry]:
    """Read a packet CSV; records come back sorted by time (stable)."""
    path = Path(path)
    records: list[PacketRecord] = []
    registry = NodeRegistry()
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return records, registry
        if tuple(h.strip() for h in header) != PACKET_HEADER:
            raise ParseError(f"expected header {','.join(PACKET_HEADER)}, got {','.join(header)}", 1, path)
        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", line, path)
            t_s, src, dst, a_s = (x.strip() for x in row)
            try:
                t = float(t_s)
            except ValueError:
                raise ParseError(f"bad timestamp {t_s!r}", line, path) from None
            if not math.isfinite(t) or t < 0:
                raise ParseError(f"timestamp must be finite and non-negative, got {t_s!r}", line, path)
            if a_s not in ("0", "1"):
                raise ParseError(f"label must be 0 or 1, got {a_s!r}", line, path)
            if not src or not dst:
                raise ParseError("empty node id", line, path)
            registry.add(src)
            registry.add(dst)
            records.append(PacketRecord(t, src, dst, int(a_s)))
    records.sort(key=lambda r: r.t)
    return records, registry


def write_packets(path, records: Iterable[PacketRecord]):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PACKET_HEADER)
        for r in records:
            w.writerow((repr(float(r.t)), r.src, r.dst, int(r.label)))


def slot_of(t: float, tau: float) -> int:
    return int(t // tau) + 1


def bucketize(records: Sequence[PacketRecord], tau: float = DEFAULT_TAU) -> list[list[PacketRecord]]:
    """Group records into half-open slots; empty slots are kept."""
    if not tau > 0:
        raise InvalidParameterError(f"slot length must be positive, got {tau}")
    if not records:
        return []
    n_slots = slot_of(max(r.t for r in records), tau)
    buckets: list[list[PacketRecord]] = [[] for _ in range(n_slots)]
    for r in records:
        buckets[slot_of(r.t, tau) - 1].append(r)
    return buckets


def compute_ratios(buckets: Sequence[Sequence[PacketRecord]], registry: NodeRegistry) -> list[SlotFeatures]:
    """Cumulative attack ratio (as receiver) and compromised ratio (as
    sender) at the end of every slot. Nodes with no traffic get 0."""
    n = len(registry)
    recv = np.zeros(n)
    recv_attack = np.zeros(n)
    sent = np.zeros(n)
    sent_attack = np.zeros(n)
    out = []
    for l, bucket in enumerate(buckets, start=1):
        if bucket:
            s = np.fromiter((registry.index(r.src) for r in bucket), dtype=np.intp, count=len(bucket))
            d = np.fromiter((registry.index(r.dst) for r in bucket), dtype=np.intp, count=len(bucket))
            a = np.fromiter((r.label for r in bucket), dtype=float, count=len(bucket))
            np.add.at(sent, s, 1.0)
            np.add.at(sent_attack, s, a)
            np.add.at(recv, d, 1.0)
            np.add.at(recv_attack, d, a)
        A = np.divide(recv_attack, recv, out=np.zeros(n), where=recv > 0)
        K = np.divide(sent_attack, sent, out=np.zeros(n), where=sent > 0)
        out.append(SlotFeatures(l, A, K))
    return out


def ground_truth(features: Sequence[SlotFeatures], theta: float = DEFAULT_THETA) -> list[SlotFeatures]:
    """Mark node ``i`` compromised in slot ``l`` iff ``K > theta`` (strict)."""
    if not 0.0 <= theta <= 1.0:
        raise InvalidParameterError(f"theta must lie in [0, 1], got {theta}")
    return [
        SlotFeatures(f.slot, f.attack_ratio, f.compromised_ratio, (f.compromised_ratio > theta).astype(np.int8))
        for f in features
    ]


def select_train_window(features: Sequence[SlotFeatures], half_width: int = DEFAULT_HALF_WIDTH):
    """Training slots centred on the first slot with any compromised node.

    Returns ``(train, test, l_star)``. The window is clipped to the slots
    that exist; every other slot goes to ``test``.
    """
    if half_width < 0:
        raise InvalidParameterError(f"half width must be non-negative, got {half_width}")
    l_star = next((f.slot for f in features if f.ground_truth is not None and f.ground_truth.any()), None)
    if l_star is None:
        raise WindowError("no slot contains a compromised node; cannot place the training window")
    lo, hi = l_star - half_width, l_star + half_width
    train = [f for f in features if lo <= f.slot <= hi]
    test = [f for f in features if not lo <= f.slot <= hi]
    return train, test, l_star


def features_from_packets(records, registry, tau=DEFAULT_TAU, theta=DEFAULT_THETA) -> list[SlotFeatures]:
    return ground_truth(compute_ratios(bucketize(records, tau), registry), theta)


def write_features(path, features: Sequence[SlotFeatures], registry: NodeRegistry):
    ids = registry.ids
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FEATURE_HEADER)
        for f in features:
            G = f.ground_truth if f.ground_truth is not None else np.zeros(len(ids), dtype=np.int8)
            for i, node in enumerate(ids):
                w.writerow((f.slot, node, repr(float(f.attack_ratio[i])), repr(float(f.compromised_ratio[i])), int(G[i])))


def read_features(path) -> tuple[list[SlotFeatures], NodeRegistry]:
    """Inverse of :func:`write_features`. Every slot must list every node."""
    path = Path(path)
    registry = NodeRegistry()
    rows: dict[int, dict[str, tuple[float, float, int]]] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return [], registry
        if tuple(h.strip() for h in header) != FEATURE_HEADER:
            raise ParseError(f"expected header {','.join(FEATURE_HEADER)}", 1, path)
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 5:
                raise ParseError(f"expected 5 fields, got {len(row)}", line, path)
            try:
                slot, node = int(row[0]), row[1].strip()
                A, K, G = float(row[2]), float(row[3]), int(row[4])
            except ValueError as exc:
                raise ParseError(str(exc), line, path) from None
            if not (0 <= A <= 1 and 0 <= K <= 1) or G not in (0, 1):
                raise ParseError("ratios must lie in [0, 1] and G in {0, 1}", line, path)
            registry.add(node)
            rows.setdefault(slot, {})[node] = (A, K, G)
    ids = registry.ids
    out = []
    for slot in sorted(rows):
        entry = rows[slot]
        missing = [i for i in ids if i not in entry]
        if missing:
            raise ParseError(f"slot {slot} is missing nodes {missing[:3]}", None, path)
        vals = np.array([entry[i] for i in ids])
        out.append(SlotFeatures(slot, vals[:, 0].copy(), vals[:, 1].copy(), vals[:, 2].astype(np.int8)))
    return out, registry


def stack(features: Sequence[SlotFeatures]):
    """Slot-by-node matrices ``(A, K, G)``."""
    A = np.array([f.attack_ratio for f in features])
    K = np.array([f.compromised_ratio for f in features])
    G = np.array([f.ground_truth for f in features]) if features and features[0].ground_truth is not None else None
    return A, K, G
