"""Seeded botnet traces for desk-scale experiments.

Every node sends a Poisson number of packets per slot. Benign traffic
favours popular nodes (Zipf weights with exponent ``benign_skew`` over a
seeded ranking, 0 = uniform); compromised nodes send ``attack_rate_factor``
times more packets to uniformly chosen other nodes, each an attack with
probability ``attack_fraction``.
At the end of each slot, a susceptible benign node whose cumulative share
of attack packets received exceeds ``infection_threshold`` turns
compromised. A seeded ``susceptible_fraction`` of the nodes outside the
initial set is susceptible; the rest never turn.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .traffic import PacketRecord

NEVER = -1


@dataclass(frozen=True)
class SynthConfig:
    seed: int
    n_nodes: int = 20
    tau: float = 10.0
    n_slots: int = 200
    initial_compromised: tuple[int, ...] = (0, 1, 2)
    packets_per_slot: float = 10.0
    infection_threshold: float = 0.3
    attack_fraction: float = 1.0
    attack_rate_factor: float = 3.0
    onset_slot: int = 1  # first slot in which the initial set attacks
    benign_skew: float = 0.0
    susceptible_fraction: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "initial_compromised", tuple(int(i) for i in self.initial_compromised))
        if self.seed is None:
            raise ConfigError("a seed is required")
        if self.n_nodes < 2:
            raise ConfigError(f"need at least 2 nodes, got {self.n_nodes}")
        if not self.tau > 0 or self.n_slots < 1:
            raise ConfigError("slot length and slot count must be positive")
        if not self.packets_per_slot > 0 or not self.attack_rate_factor > 0:
            raise ConfigError("packet rates must be positive")
        if not 0 <= self.infection_threshold <= 1 or not 0 <= self.attack_fraction <= 1:
            raise ConfigError("threshold and attack fraction must lie in [0, 1]")
        if not 0 <= self.susceptible_fraction <= 1:
            raise ConfigError("susceptible fraction must lie in [0, 1]")
        if self.benign_skew < 0:
            raise ConfigError("benign skew must be non-negative")
        if not 1 <= self.onset_slot <= self.n_slots:
            raise ConfigError(f"onset slot must lie in [1, {self.n_slots}]")
        bad = [i for i in self.initial_compromised if not 0 <= i < self.n_nodes]
        if bad or len(set(self.initial_compromised)) != len(self.initial_compromised):
            raise ConfigError(f"invalid initial compromised set {self.initial_compromised}")


def node_id(i: int) -> str:
    return f"10.0.{i // 256}.{i % 256}"


def synthesize_botnet_trace(cfg: SynthConfig):
    """Returns ``(records, schedule)``.

    ``schedule[node_id]`` is the slot at whose end the node turned
    compromised (``onset_slot - 1`` for the initial set), or ``-1``.
    """
    rng = np.random.default_rng(cfg.seed)
    n, tau = cfg.n_nodes, cfg.tau
    ids = [node_id(i) for i in range(n)]
    compromised = np.zeros(n, dtype=bool)
    schedule = np.full(n, NEVER)
    recv = np.zeros(n)
    recv_attack = np.zeros(n)
    rank = rng.permutation(n)
    popularity = (rank + 1.0) ** -cfg.benign_skew
    # row i: benign destination CDF for sender i, self excluded
    P = np.tile(popularity, (n, 1))
    np.fill_diagonal(P, 0.0)
    cdf = np.cumsum(P / P.sum(axis=1, keepdims=True), axis=1)
    others = np.setdiff1d(np.arange(n), cfg.initial_compromised)
    susceptible = np.zeros(n, dtype=bool)
    susceptible[rng.permutation(others)[: int(round(cfg.susceptible_fraction * others.size))]] = True
    records: list[PacketRecord] = []
    for l in range(1, cfg.n_slots + 1):
        if l == cfg.onset_slot:
            for i in cfg.initial_compromised:
                compromised[i] = True
                schedule[i] = l - 1
        rates = np.where(compromised, cfg.packets_per_slot * cfg.attack_rate_factor, cfg.packets_per_slot)
        counts = rng.poisson(rates)
        src = np.repeat(np.arange(n), counts)
        m = src.size
        t = (l - 1) * tau + tau * rng.random(m)
        t = np.minimum(t, np.nextafter(l * tau, 0.0))
        attacker = compromised[src]
        # uniform over the other n - 1 nodes
        dst = rng.integers(0, n - 1, m)
        dst = dst + (dst >= src)
        u = rng.random(m)
        for k in np.flatnonzero(~attacker):
            dst[k] = min(int(np.searchsorted(cdf[src[k]], u[k], side="right")), n - 1)
        label = (attacker & (rng.random(m) < cfg.attack_fraction)).astype(int)
        order = np.argsort(t, kind="stable")
        for k in order:
            records.append(PacketRecord(float(t[k]), ids[src[k]], ids[dst[k]], int(label[k])))
        np.add.at(recv, dst, 1.0)
        np.add.at(recv_attack, dst, label)
        ratio = np.divide(recv_attack, recv, out=np.zeros(n), where=recv > 0)
        newly = susceptible & ~compromised & (ratio > cfg.infection_threshold)
        compromised |= newly
        schedule[newly] = l
    return records, {ids[i]: int(schedule[i]) for i in range(n)}


def write_schedule(path, schedule: dict[str, int]):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("node", "compromised_at_slot"))
        for node, slot in schedule.items():
            w.writerow((node, slot))


def read_schedule(path) -> dict[str, int]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        return {row["node"]: int(row["compromised_at_slot"]) for row in reader}
