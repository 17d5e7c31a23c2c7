"""Offline (fixed training window) and online (prequential) protocols for
the ARNN and the MLP baseline, evaluated per node."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import ArnnModel, DEFAULT_TOTAL_RATE, init_neutral, solve_fixed_point, decision_ratio
from .errors import ConvergenceError
from .learn import EpochRecord, TrainConfig, train_offline, train_online
from .metrics import NodeMetrics, per_node_metrics
from .mlp import init_mlp, mlp_decide, mlp_forward, mlp_train, mlp_train_online
from .traffic import DEFAULT_HALF_WIDTH, DEFAULT_THETA, SlotFeatures, select_train_window, stack

log = logging.getLogger(__name__)

DEFAULT_GAMMA = 0.98
ARNN_OFFLINE_EPOCHS = 20
MLP_OFFLINE_EPOCHS = 1000
ARNN_ONLINE_EPOCHS = 3
MLP_ONLINE_EPOCHS = 100
ONLINE_WINDOW = 6


@dataclass
class RunResult:
    """Decisions on the evaluated slots and their per-node metrics.

    ``score`` holds the ARNN decision ratio or the MLP's predicted ratio.
    """

    model_name: str
    model: object
    slots: list[int]
    score: np.ndarray
    Z: np.ndarray
    G: np.ndarray
    metrics: list[NodeMetrics]
    trace: list[EpochRecord] = field(default_factory=list)
    l_star: int | None = None
    train_slots: list[int] = field(default_factory=list)
    training_events: list[int] = field(default_factory=list)
    failed_slots: list[int] = field(default_factory=list)


def arnn_scores(model: ArnnModel, features: Sequence[SlotFeatures], gamma: float):
    """Decision ratios and decisions per slot; slots whose fixed point fails
    get ratio NaN and decision 0."""
    L = np.full((len(features), model.n), np.nan)
    failed = []
    for k, f in enumerate(features):
        try:
            L[k] = decision_ratio(solve_fixed_point(model, f.to_sample().inputs))
        except ConvergenceError as exc:
            failed.append(f.slot)
            log.warning("slot %s: %s", f.slot, exc)
    Z = np.where(np.isnan(L), 0, L > gamma).astype(np.int8)
    return L, Z, failed


def offline_arnn(features, *, total_rate=DEFAULT_TOTAL_RATE, cfg: TrainConfig | None = None,
                 half_width=DEFAULT_HALF_WIDTH) -> RunResult:
    cfg = cfg or TrainConfig(epochs=ARNN_OFFLINE_EPOCHS)
    train, test, l_star = select_train_window(features, half_width)
    n = len(features[0].attack_ratio)
    model, trace = train_offline(init_neutral(n, total_rate), [f.to_sample() for f in train], cfg)
    L, Z, failed = arnn_scores(model, test, cfg.gamma)
    G = stack(test)[2]
    return RunResult("ARNN", model, [f.slot for f in test], L, Z, G, per_node_metrics(G, Z), trace,
                     l_star, [f.slot for f in train], failed_slots=failed)


def offline_mlp(features, *, seed: int, eta=0.1, epochs=MLP_OFFLINE_EPOCHS, theta=DEFAULT_THETA,
                half_width=DEFAULT_HALF_WIDTH) -> RunResult:
    train, test, l_star = select_train_window(features, half_width)
    n = len(features[0].attack_ratio)
    model, trace = mlp_train(init_mlp(n, seed), [f.to_sample() for f in train], eta, epochs)
    K_hat = np.array([mlp_forward(model, f.attack_ratio) for f in test])
    Z = mlp_decide(K_hat, theta)
    G = stack(test)[2]
    return RunResult("MLP", model, [f.slot for f in test], K_hat, Z, G, per_node_metrics(G, Z), trace,
                     l_star, [f.slot for f in train])


def online_arnn(features, *, total_rate=DEFAULT_TOTAL_RATE, window=ONLINE_WINDOW, epochs=ARNN_ONLINE_EPOCHS,
                eta=0.1, gamma=DEFAULT_GAMMA) -> RunResult:
    n = len(features[0].attack_ratio)
    res = train_online(init_neutral(n, total_rate), [f.to_sample() for f in features], window, epochs, eta, gamma)
    L = np.full((len(features), n), np.nan)
    failed = []
    for k, step in enumerate(res.steps):
        if step.decision is None:
            failed.append(step.slot)
        else:
            L[k] = step.decision.ratio
    Z = np.where(np.isnan(L), 0, L > gamma).astype(np.int8)
    G = stack(features)[2]
    return RunResult("ARNN", res.final_model, [f.slot for f in features], L, Z, G, per_node_metrics(G, Z),
                     training_events=res.training_slots, failed_slots=failed)


def online_mlp(features, *, seed: int, window=ONLINE_WINDOW, epochs=MLP_ONLINE_EPOCHS, eta=0.1,
               theta=DEFAULT_THETA) -> RunResult:
    n = len(features[0].attack_ratio)
    res = mlp_train_online(init_mlp(n, seed), [f.to_sample() for f in features], window, epochs, eta, theta)
    K_hat = np.array([s.decision[1] for s in res.steps])
    Z = np.array([s.decision[0] for s in res.steps])
    G = stack(features)[2]
    return RunResult("MLP", res.final_model, [f.slot for f in features], K_hat, Z, G, per_node_metrics(G, Z),
                     training_events=res.training_slots)
