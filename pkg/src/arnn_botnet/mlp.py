"""Feed-forward baseline: ``A -> K_hat`` through three hidden layers of
width ``n`` and a sigmoid everywhere, trained by plain per-sample SGD on
half the squared error."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError, InvalidSizeError
from .learn import EpochRecord, TrainingSample, run_prequential

N_HIDDEN = 3


def sigmoid(z):
    # split form avoids overflow in exp for large |z|
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class MlpModel:
    weights: tuple  # weights[k] has shape (out, in)
    biases: tuple

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise InvalidSizeError("need one bias vector per weight matrix")
        prev = self.weights[0].shape[1]
        for W, b in zip(self.weights, self.biases):
            if W.shape[1] != prev or b.shape != (W.shape[0],):
                raise InvalidSizeError("inconsistent layer dimensions")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise InvalidParameterError("non-finite parameters")
            prev = W.shape[0]

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [W.shape[0] for W in self.weights]


def init_mlp(n: int, seed: int, n_hidden: int = N_HIDDEN) -> MlpModel:
    """Uniform init in ``+-1/sqrt(fan_in)``."""
    if n < 1:
        raise InvalidSizeError(f"need at least one node, got {n}")
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(n)
    Ws, bs = [], []
    for _ in range(n_hidden + 1):
        Ws.append(rng.uniform(-bound, bound, (n, n)))
        bs.append(rng.uniform(-bound, bound, n))
    return MlpModel(tuple(Ws), tuple(bs))


def zeros_mlp(n: int, n_hidden: int = N_HIDDEN) -> MlpModel:
    return MlpModel(tuple(np.zeros((n, n)) for _ in range(n_hidden + 1)),
                    tuple(np.zeros(n) for _ in range(n_hidden + 1)))


def _forward(model: MlpModel, x):
    acts = [np.asarray(x, dtype=float)]
    for W, b in zip(model.weights, model.biases):
        acts.append(sigmoid(W @ acts[-1] + b))
    return acts


def mlp_forward(model: MlpModel, A) -> np.ndarray:
    return _forward(model, A)[-1]


def mlp_loss(model: MlpModel, samples: Sequence[TrainingSample]) -> float:
    total = 0.0
    for s in samples:
        r = mlp_forward(model, s.attack_ratio) - s.compromised_ratio
        total += 0.5 * float(r @ r)
    return total


def mlp_gradients(model: MlpModel, A, K):
    """Backprop of ``0.5 * ||K_hat - K||^2``; returns ``(dWs, dbs)``."""
    acts = _forward(model, A)
    delta = (acts[-1] - K) * acts[-1] * (1 - acts[-1])
    dWs, dbs = [], []
    for k in range(len(model.weights) - 1, -1, -1):
        dWs.append(np.outer(delta, acts[k]))
        dbs.append(delta)
        if k:
            delta = (model.weights[k].T @ delta) * acts[k] * (1 - acts[k])
    return dWs[::-1], dbs[::-1]


def _sgd(model: MlpModel, s: TrainingSample, eta: float) -> MlpModel:
    dWs, dbs = mlp_gradients(model, s.attack_ratio, s.compromised_ratio)
    return MlpModel(
        tuple(W - eta * g for W, g in zip(model.weights, dWs)),
        tuple(b - eta * g for b, g in zip(model.biases, dbs)),
    )


def mlp_train(model: MlpModel, samples: Sequence[TrainingSample], eta: float, epochs: int, trace: bool = True):
    """Per-sample SGD in the given order. Returns ``(model, epoch_trace)``."""
    if eta < 0 or epochs < 0:
        raise InvalidParameterError("eta and epochs must be non-negative")
    records = []
    for e in range(epochs):
        if eta > 0:
            for s in samples:
                model = _sgd(model, s, eta)
        if trace:
            records.append(EpochRecord(e + 1, mlp_loss(model, samples), 0))
    return model, records


def mlp_decide(K_hat, theta: float) -> np.ndarray:
    return (np.asarray(K_hat) > theta).astype(np.int8)


def mlp_train_online(model: MlpModel, stream, window: int = 6, epochs: int = 100, eta: float = 0.1,
                     theta: float = 0.3):
    """Same prequential harness as the ARNN. Decisions are ``(Z, K_hat)`` pairs."""
    def predict(m, s):
        K_hat = mlp_forward(m, s.attack_ratio)
        return mlp_decide(K_hat, theta), K_hat

    return run_prequential(model, stream, predict,
                           lambda m, batch: mlp_train(m, batch, eta, epochs, trace=False)[0], window)
