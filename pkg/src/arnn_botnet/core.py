"""The associated random neural network: model, stationary solve, decisions.

Each network node ``i`` owns two neurons. ``X_i`` argues that the node is
compromised, ``Y_i`` that it is safe. X-neurons excite other X-neurons and
inhibit Y-neurons, and vice versa. Every ordered pair ``i != j`` splits a
fixed total rate ``W`` between excitation and inhibition, so only the
excitatory weights are stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, InvalidParameterError, InvalidSizeError

#: clamp applied to every excitation probability
EPS = 1e-6
#: damping factor of the Picard iteration
DAMPING = 0.5
#: stopping threshold on the max absolute update
TOL_FP = 1e-10
MAX_ITER = 10_000
DEFAULT_TOTAL_RATE = 1.0
#: neutral external input per unit of total rate, per other node
NEUTRAL_INPUT_FACTOR = 0.75


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ArnnModel:
    """Weights of a ``2n``-neuron network.

    ``excite_x[i, j]`` is the rate at which ``X_i`` excites ``X_j``; the
    matching inhibition of ``Y_j`` is ``total_rate - excite_x[i, j]``.
    ``excite_y`` is the same for the Y family.
    """

    total_rate: float
    excite_x: np.ndarray
    excite_y: np.ndarray

    def __post_init__(self):
        W = float(self.total_rate)
        if not np.isfinite(W) or W <= 0:
            raise InvalidParameterError(f"total rate must be positive, got {self.total_rate!r}")
        wx = _frozen(self.excite_x)
        wy = _frozen(self.excite_y)
        if wx.ndim != 2 or wx.shape[0] != wx.shape[1] or wx.shape != wy.shape:
            raise InvalidSizeError(f"weight matrices must be square and equal-shaped, got {wx.shape} and {wy.shape}")
        if wx.shape[0] < 2:
            raise InvalidSizeError(f"need at least 2 nodes, got {wx.shape[0]}")
        for name, m in (("excite_x", wx), ("excite_y", wy)):
            if not np.all(np.isfinite(m)):
                raise InvalidParameterError(f"{name} has non-finite entries")
            if np.any(np.diag(m) != 0.0):
                raise InvalidParameterError(f"{name} must have a zero diagonal")
            if m.min() < 0.0 or m.max() > W:
                raise InvalidParameterError(f"{name} entries must lie in [0, {W}]")
        object.__setattr__(self, "total_rate", W)
        object.__setattr__(self, "excite_x", wx)
        object.__setattr__(self, "excite_y", wy)

    @property
    def n(self) -> int:
        return self.excite_x.shape[0]

    @property
    def inhibit_x(self) -> np.ndarray:
        """Rates at which ``X_i`` inhibits ``Y_j`` (zero diagonal)."""
        m = self.total_rate - self.excite_x
        np.fill_diagonal(m, 0.0)
        return m

    @property
    def inhibit_y(self) -> np.ndarray:
        m = self.total_rate - self.excite_y
        np.fill_diagonal(m, 0.0)
        return m

    def replace(self, excite_x=None, excite_y=None) -> "ArnnModel":
        return ArnnModel(
            self.total_rate,
            self.excite_x if excite_x is None else excite_x,
            self.excite_y if excite_y is None else excite_y,
        )


@dataclass(frozen=True)
class ExternalInputs:
    """Local detector outputs feeding the network.

    ``attack`` excites ``X_i`` and inhibits ``Y_i``; ``safe`` does the
    opposite.
    """

    attack: np.ndarray
    safe: np.ndarray

    def __post_init__(self):
        a = _frozen(self.attack)
        s = _frozen(self.safe)
        if a.ndim != 1 or a.shape != s.shape:
            raise InvalidSizeError(f"inputs must be equal-length vectors, got {a.shape} and {s.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(s))):
            raise InvalidParameterError("inputs must be finite")
        if a.min(initial=0.0) < 0 or s.min(initial=0.0) < 0:
            raise InvalidParameterError("inputs must be non-negative")
        object.__setattr__(self, "attack", a)
        object.__setattr__(self, "safe", s)

    @property
    def n(self) -> int:
        return self.attack.shape[0]

    @classmethod
    def from_attack_ratio(cls, ratio) -> "ExternalInputs":
        """Inputs used for training and inference: ``(A, 1 - A)``."""
        ratio = np.asarray(ratio, dtype=float)
        return cls(ratio, 1.0 - ratio)

    @classmethod
    def neutral(cls, n: int, total_rate: float = DEFAULT_TOTAL_RATE) -> "ExternalInputs":
        v = np.full(n, NEUTRAL_INPUT_FACTOR * total_rate * (n - 1))
        return cls(v, v)


@dataclass(frozen=True)
class StateProbabilities:
    """Stationary excitation probabilities of the X and Y neurons.

    ``residual`` is the largest fixed-point equation error at the returned
    state, before clamping the right-hand side.
    """

    x_excited: np.ndarray
    y_excited: np.ndarray
    residual: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        object.__setattr__(self, "x_excited", _frozen(self.x_excited))
        object.__setattr__(self, "y_excited", _frozen(self.y_excited))


@dataclass(frozen=True)
class DecisionVector:
    compromised: np.ndarray  # 0/1 per node
    ratio: np.ndarray
    gamma: float = field(default=1.0)


def init_neutral(n: int, total_rate: float = DEFAULT_TOTAL_RATE) -> ArnnModel:
    """Model of total ignorance: every off-diagonal weight is ``total_rate / 2``.

    Together with :meth:`ExternalInputs.neutral` its fixed point is exactly
    one half everywhere.
    """
    if int(n) != n or n < 2:
        raise InvalidSizeError(f"need at least 2 nodes, got {n}")
    if not total_rate > 0:
        raise InvalidParameterError(f"total rate must be positive, got {total_rate}")
    w = np.full((n, n), 0.5 * total_rate)
    np.fill_diagonal(w, 0.0)
    return ArnnModel(total_rate, w, w.copy())


def _check_inputs(model: ArnnModel, inputs: ExternalInputs):
    if inputs.n != model.n:
        raise InvalidSizeError(f"inputs have length {inputs.n}, model has {model.n} nodes")


def fixed_point_map(model: ArnnModel, inputs: ExternalInputs, Q, q):
    """Right-hand sides of the ``2n`` stationary equations.

    Returns ``(F_Q, F_q, D, d)`` where ``D`` and ``d`` are the denominators
    of the X and Y equations.
    """
    W = model.total_rate
    n = model.n
    wx, wy = model.excite_x, model.excite_y
    Lam, lam = inputs.attack, inputs.safe
    ex_x = wx.T @ Q
    ex_y = wy.T @ q
    # sum over j != i of (W - w_ji) * v_j; weight diagonals are zero
    inh_into_x = W * (q.sum() - q) - ex_y
    inh_into_y = W * (Q.sum() - Q) - ex_x
    D = lam + (n - 1) * W + inh_into_x
    d = Lam + (n - 1) * W + inh_into_y
    return (Lam + ex_x) / D, (lam + ex_y) / d, D, d


def fixed_point_residual(model: ArnnModel, inputs: ExternalInputs, states: StateProbabilities) -> float:
    Q, q = states.x_excited, states.y_excited
    FQ, Fq, _, _ = fixed_point_map(model, inputs, Q, q)
    return float(max(np.abs(FQ - Q).max(), np.abs(Fq - q).max()))


def _coupling(model: ArnnModel) -> np.ndarray:
    """``[Q, q] @ M`` gives excitation into X, excitation into Y, inhibition
    into X and inhibition into Y, side by side (each length n)."""
    n = model.n
    M = np.zeros((2 * n, 4 * n))
    M[:n, :n] = model.excite_x
    M[n:, n:2 * n] = model.excite_y
    M[n:, 2 * n:3 * n] = model.inhibit_y
    M[:n, 3 * n:] = model.inhibit_x
    return M


def solve_fixed_point(
    model: ArnnModel,
    inputs: ExternalInputs,
    *,
    damping: float = DAMPING,
    tol: float = TOL_FP,
    max_iter: int = MAX_ITER,
    eps: float = EPS,
) -> StateProbabilities:
    """Damped Picard iteration from the all-one-half state.

    Iterates are clamped to ``[eps, 1 - eps]`` at every step.

    Raises
    ------
    ConvergenceError
        If the update has not dropped below ``tol`` after ``max_iter`` steps.
    """
    _check_inputs(model, inputs)
    n = model.n
    W = model.total_rate
    M = _coupling(model)
    num0 = np.concatenate([inputs.attack, inputs.safe])
    den0 = np.concatenate([inputs.safe, inputs.attack]) + (n - 1) * W
    x = np.full(2 * n, 0.5)
    step = np.inf
    for it in range(1, max_iter + 1):
        v = x @ M
        fx = (num0 + v[: 2 * n]) / (den0 + v[2 * n:])
        x_new = (1 - damping) * x + damping * fx
        np.clip(x_new, eps, 1 - eps, out=x_new)
        step = np.abs(x_new - x).max()
        x = x_new
        if not step < tol:
            if not np.isfinite(step):
                break
            continue
        states = StateProbabilities(x[:n], x[n:], iterations=it)
        return StateProbabilities(x[:n], x[n:], fixed_point_residual(model, inputs, states), it)
    raise ConvergenceError("fixed point did not converge", float(step), max_iter)


def decision_ratio(states: StateProbabilities) -> np.ndarray:
    """``Q (1 - q) / (q (1 - Q))``; above 1 exactly when ``Q > q``."""
    Q, q = states.x_excited, states.y_excited
    return Q * (1.0 - q) / (q * (1.0 - Q))


def classify(states: StateProbabilities, gamma: float) -> DecisionVector:
    if not gamma > 0:
        raise InvalidParameterError(f"gamma must be positive, got {gamma}")
    L = decision_ratio(states)
    return DecisionVector((L > gamma).astype(np.int8), L, float(gamma))


def stationary_probability(states: StateProbabilities, H, h) -> float:
    """Product-form probability that X-queues hold ``H`` and Y-queues ``h``."""
    Q, q = states.x_excited, states.y_excited
    H = np.asarray(H)
    h = np.asarray(h)
    if H.shape != Q.shape or h.shape != q.shape:
        raise InvalidSizeError("state vectors must match the number of nodes")
    if np.any(H < 0) or np.any(h < 0):
        raise InvalidParameterError("queue lengths must be non-negative")
    return float(np.prod(Q**H * (1 - Q) * q**h * (1 - q)))
