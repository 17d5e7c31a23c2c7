"""Exact gradient learning for the ARNN.

Derivatives of the stationary probabilities come from differentiating the
fixed-point equations implicitly. With row vectors, a perturbation of
``excite_x[U, V]`` obeys::

    dQ = dQ @ Bx - dq @ Cyx + (Q_U / D_V) e_V
    dq = dq @ By - dQ @ Gxy + (Q_U q_V / d_V) e_V

where ``Bx[i, j] = Wx[i, j] / D_j``, ``Cyx[i, j] = Q_j (W - Wy[i, j]) / D_j``,
``By[i, j] = Wy[i, j] / d_j`` and ``Gxy[i, j] = q_j (W - Wx[i, j]) / d_j``.
Eliminating ``dq`` leaves one n-by-n system whose matrix does not depend on
``(U, V)``, so two inverses per family serve every weight. Perturbing
``excite_y`` is the same system with the X and Y roles swapped.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import (
    ArnnModel,
    DecisionVector,
    ExternalInputs,
    StateProbabilities,
    classify,
    fixed_point_map,
    solve_fixed_point,
)
from .errors import ConvergenceError, InvalidParameterError, InvalidSizeError, NumericError, SingularMatrixError

log = logging.getLogger(__name__)

RCOND_MIN = 1e-12


@dataclass(frozen=True)
class TrainingSample:
    attack_ratio: np.ndarray
    compromised_ratio: np.ndarray
    slot: int = 0

    def __post_init__(self):
        a = np.array(self.attack_ratio, dtype=float)
        k = np.array(self.compromised_ratio, dtype=float)
        if a.ndim != 1 or a.shape != k.shape:
            raise InvalidSizeError(f"sample vectors must have equal length, got {a.shape} and {k.shape}")
        if np.any((a < 0) | (a > 1)) or np.any((k < 0) | (k > 1)):
            raise InvalidParameterError("sample ratios must lie in [0, 1]")
        a.setflags(write=False)
        k.setflags(write=False)
        object.__setattr__(self, "attack_ratio", a)
        object.__setattr__(self, "compromised_ratio", k)

    @property
    def inputs(self) -> ExternalInputs:
        return ExternalInputs.from_attack_ratio(self.attack_ratio)


@dataclass(frozen=True)
class TrainConfig:
    eta: float = 0.1
    epochs: int = 20
    gamma: float = 0.98

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidParameterError(f"learning rate must be positive, got {self.eta}")
        if int(self.epochs) != self.epochs or self.epochs < 1:
            raise InvalidParameterError(f"epochs must be a positive integer, got {self.epochs}")
        if not self.gamma > 0:
            raise InvalidParameterError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class GradientPair:
    d_excite_x: np.ndarray
    d_excite_y: np.ndarray


def inverse_checked(M: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Dense LU inverse (LAPACK, partial pivoting) with a conditioning guard.

    The reciprocal 1-norm condition number is computed exactly from the
    inverse, which is needed anyway.
    """
    try:
        inv = np.linalg.inv(M)
    except np.linalg.LinAlgError:
        raise SingularMatrixError(f"{what} is singular", 0.0) from None
    denom = np.linalg.norm(M, 1) * np.linalg.norm(inv, 1)
    rcond = 1.0 / denom if np.isfinite(denom) and denom > 0 else 0.0
    if rcond < RCOND_MIN:
        raise SingularMatrixError(f"{what} is numerically singular", rcond)
    return inv


@dataclass(frozen=True)
class GradientWorkspace:
    """Per-sample coefficient matrices and the four inverses.

    ``self_x``, ``y_into_x``, ``self_y`` and ``x_into_y`` are the matrices
    ``Bx``, ``Cyx``, ``By`` and ``Gxy`` of the module docstring. The system
    for ``excite_y`` perturbations uses the same four with roles swapped,
    so they are not stored twice.
    """

    x_excited: np.ndarray
    y_excited: np.ndarray
    x_den: np.ndarray
    y_den: np.ndarray
    self_x: np.ndarray
    y_into_x: np.ndarray
    self_y: np.ndarray
    x_into_y: np.ndarray
    inv_self_y: np.ndarray  # (I - By)^-1
    inv_main_x: np.ndarray  # (I - Bx - Gxy (I - By)^-1 Cyx)^-1
    inv_self_x: np.ndarray  # (I - Bx)^-1
    inv_main_y: np.ndarray  # (I - By - Cyx (I - Bx)^-1 Gxy)^-1

    @property
    def n(self) -> int:
        return self.x_den.shape[0]


def build_workspace(model: ArnnModel, inputs: ExternalInputs, states: StateProbabilities) -> GradientWorkspace:
    W = model.total_rate
    Q, q = states.x_excited, states.y_excited
    _, _, D, d = fixed_point_map(model, inputs, Q, q)
    wx, wy = model.excite_x, model.excite_y
    self_x = wx / D[None, :]
    y_into_x = Q[None, :] * model.inhibit_y / D[None, :]
    self_y = wy / d[None, :]
    x_into_y = q[None, :] * model.inhibit_x / d[None, :]
    eye = np.eye(model.n)
    inv_self_y = inverse_checked(eye - self_y, "I - By")
    inv_main_x = inverse_checked(eye - self_x - x_into_y @ inv_self_y @ y_into_x, "X-family system")
    inv_self_x = inverse_checked(eye - self_x, "I - Bx")
    inv_main_y = inverse_checked(eye - self_y - y_into_x @ inv_self_x @ x_into_y, "Y-family system")
    return GradientWorkspace(
        Q, q, D, d, self_x, y_into_x, self_y, x_into_y,
        inv_self_y, inv_main_x, inv_self_x, inv_main_y,
    )


def _family(ws: GradientWorkspace, which: str):
    """Role assignment: (primary value, primary den, secondary value,
    secondary den, secondary-in-primary coupling, primary-in-secondary
    coupling, inv of secondary self block, inv of main block)."""
    if which == "x":
        return (ws.x_excited, ws.x_den, ws.y_excited, ws.y_den,
                ws.y_into_x, ws.x_into_y, ws.inv_self_y, ws.inv_main_x)
    return (ws.y_excited, ws.y_den, ws.x_excited, ws.x_den,
            ws.x_into_y, ws.y_into_x, ws.inv_self_x, ws.inv_main_y)


def _sensitivity_rows(ws: GradientWorkspace, which: str, V: int | None = None):
    """Rows ``r_V`` and ``s_V`` with d(primary) = p_U r_V, d(secondary) = p_U s_V.

    With ``V=None`` returns the full matrices (rows indexed by V).
    """
    p, p_den, s, s_den, c_sp, c_ps, inv_s, inv_main = _family(ws, which)
    if V is None:
        T = -(s / s_den)[:, None] * (inv_s @ c_sp)
        T[np.diag_indices_from(T)] += 1.0 / p_den
        R = T @ inv_main
        S = -(R @ c_ps) @ inv_s + (s / s_den)[:, None] * inv_s
        return R, S
    t = -(s[V] / s_den[V]) * (inv_s[V] @ c_sp)
    t[V] += 1.0 / p_den[V]
    r = t @ inv_main
    sv = -(r @ c_ps) @ inv_s + (s[V] / s_den[V]) * inv_s[V]
    return r, sv


def state_derivatives(ws: GradientWorkspace, U: int, V: int):
    """Derivatives of both probability vectors w.r.t. one weight of each family.

    Returns ``(dQ/dWx[U,V], dq/dWx[U,V], dQ/dWy[U,V], dq/dWy[U,V])``.
    """
    n = ws.n
    if not (0 <= U < n and 0 <= V < n) or U == V:
        raise InvalidParameterError(f"need distinct node indices in [0, {n}), got ({U}, {V})")
    rx, sx = _sensitivity_rows(ws, "x", V)
    ry, sy = _sensitivity_rows(ws, "y", V)
    QU, qU = ws.x_excited[U], ws.y_excited[U]
    return QU * rx, QU * sx, qU * sy, qU * ry


def _residuals(states: StateProbabilities, sample: TrainingSample):
    K = sample.compromised_ratio
    return states.x_excited - K, states.y_excited - (1.0 - K)


def sample_cost(states: StateProbabilities, sample: TrainingSample) -> float:
    eQ, eq = _residuals(states, sample)
    return 0.5 * float(eQ @ eQ + eq @ eq)


def cost(model: ArnnModel, batch: Sequence[TrainingSample]) -> float:
    """Half the summed squared error of ``(Q, q)`` against ``(K, 1 - K)``."""
    if len(batch) == 0:
        raise InvalidParameterError("batch must be non-empty")
    return float(sum(sample_cost(solve_fixed_point(model, s.inputs), s) for s in batch))


def gradient_from_workspace(ws: GradientWorkspace, sample: TrainingSample) -> GradientPair:
    Q, q = ws.x_excited, ws.y_excited
    eQ = Q - sample.compromised_ratio
    eq = q - (1.0 - sample.compromised_ratio)
    Rx, Sx = _sensitivity_rows(ws, "x")
    Ry, Sy = _sensitivity_rows(ws, "y")
    gx = np.outer(Q, Rx @ eQ + Sx @ eq)
    gy = np.outer(q, Ry @ eq + Sy @ eQ)
    np.fill_diagonal(gx, 0.0)
    np.fill_diagonal(gy, 0.0)
    return GradientPair(gx, gy)


def cost_gradient(model: ArnnModel, sample: TrainingSample) -> GradientPair:
    """Gradient of one sample's cost w.r.t. both excitatory weight matrices. O(n^3)."""
    inputs = sample.inputs
    states = solve_fixed_point(model, inputs)
    return gradient_from_workspace(build_workspace(model, inputs, states), sample)


def sgd_step(model: ArnnModel, sample: TrainingSample, eta: float) -> ArnnModel:
    """One projected gradient step; weights are clipped back into ``[0, W]``."""
    if eta < 0:
        raise InvalidParameterError(f"learning rate must be non-negative, got {eta}")
    if eta == 0:
        return model
    g = cost_gradient(model, sample)
    W = model.total_rate
    wx = np.clip(model.excite_x - eta * g.d_excite_x, 0.0, W)
    wy = np.clip(model.excite_y - eta * g.d_excite_y, 0.0, W)
    np.fill_diagonal(wx, 0.0)
    np.fill_diagonal(wy, 0.0)
    return model.replace(wx, wy)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    cost: float
    skipped: int  # samples whose fixed point failed during the epoch's updates
    cost_skipped: int = 0  # samples left out of ``cost``


def _batch_cost(model, samples):
    total, missing = 0.0, 0
    for s in samples:
        try:
            total += sample_cost(solve_fixed_point(model, s.inputs), s)
        except ConvergenceError:
            missing += 1
    return total, missing


def _run_epochs(model, samples, eta, epochs, trace=None, epoch_offset=0):
    for e in range(epochs):
        skipped = 0
        for s in samples:
            try:
                model = sgd_step(model, s, eta)
            except NumericError as exc:
                skipped += 1
                log.warning("skipping slot %s: %s", s.slot, exc)
        if trace is not None:
            c, missing = _batch_cost(model, samples)
            trace.append(EpochRecord(epoch_offset + e + 1, c, skipped, missing))
    return model


def train_offline(model: ArnnModel, train: Sequence[TrainingSample], cfg: TrainConfig):
    """Per-sample SGD over ``train`` in slot order for ``cfg.epochs`` epochs.

    Returns the final model and one :class:`EpochRecord` per epoch.
    """
    if len(train) == 0:
        raise InvalidParameterError("training set is empty")
    trace: list[EpochRecord] = []
    model = _run_epochs(model, list(train), cfg.eta, cfg.epochs, trace)
    return model, trace


@dataclass
class OnlineStep:
    slot: int
    decision: object
    model: object
    trained: bool = False


@dataclass
class OnlineResult:
    steps: list[OnlineStep] = field(default_factory=list)

    @property
    def training_slots(self) -> list[int]:
        return [s.slot for s in self.steps if s.trained]

    @property
    def final_model(self):
        return self.steps[-1].model if self.steps else None


def run_prequential(
    model,
    stream: Iterable,
    predict: Callable,
    fit: Callable,
    window: int,
) -> OnlineResult:
    """Predict every slot, then refit on the last ``window`` slots when
    ``slot % window == 0``. ``fit(model, samples)`` returns the new model."""
    if int(window) != window or window < 1:
        raise InvalidParameterError(f"window must be a positive integer, got {window}")
    out = OnlineResult()
    recent: list = []
    for sample in stream:
        decision = predict(model, sample)
        recent.append(sample)
        if len(recent) > window:
            recent.pop(0)
        trained = sample.slot % window == 0
        if trained:
            model = fit(model, list(recent))
        out.steps.append(OnlineStep(sample.slot, decision, model, trained))
    return out


def predict_arnn(model: ArnnModel, sample: TrainingSample, gamma: float) -> DecisionVector:
    return classify(solve_fixed_point(model, sample.inputs), gamma)


def train_online(
    model: ArnnModel,
    stream: Iterable[TrainingSample],
    window: int = 6,
    epochs: int = 3,
    eta: float = 0.1,
    gamma: float = 0.98,
) -> OnlineResult:
    """Prequential loop: decide each slot with the current weights, then
    train on the trailing window without reinitialising.

    ``epochs=0`` is accepted and yields pure inference.
    """
    if epochs < 0:
        raise InvalidParameterError(f"epochs must be non-negative, got {epochs}")

    def predict(m, s):
        try:
            return predict_arnn(m, s, gamma)
        except ConvergenceError as exc:
            log.warning("no decision for slot %s: %s", s.slot, exc)
            return None

    return run_prequential(
        model, stream, predict,
        lambda m, batch: _run_epochs(m, batch, eta, epochs),
        window,
    )
