"""End-to-end training of hybrid models.

Classical layers are differentiated by backprop, the circuit by the shift rule;
the two meet at the measured expectations (regression side) and at the encoded
inputs (embedding side).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .classical import DenseNet, backward, flatten_grads, forward
from .embedding import Embedding
from .gradients import shift_jacobians
from .qstate import Observable, single_z_observables
from .reupload import ReuploadCircuit, expectations

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.005
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 20
    batch_size: int = 16
    seed: int = 0
    repeats: int = 5
    cosine_schedule: bool = False

    def __post_init__(self):
        for name in ("learning_rate", "epsilon", "epochs", "batch_size", "repeats"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        for name in ("beta1", "beta2"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


# ---------------------------------------------------------------------------
# loss and optimizer
# ---------------------------------------------------------------------------

def mse_loss(pred, target) -> float:
    pred, target = np.asarray(pred, dtype=float), np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise ValueError("mse of an empty vector")
    return float(np.mean((pred - target) ** 2))


def mse_grad(pred, target) -> np.ndarray:
    pred, target = np.asarray(pred, dtype=float), np.asarray(target, dtype=float)
    return 2.0 * (pred - target) / pred.size


def adamw_step(params, grads, moments, config: TrainConfig, t: int, lr: float | None = None):
    """One decoupled-weight-decay Adam update.

    ``theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)``.
    ``moments`` is ``(m, v)``; returns ``(new_params, (m, v))``.
    """
    if t < 1:
        raise ValueError("step counter starts at 1")
    lr = config.learning_rate if lr is None else lr
    params, grads = np.asarray(params, dtype=float), np.asarray(grads, dtype=float)
    m, v = moments
    m = config.beta1 * m + (1 - config.beta1) * grads
    v = config.beta2 * v + (1 - config.beta2) * grads**2
    m_hat = m / (1 - config.beta1**t)
    v_hat = v / (1 - config.beta2**t)
    new = params - lr * (m_hat / (np.sqrt(v_hat) + config.epsilon) + config.weight_decay * params)
    return new, (m, v)


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class HybridModel:
    """Embedding net -> re-uploading circuit -> regression net.

    Either classical net may be absent. Without a regression net the prediction
    is the sum of the measured expectations.
    """

    circuit: ReuploadCircuit
    embed_net: DenseNet | None = None
    regress_net: DenseNet | None = None
    measured: tuple[Observable, ...] | None = None
    noise: object = None

    def __post_init__(self):
        if self.measured is None:
            self.measured = single_z_observables(self.circuit.n_qubits)
        self.measured = tuple(self.measured)
        k = len(self.measured)
        if not 1 <= k <= self.circuit.n_qubits:
            raise ValueError(f"need 1..{self.circuit.n_qubits} measured observables, got {k}")
        if self.embed_net is not None:
            width, limit = self.embed_net.d_out, self.circuit.input_width
            if self.circuit.embedding.kind is Embedding.ANGLE and width != limit:
                raise ValueError(f"embedding net emits {width} values, circuit takes {limit}")
            if width > limit:
                raise ValueError(f"embedding net emits {width} values, circuit takes at most {limit}")
        if self.regress_net is not None and self.regress_net.d_in != k:
            raise ValueError(f"regression net takes {self.regress_net.d_in} inputs, circuit measures {k}")

    @property
    def n_classical(self) -> int:
        return sum(net.n_params for net in (self.embed_net, self.regress_net) if net is not None)

    @property
    def n_quantum(self) -> int:
        return self.circuit.n_params

    @property
    def n_params(self) -> int:
        return self.n_classical + self.n_quantum

    def get_params(self) -> np.ndarray:
        parts = []
        if self.embed_net is not None:
            parts.append(self.embed_net.get_flat())
        parts.append(self.circuit.theta.ravel())
        if self.regress_net is not None:
            parts.append(self.regress_net.get_flat())
        return np.concatenate(parts)

    def set_params(self, flat) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {flat.size}")
        pos = 0
        if self.embed_net is not None:
            k = self.embed_net.n_params
            self.embed_net.set_flat(flat[pos : pos + k])
            pos += k
        k = self.circuit.n_params
        self.circuit = self.circuit.with_theta(flat[pos : pos + k].reshape(self.circuit.theta.shape))
        pos += k
        if self.regress_net is not None:
            self.regress_net.set_flat(flat[pos:])

    def copy(self) -> "HybridModel":
        return HybridModel(
            self.circuit,
            None if self.embed_net is None else self.embed_net.copy(),
            None if self.regress_net is None else self.regress_net.copy(),
            self.measured,
            self.noise,
        )

    def _encode(self, x: np.ndarray):
        if self.embed_net is None:
            return x, None
        return forward(self.embed_net, x)

    def predict(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        h, _ = self._encode(x)
        z = expectations(self.circuit, h, self.measured, noise=self.noise)
        if self.regress_net is None:
            return z.sum(axis=1)
        y, _ = forward(self.regress_net, z)
        return y[:, 0]

    def value_and_grad(self, x, target) -> tuple[float, np.ndarray]:
        """Mean-squared error on the batch and its gradient in :meth:`get_params` order."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        target = np.asarray(target, dtype=float).reshape(-1)
        h, tape_e = self._encode(x)
        z = expectations(self.circuit, h, self.measured, noise=self.noise)
        if self.regress_net is None:
            pred = z.sum(axis=1)
        else:
            y, tape_r = forward(self.regress_net, z)
            pred = y[:, 0]
        loss = mse_loss(pred, target)
        d_pred = mse_grad(pred, target)

        parts = []
        if self.regress_net is None:
            d_z = np.repeat(d_pred[:, None], z.shape[1], axis=1)
            g_regress = None
        else:
            d_z, grads_r = backward(self.regress_net, tape_r, d_pred[:, None])
            g_regress = flatten_grads(grads_r)

        jac_theta, jac_h = shift_jacobians(
            self.circuit, h, self.measured, self.noise, wrt_inputs=self.embed_net is not None
        )
        g_theta = np.tensordot(d_z, jac_theta, axes=([0, 1], [0, 1])).ravel()
        if self.embed_net is not None:
            d_h = np.einsum("bk,bkn->bn", d_z, jac_h)
            _, grads_e = backward(self.embed_net, tape_e, d_h)
            parts.append(flatten_grads(grads_e))
        parts.append(g_theta)
        if g_regress is not None:
            parts.append(g_regress)
        return loss, np.concatenate(parts)


@dataclass(eq=False)
class DenseModel:
    """Plain network regressor, ``(B, d_in) -> (B,)``; the classical baseline."""

    net: DenseNet

    @property
    def n_classical(self) -> int:
        return self.net.n_params

    @property
    def n_quantum(self) -> int:
        return 0

    @property
    def n_params(self) -> int:
        return self.net.n_params

    def get_params(self) -> np.ndarray:
        return self.net.get_flat()

    def set_params(self, flat) -> None:
        self.net.set_flat(flat)

    def copy(self) -> "DenseModel":
        return DenseModel(self.net.copy())

    def predict(self, x) -> np.ndarray:
        y, _ = forward(self.net, np.atleast_2d(np.asarray(x, dtype=float)))
        return y[:, 0]

    def value_and_grad(self, x, target) -> tuple[float, np.ndarray]:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        target = np.asarray(target, dtype=float).reshape(-1)
        y, tape = forward(self.net, x)
        loss = mse_loss(y[:, 0], target)
        _, grads = backward(self.net, tape, mse_grad(y[:, 0], target)[:, None])
        return loss, flatten_grads(grads)


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_mse: float
    test_mse: float


@dataclass(eq=False)
class TrainResult:
    model: object
    trace: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def best_train_mse(self) -> float:
        return min(r.train_mse for r in self.trace)


def train(model, train_set, config: TrainConfig, test_set=None) -> TrainResult:
    """Minibatch AdamW on the MSE, reshuffled every epoch.

    Returns the parameter snapshot with the lowest full-training-set MSE over
    the recorded epochs. ``model`` itself is not modified.
    """
    x, y = (np.asarray(a, dtype=float) for a in train_set)
    x = x.reshape(len(x), -1)
    if len(x) == 0:
        raise ValueError("empty training set")
    if test_set is not None:
        x_test, y_test = (np.asarray(a, dtype=float) for a in test_set)
        x_test = x_test.reshape(len(x_test), -1)
    model = model.copy()
    rng = np.random.default_rng(config.seed)
    params = model.get_params()
    moments = (np.zeros_like(params), np.zeros_like(params))
    steps_per_epoch = math.ceil(len(x) / config.batch_size)
    total_steps = steps_per_epoch * config.epochs
    result = TrainResult(model)
    best_params, best_loss, step = params.copy(), math.inf, 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(x))
        for start in range(0, len(x), config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grad = model.value_and_grad(x[idx], y[idx])
            if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
                raise TrainingDiverged(f"non-finite loss/gradient at epoch {epoch}, step {step + 1}: loss={loss}")
            step += 1
            lr = config.learning_rate
            if config.cosine_schedule:
                lr *= 0.5 * (1 + math.cos(math.pi * (step - 1) / total_steps))
            params, moments = adamw_step(params, grad, moments, config, step, lr)
            model.set_params(params)
        train_mse = mse_loss(model.predict(x), y)
        if not math.isfinite(train_mse):
            raise TrainingDiverged(f"non-finite training loss after epoch {epoch}")
        test_mse = mse_loss(model.predict(x_test), y_test) if test_set is not None else math.nan
        result.trace.append(EpochRecord(epoch, train_mse, test_mse))
        log.debug("epoch %d train %.6g test %.6g", epoch, train_mse, test_mse)
        if train_mse < best_loss:
            best_loss, best_params, result.best_epoch = train_mse, params.copy(), epoch
    model.set_params(best_params)
    result.model = model
    return result


def finite_difference_grad(model, x, target, step: float = 1e-5) -> np.ndarray:
    """Central differences of the batch MSE over every parameter (audit oracle)."""
    base = model.get_params()
    probe = model.copy()
    grad = np.empty_like(base)
    for i in range(base.size):
        for sign in (1, -1):
            p = base.copy()
            p[i] += sign * step
            probe.set_params(p)
            val = mse_loss(probe.predict(x), np.asarray(target, dtype=float).reshape(-1))
            grad[i] = val / (2 * step) if sign == 1 else grad[i] - val / (2 * step)
    return grad
