"""Finite-difference audit of shift-rule and end-to-end gradients on random models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..classical import Activation, DenseNet, forward
from ..embedding import AMPLITUDE, ANGLE
from ..gradients import FD_STEP, param_shift_grad
from ..qstate import single_z_observables
from ..reupload import ReuploadCircuit, expectations
from ..training import HybridModel, finite_difference_grad


def relative_error(got, ref) -> float:
    """``max |got - ref| / max |ref|`` (absolute when the reference is all zeros)."""
    got, ref = np.asarray(got, dtype=float), np.asarray(ref, dtype=float)
    scale = np.max(np.abs(ref))
    diff = np.max(np.abs(got - ref))
    return float(diff / scale) if scale > 0 else float(diff)


def random_hybrid(rng: np.random.Generator, max_qubits: int = 3, max_layers: int = 3, max_width: int = 4) -> HybridModel:
    n = int(rng.integers(1, max_qubits + 1))
    L = int(rng.integers(1, max_layers + 1))
    amplitude = n > 1 and rng.random() < 0.25
    emb = AMPLITUDE if amplitude else ANGLE
    circuit = ReuploadCircuit.random(n, L, rng, embedding=emb, range_r=int(rng.integers(1, n)) if n > 1 else 1)
    d = int(rng.integers(1, max_width + 1))
    out = 2**n if amplitude else n
    hidden = [int(rng.integers(1, max_width + 1)) for _ in range(int(rng.integers(0, 2)))]
    embed = DenseNet.init([d, *hidden, out], Activation.TANH, rng)
    k = int(rng.integers(1, n + 1))
    wires = sorted(rng.choice(n, size=k, replace=False).tolist())
    regress = DenseNet.init([k, int(rng.integers(1, max_width + 1)), 1], [Activation.TANH, Activation.IDENTITY], rng)
    return HybridModel(circuit, embed, regress, single_z_observables(n, wires))


def circuit_fd_grad(circuit: ReuploadCircuit, h, measured, step: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of the expectations over ``theta``, ``(B, K, L, n, 3)``."""
    base = circuit.theta.ravel()
    cols = []
    for j in range(base.size):
        vals = []
        for sign in (1, -1):
            t = base.copy()
            t[j] += sign * step
            vals.append(expectations(circuit.with_theta(t.reshape(circuit.theta.shape)), h, measured))
        cols.append((vals[0] - vals[1]) / (2 * step))
    return np.stack(cols, axis=-1).reshape(np.shape(cols[0]) + circuit.theta.shape)


@dataclass(frozen=True)
class AuditResult:
    n_models: int
    max_shift_error: float
    max_hybrid_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return max(self.max_shift_error, self.max_hybrid_error) <= self.tolerance


def gradient_audit(n_models: int = 50, seed: int = 0, batch: int = 3, tolerance: float = 1e-5,
                   max_qubits: int = 3, max_layers: int = 3) -> AuditResult:
    rng = np.random.default_rng(seed)
    shift_err = hybrid_err = 0.0
    for _ in range(n_models):
        model = random_hybrid(rng, max_qubits, max_layers)
        x = rng.uniform(-1, 1, size=(batch, model.embed_net.d_in))
        y = rng.normal(size=batch)
        h, _ = forward(model.embed_net, x)
        jac = param_shift_grad(model.circuit, h, model.measured)
        shift_err = max(shift_err, relative_error(jac, circuit_fd_grad(model.circuit, h, model.measured)))
        _, grad = model.value_and_grad(x, y)
        hybrid_err = max(hybrid_err, relative_error(grad, finite_difference_grad(model, x, y)))
    return AuditResult(n_models, shift_err, hybrid_err, tolerance)
