"""Single-qubit noise channels and noisy circuit evaluation.

Depolarizing noise uses the Pauli-twirl form

    rho -> (1 - p) rho + (p / 3) (X rho X + Y rho Y + Z rho Z),

which contracts ``<Z>`` by ``1 - 4p/3``. Amplitude damping uses the Kraus pair
``K0 = [[1, 0], [0, sqrt(1 - g)]]``, ``K1 = [[0, sqrt(g)], [0, 0]]``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gradients import param_shift_grad
from .qstate import PAULI_X, PAULI_Y, PAULI_Z, BatchDensity, DensityMatrix, I2, Observable, sign_matrix
from .reupload import QnnOutput, ReuploadCircuit, _measured, encode_inputs, run_expectations

MAX_NOISY_QUBITS = 10


class Channel(enum.Enum):
    NONE = "none"
    DEPOLARIZING = "depolarizing"
    AMPLITUDE_DAMPING = "amplitude_damping"


class Insertion(enum.Enum):
    AFTER_EACH_GATE = "after_each_gate"
    AFTER_EACH_LAYER = "after_each_layer"


def _check_rate(rate: float) -> float:
    rate = float(rate)
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"noise rate must lie in [0, 1], got {rate}")
    return rate


def depolarizing_kraus(p: float) -> list[np.ndarray]:
    p = _check_rate(p)
    return [
        np.sqrt(1 - p) * I2,
        np.sqrt(p / 3) * PAULI_X,
        np.sqrt(p / 3) * PAULI_Y,
        np.sqrt(p / 3) * PAULI_Z,
    ]


def amplitude_damping_kraus(gamma: float) -> list[np.ndarray]:
    gamma = _check_rate(gamma)
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=np.complex128)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=np.complex128)
    return [k0, k1]


def _apply_channel(rho: DensityMatrix, kraus: list[np.ndarray], wire: int) -> DensityMatrix:
    sim = BatchDensity.from_matrices(rho.matrix[None])
    sim.apply_kraus(kraus, wire)
    m = sim.matrices()[0]
    # keep exact Hermiticity; the kernels are Hermitian up to rounding
    return DensityMatrix(0.5 * (m + m.conj().T))


def depolarize(rho: DensityMatrix, wire: int, p: float) -> DensityMatrix:
    return _apply_channel(rho, depolarizing_kraus(p), wire)


def amp_damp(rho: DensityMatrix, wire: int, gamma: float) -> DensityMatrix:
    return _apply_channel(rho, amplitude_damping_kraus(gamma), wire)


@dataclass(frozen=True)
class NoiseModel:
    channel: Channel = Channel.NONE
    rate: float = 0.0
    insertion: Insertion = Insertion.AFTER_EACH_GATE

    def __post_init__(self):
        object.__setattr__(self, "channel", Channel(self.channel))
        object.__setattr__(self, "insertion", Insertion(self.insertion))
        rate = _check_rate(self.rate)
        if self.channel is Channel.NONE and rate != 0.0:
            raise ValueError("channel NONE requires rate 0")
        object.__setattr__(self, "rate", rate)

    @property
    def is_active(self) -> bool:
        # rate 0 still runs on the density backend so the pipeline itself is exercised
        return self.channel is not Channel.NONE

    def kraus(self) -> list[np.ndarray]:
        if self.channel is Channel.DEPOLARIZING:
            return depolarizing_kraus(self.rate)
        if self.channel is Channel.AMPLITUDE_DAMPING:
            return amplitude_damping_kraus(self.rate)
        return [I2]

    def _insert(self, sim, wires: Sequence[int]) -> None:
        kraus = self.kraus()
        for w in wires:
            sim.apply_kraus(kraus, w)

    @property
    def after_op(self):
        return self._insert if self.insertion is Insertion.AFTER_EACH_GATE else None

    @property
    def after_layer(self):
        return self._insert if self.insertion is Insertion.AFTER_EACH_LAYER else None


NOISELESS = NoiseModel()


def _check_size(circuit: ReuploadCircuit) -> None:
    if circuit.n_qubits > MAX_NOISY_QUBITS:
        raise ValueError(
            f"density-matrix simulation is limited to {MAX_NOISY_QUBITS} qubits, got {circuit.n_qubits}"
        )


def noisy_expectations(
    circuit: ReuploadCircuit,
    h,
    noise: NoiseModel,
    measured: Sequence[Observable] | None = None,
) -> np.ndarray:
    """Batched noisy forward pass, ``(B, width) -> (B, K)``."""
    _check_size(circuit)
    h = np.atleast_2d(np.asarray(h, dtype=float))
    signs = sign_matrix(_measured(circuit, measured), circuit.n_qubits)
    return run_expectations(circuit, encode_inputs(circuit, h), signs, noise=noise)


def noisy_forward(
    circuit: ReuploadCircuit,
    h,
    noise: NoiseModel,
    measured: Sequence[Observable] | None = None,
) -> QnnOutput:
    h = np.asarray(h, dtype=float)
    if h.ndim != 1:
        raise ValueError("noisy_forward takes a single input vector")
    return QnnOutput(noisy_expectations(circuit, h[None, :], noise, measured)[0])


def noisy_param_shift_grad(
    circuit: ReuploadCircuit,
    h,
    noise: NoiseModel,
    measured: Sequence[Observable] | None = None,
    upstream=None,
) -> np.ndarray:
    """Shift-rule gradient of the noisy expectations with respect to ``theta``.

    The channel is fixed, so the noisy expectation is still a first-order
    trigonometric function of each rotation angle and the +-pi/2 rule stays exact.
    """
    _check_size(circuit)
    return param_shift_grad(circuit, h, measured, upstream, noise=noise)
