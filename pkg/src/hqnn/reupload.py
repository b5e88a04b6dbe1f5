"""Data re-uploading circuits.

A circuit with ``L`` layers runs ``L`` units of ``[S(h); P(theta_l)]`` on ``|0...0>``,
where ``S`` is the data block (angle or amplitude embedding) and ``P`` is a
trainable block: one ``ROT(alpha, beta, gamma)`` per wire followed by a ring of
CNOTs whose wiring is set by the entangling range ``r``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .embedding import ANGLE, Embedding, EmbeddingKind, householder_prep, normalize_amplitudes
from .qstate import (
    BatchDensity,
    BatchState,
    Gate,
    GateKind,
    Observable,
    StateVector,
    embed_operator,
    rot_matrix,
    ry_matrix,
    sign_matrix,
    single_z_observables,
)

MAX_UNITARY_QUBITS = 6


@dataclass(frozen=True)
class PQCBlockSpec:
    n_qubits: int
    range_r: int | None = 1

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        if self.n_qubits == 1:
            object.__setattr__(self, "range_r", None)
        elif self.range_r is None or not 0 < self.range_r < self.n_qubits:
            raise ValueError(f"range must satisfy 0 < r < {self.n_qubits}, got {self.range_r}")

    def cnot_pairs(self) -> list[tuple[int, int]]:
        """``(control, target)`` for each entangler, in application order."""
        n, r = self.n_qubits, self.range_r
        if r is None:
            return []
        count = n // math.gcd(n, r)
        return [((j * r - r) % n, (j * r) % n) for j in range(1, count + 1)]


@dataclass(frozen=True, eq=False)
class StatePrep:
    """Dense state-preparation unitary acting on the whole register."""

    matrix: np.ndarray

    @property
    def wires(self) -> tuple[int, ...]:
        n = int(self.matrix.shape[0]).bit_length() - 1
        return tuple(range(n))


Op = Union[Gate, StatePrep]


@dataclass(frozen=True, eq=False)
class ReuploadCircuit:
    n_qubits: int
    n_layers: int
    theta: np.ndarray
    embedding: EmbeddingKind = ANGLE
    range_r: int | None = 1

    def __post_init__(self):
        if self.n_layers < 0:
            raise ValueError("n_layers must be non-negative")
        spec = PQCBlockSpec(self.n_qubits, self.range_r)
        object.__setattr__(self, "range_r", spec.range_r)
        theta = np.array(self.theta, dtype=float)
        if theta.shape != (self.n_layers, self.n_qubits, 3):
            raise ValueError(
                f"theta must have shape {(self.n_layers, self.n_qubits, 3)}, got {theta.shape}"
            )
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta contains non-finite angles")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        if not isinstance(self.embedding, EmbeddingKind):
            object.__setattr__(self, "embedding", EmbeddingKind(self.embedding))

    @classmethod
    def random(
        cls,
        n_qubits: int,
        n_layers: int,
        rng: np.random.Generator,
        embedding: EmbeddingKind = ANGLE,
        range_r: int | None = 1,
        low: float = 0.0,
        high: float = 2 * np.pi,
    ) -> "ReuploadCircuit":
        theta = rng.uniform(low, high, size=(n_layers, n_qubits, 3))
        return cls(n_qubits, n_layers, theta, embedding, range_r)

    @property
    def spec(self) -> PQCBlockSpec:
        return PQCBlockSpec(self.n_qubits, self.range_r)

    @property
    def n_params(self) -> int:
        return self.theta.size

    @property
    def input_width(self) -> int:
        return self.embedding.input_width(self.n_qubits)

    def with_theta(self, theta) -> "ReuploadCircuit":
        return ReuploadCircuit(self.n_qubits, self.n_layers, theta, self.embedding, self.range_r)

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "n_layers": self.n_layers,
            "embedding": self.embedding.kind.value,
            "auto_normalize": self.embedding.auto_normalize,
            "range_r": self.range_r,
            "theta": self.theta.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReuploadCircuit":
        emb = EmbeddingKind(Embedding(d["embedding"]), bool(d.get("auto_normalize", True)))
        theta = np.array(d["theta"], dtype=float).reshape(d["n_layers"], d["n_qubits"], 3)
        return cls(int(d["n_qubits"]), int(d["n_layers"]), theta, emb, d.get("range_r"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ReuploadCircuit":
        return cls.from_dict(json.loads(text))

    def ops(self, h) -> list[Op]:
        """Flat operation list for a single input ``h``."""
        h = np.asarray(h, dtype=float).reshape(-1)
        self.embedding.check_input(h, self.n_qubits)
        if self.embedding.kind is Embedding.AMPLITUDE:
            amps = normalize_amplitudes(h, self.n_qubits, self.embedding.auto_normalize)
            prep = StatePrep(householder_prep(amps[None, :])[0])
        ops: list[Op] = []
        pairs = self.spec.cnot_pairs()
        for layer in range(self.n_layers):
            if self.embedding.kind is Embedding.ANGLE:
                ops.extend(Gate(GateKind.RY, (i,), (h[i],)) for i in range(self.n_qubits))
            else:
                ops.append(prep)
            ops.extend(Gate(GateKind.ROT, (i,), tuple(self.theta[layer, i])) for i in range(self.n_qubits))
            ops.extend(Gate(GateKind.CNOT, pair) for pair in pairs)
        return ops


@dataclass(frozen=True, eq=False)
class QnnOutput:
    expectations: np.ndarray


# ---------------------------------------------------------------------------
# batched evolution
# ---------------------------------------------------------------------------

Hook = Callable[[object, Sequence[int]], None]


def encoding_angles(circuit: ReuploadCircuit, h: np.ndarray) -> np.ndarray:
    """Per-layer encoding angles ``(B, L, n)`` for a batch of angle inputs ``(B, n)``."""
    h = np.asarray(h, dtype=float)
    circuit.embedding.check_input(h, circuit.n_qubits)
    return np.repeat(h[:, None, :], circuit.n_layers, axis=1)


def encoding_preps(circuit: ReuploadCircuit, h: np.ndarray) -> np.ndarray:
    """Householder preparation unitaries ``(B, D, D)`` for amplitude inputs ``(B, N)``."""
    h = np.asarray(h, dtype=float)
    circuit.embedding.check_input(h, circuit.n_qubits)
    amps = normalize_amplitudes(h, circuit.n_qubits, circuit.embedding.auto_normalize)
    return householder_prep(amps).astype(np.complex128)


def encode_inputs(circuit: ReuploadCircuit, h: np.ndarray) -> np.ndarray:
    if circuit.embedding.kind is Embedding.ANGLE:
        return encoding_angles(circuit, h)
    return encoding_preps(circuit, h)


def evolve(
    sim,
    circuit: ReuploadCircuit,
    theta: np.ndarray,
    enc: np.ndarray,
    after_op: Hook | None = None,
    after_layer: Hook | None = None,
) -> None:
    """Run the circuit on ``sim`` (a :class:`BatchState` or :class:`BatchDensity`).

    ``theta`` is ``(L, n, 3)`` or batched ``(B, L, n, 3)``; ``enc`` comes from
    :func:`encode_inputs` (possibly with individual angles shifted). ``after_op`` is
    called with the acted wires after every operation and ``after_layer`` with all
    wires after each layer; the noise module uses these to insert channels.
    """
    n = circuit.n_qubits
    all_wires = tuple(range(n))
    pairs = circuit.spec.cnot_pairs()
    angle = circuit.embedding.kind is Embedding.ANGLE
    rots = rot_matrix(theta[..., 0], theta[..., 1], theta[..., 2])
    if angle:
        enc_mats = ry_matrix(enc)
    for layer in range(circuit.n_layers):
        if angle:
            for i in range(n):
                sim.apply_1q(enc_mats[:, layer, i], i)
                if after_op is not None:
                    after_op(sim, (i,))
        else:
            sim.apply_dense(enc)
            if after_op is not None:
                after_op(sim, all_wires)
        for i in range(n):
            sim.apply_1q(rots[..., layer, i, :, :], i)
            if after_op is not None:
                after_op(sim, (i,))
        for c, t in pairs:
            sim.apply_cnot(c, t)
            if after_op is not None:
                after_op(sim, (c, t))
        if after_layer is not None:
            after_layer(sim, all_wires)


def run_expectations(
    circuit: ReuploadCircuit,
    enc: np.ndarray,
    signs: np.ndarray,
    theta: np.ndarray | None = None,
    noise=None,
) -> np.ndarray:
    """Expectations ``(B, K)`` for pre-encoded inputs.

    ``noise`` is any object with ``is_active``, ``after_op`` and ``after_layer``
    (see :class:`hqnn.noise.NoiseModel`); when active the density-matrix backend is used.
    """
    theta = circuit.theta if theta is None else theta
    batch = enc.shape[0]
    if noise is not None and noise.is_active:
        sim = BatchDensity.zeros(batch, circuit.n_qubits)
        evolve(sim, circuit, theta, enc, noise.after_op, noise.after_layer)
    else:
        sim = BatchState.zeros(batch, circuit.n_qubits)
        evolve(sim, circuit, theta, enc)
    return sim.expectations(signs)


def final_states(circuit: ReuploadCircuit, h: np.ndarray, theta: np.ndarray | None = None) -> np.ndarray:
    """Output amplitudes ``(B, 2**n)`` for a batch of inputs."""
    h = np.atleast_2d(np.asarray(h, dtype=float))
    theta = circuit.theta if theta is None else theta
    sim = BatchState.zeros(h.shape[0], circuit.n_qubits)
    evolve(sim, circuit, theta, encode_inputs(circuit, h))
    return sim.amplitudes()


def _measured(circuit: ReuploadCircuit, measured: Sequence[Observable] | None) -> tuple[Observable, ...]:
    obs = single_z_observables(circuit.n_qubits) if measured is None else tuple(measured)
    if not obs or len(obs) > circuit.n_qubits:
        raise ValueError(f"need between 1 and {circuit.n_qubits} observables, got {len(obs)}")
    return obs


def expectations(
    circuit: ReuploadCircuit,
    h,
    measured: Sequence[Observable] | None = None,
    noise=None,
) -> np.ndarray:
    """Batched forward pass: ``h`` is ``(B, width)``, result is ``(B, K)``."""
    h = np.atleast_2d(np.asarray(h, dtype=float))
    signs = sign_matrix(_measured(circuit, measured), circuit.n_qubits)
    return run_expectations(circuit, encode_inputs(circuit, h), signs, noise=noise)


def qnn_forward(circuit: ReuploadCircuit, h, measured: Sequence[Observable] | None = None) -> QnnOutput:
    """``<0|U^dag O_k U|0>`` for each measured observable (default: Z on every wire)."""
    h = np.asarray(h, dtype=float)
    if h.ndim != 1:
        raise ValueError("qnn_forward takes a single input vector; use expectations() for batches")
    return QnnOutput(expectations(circuit, h[None, :], measured)[0])


def pqc_block(state: StateVector, spec: PQCBlockSpec, layer_params) -> StateVector:
    """Apply one trainable block (``ROT`` on every wire, then the CNOT ring)."""
    params = np.asarray(layer_params, dtype=float)
    if params.shape != (spec.n_qubits, 3):
        raise ValueError(f"layer params must have shape {(spec.n_qubits, 3)}, got {params.shape}")
    if state.n_qubits != spec.n_qubits:
        raise ValueError(f"state has {state.n_qubits} qubits, block expects {spec.n_qubits}")
    sim = BatchState.from_amplitudes(state.amplitudes[None, :])
    mats = rot_matrix(params[:, 0], params[:, 1], params[:, 2])
    for i in range(spec.n_qubits):
        sim.apply_1q(mats[i], i)
    for c, t in spec.cnot_pairs():
        sim.apply_cnot(c, t)
    return StateVector(sim.amplitudes()[0])


def circuit_unitary(circuit: ReuploadCircuit, h) -> np.ndarray:
    """Dense product of every operation's full-register matrix (test oracle)."""
    n = circuit.n_qubits
    if n > MAX_UNITARY_QUBITS:
        raise ValueError(f"circuit_unitary is limited to {MAX_UNITARY_QUBITS} qubits, got {n}")
    u = np.eye(2**n, dtype=np.complex128)
    for op in circuit.ops(h):
        if isinstance(op, StatePrep):
            full = op.matrix
        else:
            full = embed_operator(op.matrix(), op.wires, n)
        u = full @ u
    return u


def scheduled_depth(circuit: ReuploadCircuit) -> int:
    """ASAP-scheduled depth of the angle-embedded circuit with ``ROT`` split into
    ``RZ, RY, RZ``; every gate occupies one time step on the wires it touches."""
    if circuit.embedding.kind is not Embedding.ANGLE:
        raise ValueError("scheduled depth is only defined for angle embedding")
    busy = [0] * circuit.n_qubits
    probe = np.zeros(circuit.n_qubits)
    for op in circuit.ops(probe):
        steps = 3 if op.kind is GateKind.ROT else 1
        start = max(busy[w] for w in op.wires)
        for w in op.wires:
            busy[w] = start + steps
    return max(busy) if busy else 0
