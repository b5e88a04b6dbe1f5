"""Classical-to-quantum encodings: angle, amplitude, and the re-uploading data block."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .qstate import BatchState, StateVector, ry_matrix


class Embedding(enum.Enum):
    ANGLE = "angle"
    AMPLITUDE = "amplitude"


@dataclass(frozen=True)
class EmbeddingKind:
    kind: Embedding = Embedding.ANGLE
    auto_normalize: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", Embedding(self.kind))

    def input_width(self, n_qubits: int) -> int:
        """Largest accepted input length for ``n_qubits``."""
        return n_qubits if self.kind is Embedding.ANGLE else 2**n_qubits

    def check_input(self, h: np.ndarray, n_qubits: int) -> None:
        width = np.shape(h)[-1]
        if self.kind is Embedding.ANGLE and width != n_qubits:
            raise ValueError(f"angle embedding needs {n_qubits} inputs, got {width}")
        if self.kind is Embedding.AMPLITUDE and width > 2**n_qubits:
            raise ValueError(f"amplitude embedding on {n_qubits} qubits takes <= {2**n_qubits} inputs, got {width}")


ANGLE = EmbeddingKind(Embedding.ANGLE)
AMPLITUDE = EmbeddingKind(Embedding.AMPLITUDE)


def _finite(h) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if not np.all(np.isfinite(h)):
        raise ValueError("embedding input contains NaN or Inf")
    return h


def angle_embed(h) -> StateVector:
    """Product state with ``cos(h_i/2)|0> + sin(h_i/2)|1>`` on wire ``i``.

    Any finite angle is accepted; values outside ``[0, pi)`` simply wrap.
    """
    h = _finite(h).reshape(-1)
    if h.size == 0:
        raise ValueError("angle embedding needs at least one input")
    amps = np.ones(1)
    for angle in h:
        amps = np.kron(amps, [np.cos(angle / 2), np.sin(angle / 2)])
    return StateVector(amps)


def normalize_amplitudes(x, n_qubits: int, auto_normalize: bool = True) -> np.ndarray:
    """Zero-pad to ``2**n_qubits`` and (optionally) scale to unit norm.

    Works on a single vector or on a ``(B, N)`` batch.
    """
    x = _finite(x)
    width = x.shape[-1]
    if width > 2**n_qubits:
        raise ValueError(f"{width} amplitudes do not fit in {n_qubits} qubits")
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("cannot amplitude-embed an all-zero vector")
    if auto_normalize:
        x = x / norms
    elif np.any(np.abs(norms**2 - 1.0) > 1e-9):
        raise ValueError("amplitude input is not normalized and auto_normalize is off")
    pad = [(0, 0)] * (x.ndim - 1) + [(0, 2**n_qubits - width)]
    return np.pad(x, pad)


def amplitude_embed(x, n_qubits: int, auto_normalize: bool = False) -> StateVector:
    return StateVector(normalize_amplitudes(x, n_qubits, auto_normalize).astype(np.complex128))


def householder_prep(v: np.ndarray) -> np.ndarray:
    """Real orthogonal matrices ``U`` with ``U e_0 = v`` for a batch of unit vectors.

    ``v`` has shape ``(B, D)``; returns ``(B, D, D)``. Uses the reflection
    ``I - 2 u u^T / (u^T u)`` with ``u = e_0 - v``; when ``v`` is already ``e_0`` the
    identity is returned.
    """
    v = np.asarray(v, dtype=float)
    batch, d = v.shape
    u = -v.copy()
    u[:, 0] += 1.0
    uu = np.einsum("bi,bi->b", u, u)
    eye = np.broadcast_to(np.eye(d), (batch, d, d))
    safe = uu > 1e-30
    scale = np.where(safe, 2.0 / np.where(safe, uu, 1.0), 0.0)
    return eye - scale[:, None, None] * np.einsum("bi,bj->bij", u, u)


def encode_block(state: StateVector, h) -> StateVector:
    """Data block ``S(h)``: ``RY(h_i)`` on every wire ``i``."""
    h = _finite(h).reshape(-1)
    if h.size != state.n_qubits:
        raise ValueError(f"encode block needs {state.n_qubits} angles, got {h.size}")
    sim = BatchState.from_amplitudes(state.amplitudes[None, :])
    for wire, angle in enumerate(h):
        sim.apply_1q(ry_matrix(angle), wire)
    return StateVector(sim.amplitudes()[0])


def infer_qubits(width: int) -> int:
    """Qubits needed to amplitude-embed ``width`` values (at least one)."""
    return max(1, int(np.ceil(np.log2(max(width, 2)))))


__all__ = [
    "Embedding",
    "EmbeddingKind",
    "ANGLE",
    "AMPLITUDE",
    "angle_embed",
    "amplitude_embed",
    "normalize_amplitudes",
    "householder_prep",
    "encode_block",
    "infer_qubits",
]
