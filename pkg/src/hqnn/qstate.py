"""Exact pure-state and density-matrix simulation.

Conventions used throughout the package:

* qubit 0 is the most significant bit of a basis index, so ``|q0 q1 ... q_{n-1}>``
  maps to index ``q0 * 2**(n-1) + ... + q_{n-1}``;
* global phase is ignored when comparing states;
* rotations follow ``R_P(theta) = exp(-i theta P / 2)``.

Two layers live here. The public value types (:class:`StateVector`,
:class:`DensityMatrix`, :class:`Gate`, :class:`Observable`) and the functions that
act on them are meant for direct use and testing. Underneath, :class:`BatchState`
and :class:`BatchDensity` evolve a whole batch of states at once, with per-sample
gate matrices. The circuit, training and metrics modules drive those.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

I2 = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

MAX_QUBITS = 16


# ---------------------------------------------------------------------------
# gate matrices (broadcast over array-valued angles -> shape (..., 2, 2))
# ---------------------------------------------------------------------------

def rx_matrix(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = c
    out[..., 0, 1] = -1j * s
    out[..., 1, 0] = -1j * s
    out[..., 1, 1] = c
    return out


def ry_matrix(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def rz_matrix(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = np.exp(-0.5j * theta)
    out[..., 1, 1] = np.exp(0.5j * theta)
    return out


def rot_matrix(alpha, beta, gamma) -> np.ndarray:
    """Closed form of ``RZ(gamma) @ RY(beta) @ RZ(alpha)``.

    ``alpha`` acts first. The three angles broadcast against each other.
    """
    alpha, beta, gamma = np.broadcast_arrays(
        np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float), np.asarray(gamma, dtype=float)
    )
    c, s = np.cos(beta / 2), np.sin(beta / 2)
    plus, minus = (alpha + gamma) / 2, (alpha - gamma) / 2
    out = np.empty(alpha.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = np.exp(-1j * plus) * c
    out[..., 0, 1] = -np.exp(1j * minus) * s
    out[..., 1, 0] = np.exp(-1j * minus) * s
    out[..., 1, 1] = np.exp(1j * plus) * c
    return out


CNOT_MATRIX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128
)


class GateKind(enum.Enum):
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    ROT = "ROT"
    PAULI_X = "PAULI_X"
    CNOT = "CNOT"


_N_PARAMS = {
    GateKind.RX: 1,
    GateKind.RY: 1,
    GateKind.RZ: 1,
    GateKind.ROT: 3,
    GateKind.PAULI_X: 0,
    GateKind.CNOT: 0,
}


@dataclass(frozen=True)
class Gate:
    """A single gate. ``CNOT`` wires are ``(control, target)``."""

    kind: GateKind
    wires: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        n_wires = 2 if self.kind is GateKind.CNOT else 1
        if len(self.wires) != n_wires:
            raise ValueError(f"{self.kind.value} acts on {n_wires} wire(s), got {self.wires}")
        if len(set(self.wires)) != len(self.wires):
            raise ValueError(f"duplicate wires {self.wires} for {self.kind.value}")
        if any(w < 0 for w in self.wires):
            raise ValueError(f"negative wire index in {self.wires}")
        if len(self.params) != _N_PARAMS[self.kind]:
            raise ValueError(
                f"{self.kind.value} takes {_N_PARAMS[self.kind]} parameter(s), got {len(self.params)}"
            )
        if not all(np.isfinite(self.params)):
            raise ValueError(f"non-finite gate parameter in {self.params}")

    def matrix(self) -> np.ndarray:
        """2x2 matrix (4x4 for CNOT, control on the high bit)."""
        k = self.kind
        if k is GateKind.RX:
            return rx_matrix(self.params[0])
        if k is GateKind.RY:
            return ry_matrix(self.params[0])
        if k is GateKind.RZ:
            return rz_matrix(self.params[0])
        if k is GateKind.ROT:
            return rot_matrix(*self.params)
        if k is GateKind.PAULI_X:
            return PAULI_X.copy()
        return CNOT_MATRIX.copy()


def rot_decompose(alpha: float, beta: float, gamma: float) -> list[Gate]:
    """Split ``ROT(alpha, beta, gamma)`` into its three elementary rotations, in
    application order ``RZ(alpha), RY(beta), RZ(gamma)``; the wire is 0."""
    return [
        Gate(GateKind.RZ, (0,), (alpha,)),
        Gate(GateKind.RY, (0,), (beta,)),
        Gate(GateKind.RZ, (0,), (gamma,)),
    ]


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------

def _n_qubits_for(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if n < 1 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return n


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        _n_qubits_for(amps.size)
        norm = np.vdot(amps, amps).real
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return _n_qubits_for(self.amplitudes.size)

    @classmethod
    def zero(cls, n_qubits: int) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(amps)

    @classmethod
    def basis(cls, bits: Sequence[int]) -> "StateVector":
        n = len(bits)
        amps = np.zeros(2**n, dtype=np.complex128)
        amps[int("".join(str(int(b)) for b in bits), 2)] = 1.0
        return cls(amps)

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def equals_up_to_phase(self, other: "StateVector", atol: float = 1e-10) -> bool:
        if other.n_qubits != self.n_qubits:
            return False
        return abs(abs(np.vdot(self.amplitudes, other.amplitudes)) - 1.0) <= atol


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        rho = np.array(self.matrix, dtype=np.complex128)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {rho.shape}")
        _n_qubits_for(rho.shape[0])
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > 1e-10:
            raise ValueError(f"density matrix trace is {np.trace(rho)!r}")
        if np.linalg.eigvalsh(rho).min() < -1e-9:
            raise ValueError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    @property
    def n_qubits(self) -> int:
        return _n_qubits_for(self.matrix.shape[0])

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        d = 2**n_qubits
        return cls(np.eye(d, dtype=np.complex128) / d)


@dataclass(frozen=True)
class Observable:
    """Tensor product of Pauli-Z on the wires where ``beta`` is 1, identity elsewhere."""

    beta: tuple[int, ...]

    def __post_init__(self):
        beta = tuple(int(b) for b in self.beta)
        if any(b not in (0, 1) for b in beta):
            raise ValueError(f"beta must be a bit vector, got {beta}")
        if not any(beta):
            raise ValueError("observable needs at least one Z factor")
        object.__setattr__(self, "beta", beta)

    @classmethod
    def z(cls, wire: int, n_qubits: int) -> "Observable":
        if not 0 <= wire < n_qubits:
            raise ValueError(f"wire {wire} out of range for {n_qubits} qubits")
        return cls(tuple(int(i == wire) for i in range(n_qubits)))

    @property
    def n_qubits(self) -> int:
        return len(self.beta)

    def signs(self) -> np.ndarray:
        """Diagonal of the observable in the computational basis (entries +-1)."""
        n = self.n_qubits
        idx = np.arange(2**n)
        parity = np.zeros(2**n, dtype=np.int64)
        for wire, bit in enumerate(self.beta):
            if bit:
                parity ^= (idx >> (n - 1 - wire)) & 1
        return 1.0 - 2.0 * parity


def single_z_observables(n_qubits: int, wires: Sequence[int] | None = None) -> tuple[Observable, ...]:
    wires = range(n_qubits) if wires is None else wires
    return tuple(Observable.z(w, n_qubits) for w in wires)


def sign_matrix(observables: Sequence[Observable], n_qubits: int) -> np.ndarray:
    """Stack of observable diagonals, shape ``(K, 2**n)``."""
    for obs in observables:
        if obs.n_qubits != n_qubits:
            raise ValueError(f"observable acts on {obs.n_qubits} qubits, state has {n_qubits}")
    return np.stack([obs.signs() for obs in observables])


# ---------------------------------------------------------------------------
# stride kernels on tensors with one axis of size 2 per qubit
# ---------------------------------------------------------------------------

def _pair_update(t: np.ndarray, mat: np.ndarray, axis: int) -> np.ndarray:
    """Apply a 2x2 matrix along ``axis`` of ``t``.

    ``mat`` is either ``(2, 2)`` or ``(B, 2, 2)`` with ``B == t.shape[0]``.
    """
    lo = [slice(None)] * t.ndim
    hi = [slice(None)] * t.ndim
    lo[axis], hi[axis] = 0, 1
    lo, hi = tuple(lo), tuple(hi)
    s0, s1 = t[lo], t[hi]
    if mat.ndim == 3:
        shape = (mat.shape[0],) + (1,) * (s0.ndim - 1)
        m00, m01 = mat[:, 0, 0].reshape(shape), mat[:, 0, 1].reshape(shape)
        m10, m11 = mat[:, 1, 0].reshape(shape), mat[:, 1, 1].reshape(shape)
    else:
        m00, m01, m10, m11 = mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1]
    out = np.empty(t.shape, dtype=np.result_type(t.dtype, mat.dtype))
    out[lo] = m00 * s0 + m01 * s1
    out[hi] = m10 * s0 + m11 * s1
    return out


def _cnot_update(t: np.ndarray, control_axis: int, target_axis: int) -> np.ndarray:
    out = t.copy()
    sel = [slice(None)] * t.ndim
    sel[control_axis] = 1
    sel = tuple(sel)
    sub_target = target_axis if target_axis < control_axis else target_axis - 1
    out[sel] = np.flip(t[sel], axis=sub_target)
    return out


def _check_wire(wire: int, n_qubits: int) -> None:
    if not 0 <= wire < n_qubits:
        raise ValueError(f"wire {wire} out of range for {n_qubits} qubits")


class BatchState:
    """A batch of ``B`` pure states, stored as a ``(B, 2, ..., 2)`` tensor."""

    def __init__(self, tensor: np.ndarray, n_qubits: int):
        self.n_qubits = n_qubits
        self.t = tensor

    @classmethod
    def zeros(cls, batch: int, n_qubits: int) -> "BatchState":
        t = np.zeros((batch,) + (2,) * n_qubits, dtype=np.complex128)
        t[(slice(None),) + (0,) * n_qubits] = 1.0
        return cls(t, n_qubits)

    @classmethod
    def from_amplitudes(cls, amps: np.ndarray) -> "BatchState":
        amps = np.asarray(amps, dtype=np.complex128)
        n = _n_qubits_for(amps.shape[-1])
        return cls(amps.reshape((amps.shape[0],) + (2,) * n), n)

    @property
    def batch(self) -> int:
        return self.t.shape[0]

    def amplitudes(self) -> np.ndarray:
        return self.t.reshape(self.batch, -1)

    def apply_1q(self, mat: np.ndarray, wire: int) -> None:
        _check_wire(wire, self.n_qubits)
        self.t = _pair_update(self.t, mat, 1 + wire)

    def apply_cnot(self, control: int, target: int) -> None:
        _check_wire(control, self.n_qubits)
        _check_wire(target, self.n_qubits)
        self.t = _cnot_update(self.t, 1 + control, 1 + target)

    def apply_dense(self, unitary: np.ndarray) -> None:
        """Full-register unitary, ``(D, D)`` or ``(B, D, D)``."""
        flat = self.amplitudes()
        if unitary.ndim == 2:
            new = flat @ unitary.T
        else:
            new = np.einsum("bij,bj->bi", unitary, flat)
        self.t = new.reshape(self.t.shape)

    def apply_kraus(self, kraus: Sequence[np.ndarray], wire: int) -> None:
        raise TypeError("Kraus channels need a density-matrix backend")

    def expectations(self, signs: np.ndarray) -> np.ndarray:
        """``<O_k>`` for each row of ``signs``; shape ``(B, K)``."""
        flat = self.amplitudes()
        probs = flat.real**2 + flat.imag**2
        return probs @ signs.T


class BatchDensity:
    """A batch of density matrices as a ``(B, 2,..,2, 2,..,2)`` tensor (rows, then columns)."""

    def __init__(self, tensor: np.ndarray, n_qubits: int):
        self.n_qubits = n_qubits
        self.t = tensor

    @classmethod
    def zeros(cls, batch: int, n_qubits: int) -> "BatchDensity":
        t = np.zeros((batch,) + (2,) * (2 * n_qubits), dtype=np.complex128)
        t[(slice(None),) + (0,) * (2 * n_qubits)] = 1.0
        return cls(t, n_qubits)

    @classmethod
    def from_matrices(cls, rho: np.ndarray) -> "BatchDensity":
        rho = np.asarray(rho, dtype=np.complex128)
        n = _n_qubits_for(rho.shape[-1])
        return cls(rho.reshape((rho.shape[0],) + (2,) * (2 * n)), n)

    @property
    def batch(self) -> int:
        return self.t.shape[0]

    def matrices(self) -> np.ndarray:
        d = 2**self.n_qubits
        return self.t.reshape(self.batch, d, d)

    def apply_1q(self, mat: np.ndarray, wire: int) -> None:
        _check_wire(wire, self.n_qubits)
        t = _pair_update(self.t, mat, 1 + wire)
        self.t = _pair_update(t, mat.conj(), 1 + self.n_qubits + wire)

    def apply_cnot(self, control: int, target: int) -> None:
        _check_wire(control, self.n_qubits)
        _check_wire(target, self.n_qubits)
        n = self.n_qubits
        t = _cnot_update(self.t, 1 + control, 1 + target)
        self.t = _cnot_update(t, 1 + n + control, 1 + n + target)

    def apply_dense(self, unitary: np.ndarray) -> None:
        rho = self.matrices()
        if unitary.ndim == 2:
            new = unitary @ rho @ unitary.conj().T
        else:
            new = np.einsum("bij,bjk,blk->bil", unitary, rho, unitary.conj())
        self.t = new.reshape(self.t.shape)

    def apply_kraus(self, kraus: Sequence[np.ndarray], wire: int) -> None:
        """``rho -> sum_k K rho K^dagger`` on one wire."""
        _check_wire(wire, self.n_qubits)
        row, col = 1 + wire, 1 + self.n_qubits + wire
        acc = None
        for k in kraus:
            term = _pair_update(_pair_update(self.t, k, row), k.conj(), col)
            acc = term if acc is None else acc + term
        self.t = acc

    def expectations(self, signs: np.ndarray) -> np.ndarray:
        diag = np.diagonal(self.matrices(), axis1=1, axis2=2).real
        return diag @ signs.T


# ---------------------------------------------------------------------------
# public operations on the value types
# ---------------------------------------------------------------------------

def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Return ``U|psi>`` for one gate; ``state`` is left untouched."""
    n = state.n_qubits
    for w in gate.wires:
        _check_wire(w, n)
    sim = BatchState.from_amplitudes(state.amplitudes[None, :])
    if gate.kind is GateKind.CNOT:
        sim.apply_cnot(*gate.wires)
    else:
        sim.apply_1q(gate.matrix(), gate.wires[0])
    return StateVector(sim.amplitudes()[0])


def apply_gate_dm(rho: DensityMatrix, gate: Gate) -> DensityMatrix:
    n = rho.n_qubits
    for w in gate.wires:
        _check_wire(w, n)
    sim = BatchDensity.from_matrices(rho.matrix[None])
    if gate.kind is GateKind.CNOT:
        sim.apply_cnot(*gate.wires)
    else:
        sim.apply_1q(gate.matrix(), gate.wires[0])
    return DensityMatrix(sim.matrices()[0])


def run_gates(gates: Sequence[Gate], n_qubits: int) -> StateVector:
    """Evolve ``|0...0>`` through ``gates``."""
    state = StateVector.zero(n_qubits)
    for g in gates:
        state = apply_gate(state, g)
    return state


def expectation_z(state: StateVector, obs: Observable) -> float:
    if obs.n_qubits != state.n_qubits:
        raise ValueError(f"observable has {obs.n_qubits} qubits, state has {state.n_qubits}")
    probs = np.abs(state.amplitudes) ** 2
    return float(probs @ obs.signs())


def expectation_z_dm(rho: DensityMatrix, obs: Observable) -> float:
    """``Tr(O rho)`` for a diagonal Z-string observable."""
    if obs.n_qubits != rho.n_qubits:
        raise ValueError(f"observable has {obs.n_qubits} qubits, density matrix has {rho.n_qubits}")
    value = np.sum(np.diagonal(rho.matrix) * obs.signs())
    return float(value.real)


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"size mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def reduced_density_batch(amps: np.ndarray, wire: int) -> np.ndarray:
    """Single-qubit reduced density matrices for a batch of pure states.

    ``amps`` has shape ``(B, 2**n)``; the result has shape ``(B, 2, 2)``.
    """
    n = _n_qubits_for(amps.shape[-1])
    _check_wire(wire, n)
    m = amps.reshape(amps.shape[0], 2**wire, 2, 2 ** (n - wire - 1))
    return np.einsum("bxir,bxjr->bij", m, m.conj())


def partial_trace(source: StateVector | DensityMatrix, keep_wire: int) -> DensityMatrix:
    """Trace out every wire except ``keep_wire``."""
    if isinstance(source, StateVector):
        _check_wire(keep_wire, source.n_qubits)
        return DensityMatrix(reduced_density_batch(source.amplitudes[None, :], keep_wire)[0])
    n = source.n_qubits
    _check_wire(keep_wire, n)
    t = source.matrix.reshape((2**keep_wire, 2, 2 ** (n - keep_wire - 1)) * 2)
    return DensityMatrix(np.einsum("xiyxjy->ij", t))


def random_state(n_qubits: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state."""
    v = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    return StateVector(v / np.linalg.norm(v))


def embed_operator(op: np.ndarray, wires: Sequence[int], n_qubits: int) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of a 1- or 2-wire operator built with Kronecker products.

    Independent of the stride kernels; used as a cross-check.
    """
    wires = list(wires)
    if len(wires) == 1:
        w = wires[0]
        return np.kron(np.kron(np.eye(2**w), op), np.eye(2 ** (n_qubits - w - 1)))
    if len(wires) != 2:
        raise ValueError("only 1- and 2-wire operators are supported")
    d = 2**n_qubits
    full = np.zeros((d, d), dtype=np.complex128)
    a, b = wires
    for col in range(d):
        bits = [(col >> (n_qubits - 1 - k)) & 1 for k in range(n_qubits)]
        local_in = 2 * bits[a] + bits[b]
        for local_out in range(4):
            amp = op[local_out, local_in]
            if amp == 0:
                continue
            out_bits = list(bits)
            out_bits[a], out_bits[b] = local_out >> 1, local_out & 1
            row = int("".join(map(str, out_bits)), 2)
            full[row, col] += amp
    return full


def gate_unitary(gate: Gate, n_qubits: int) -> np.ndarray:
    return embed_operator(gate.matrix(), gate.wires, n_qubits)
