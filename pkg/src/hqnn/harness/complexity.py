"""Closed-form parameter, gate and depth accounting for the model zoo.

Two families of formulas live here:

* exact counts for the models this package builds (dense layers carry biases),
  used by :func:`hqnn.harness.models.build_model` as a build-time audit;
* the bias-free efficiency formulas for comparing an HQNN with a classical
  network of equal depth or equal parameter budget.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..embedding import Embedding


def quantum_params(n_qubits: int, n_layers: int) -> int:
    return 3 * n_qubits * n_layers


def angle_depth(n_qubits: int, n_layers: int) -> int:
    """One encoding step, three rotation steps and ``n`` CNOT steps per layer."""
    return (4 + n_qubits) * n_layers


def amplitude_depth(n_qubits: int, n_layers: int) -> int:
    """``2^n`` per state preparation (upper bound) plus ``3 + n`` for the trainable block."""
    return 2**n_qubits * n_layers + (3 + n_qubits) * n_layers


def ring_cnots(n_qubits: int) -> int:
    return n_qubits if n_qubits > 1 else 0


def amplitude_prep_cnots(n_qubits: int) -> int:
    """Best known lower bound on CNOTs for preparing an arbitrary ``n``-qubit state, rounded up."""
    return -(-(4**n_qubits - 3 * n_qubits - 1) // 4)


def u4_gates(embedding: Embedding, n_qubits: int, n_layers: int) -> int:
    per_layer = ring_cnots(n_qubits)
    if Embedding(embedding) is Embedding.AMPLITUDE:
        per_layer += amplitude_prep_cnots(n_qubits)
    return per_layer * n_layers


def circuit_depth(embedding: Embedding, n_qubits: int, n_layers: int) -> int:
    if Embedding(embedding) is Embedding.AMPLITUDE:
        return amplitude_depth(n_qubits, n_layers)
    return angle_depth(n_qubits, n_layers)


def depth_expression(embedding: Embedding, n_qubits: int, n_layers: int) -> str:
    if Embedding(embedding) is Embedding.AMPLITUDE:
        return f"2^{n_qubits}*{n_layers} + (3+{n_qubits})*{n_layers} = {amplitude_depth(n_qubits, n_layers)}"
    return f"(4+{n_qubits})*{n_layers} = {angle_depth(n_qubits, n_layers)}"


# exact counts for the built models (weights + biases)

def dense_params(widths) -> int:
    widths = list(widths)
    return sum((a + 1) * b for a, b in zip(widths[:-1], widths[1:]))


def nn_widths(n_inputs: int, n_layers: int, width: int = 2) -> list[int]:
    """``n_layers`` dense layers: ``n_layers - 1`` hidden layers of ``width`` units, then one output."""
    if n_layers < 1:
        raise ValueError("a network needs at least one layer")
    return [n_inputs] + [width] * (n_layers - 1) + [1]


def nn_params(n_inputs: int, n_layers: int, width: int = 2) -> int:
    return dense_params(nn_widths(n_inputs, n_layers, width))


def hqnn_params(n_inputs: int, encoded_width: int, n_measured: int, embed: bool = True, regress: bool = True) -> int:
    total = dense_params([n_inputs, encoded_width]) if embed else 0
    if regress:
        total += dense_params([n_measured, 1])
    return total


# bias-free efficiency formulas

def hqnn_classical_formula(n_in: int, m_in: int, m_out: int = 1) -> int:
    """Input net ``N_in -> M_in`` plus output net ``M_in -> M_out``, weights only."""
    return (n_in + m_out) * m_in


def nn_classical_formula(n_in: int, m_in: int, n_layers: int, m_out: int = 1) -> int:
    return (n_in + m_out) * m_in + m_in**2 * (n_layers + 2)


def equal_param_qnn_layers(m_in: int, nn_layers: int) -> int:
    """QNN depth whose ``3 M_in L`` angles match the ``M_in^2 (L_nn + 2)`` hidden weights."""
    num = m_in * (nn_layers + 2)
    if num % 3:
        raise ValueError(f"M_in (L_nn + 2) = {num} is not divisible by 3")
    return num // 3


def qpu_ratio_equal_layers(m_in: int, n_layers: int) -> float:
    """Largest ``QPU_two / CPU_time`` at which the HQNN still runs faster (same depth)."""
    return m_in**2 * (n_layers + 2) / ((m_in + 4) * n_layers)


def qpu_ratio_equal_params(m_in: int) -> float:
    return 3 * m_in / (m_in + 4)


def nn_angle_classical(n_in: int, m_in: int) -> int:
    return (n_in + 1) * m_in


def nn_amplitude_classical(n_in: int, m_in: int) -> int:
    return n_in * 2**m_in + m_in


@dataclass(frozen=True)
class ComplexityReport:
    model: str
    embedding: str
    n_qubits: int
    n_layers: int
    classical_param_count: int
    quantum_param_count: int
    u4_gate_count: int
    circuit_depth: int
    circuit_depth_expression: str

    def to_dict(self) -> dict:
        return asdict(self)


def complexity_report(spec) -> ComplexityReport:
    """Counts for an :class:`~hqnn.harness.models.ExperimentSpec`, from formulas only."""
    from .models import ModelKind

    kind = ModelKind(spec.model)
    emb = Embedding(spec.embedding)
    n, L, d = spec.n_qubits, spec.n_layers, spec.n_inputs
    if kind is ModelKind.NN:
        return ComplexityReport(kind.value, "-", 0, L, nn_params(d, L, spec.nn_width), 0, 0, 0, "-")
    encoded = n if emb is Embedding.ANGLE else 2**n
    classical = hqnn_params(
        d,
        encoded,
        n,
        embed=kind is ModelKind.HQNN,
        regress=kind in (ModelKind.HQNN, ModelKind.HQNN_NO_CIN),
    )
    return ComplexityReport(
        kind.value,
        emb.value,
        n,
        L,
        classical,
        quantum_params(n, L),
        u4_gates(emb, n, L),
        circuit_depth(emb, n, L),
        depth_expression(emb, n, L),
    )
