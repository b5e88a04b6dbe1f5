"""Experiment settings and model construction with a parameter-count audit."""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..classical import Activation, DenseNet
from ..embedding import Embedding, EmbeddingKind
from ..noise import Channel, Insertion, NoiseModel, NOISELESS
from ..reupload import ReuploadCircuit
from ..training import DenseModel, HybridModel, TrainConfig
from .complexity import complexity_report, nn_widths


class Task(enum.Enum):
    UNIVARIATE = "univariate"
    MULTIVARIATE = "multivariate"
    CUSTOM_CSV = "custom_csv"


class ModelKind(enum.Enum):
    NN = "nn"
    QNN = "qnn"
    HQNN = "hqnn"
    HQNN_NO_CIN = "hqnn_no_cin"


class ModelAuditError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    task: Task = Task.UNIVARIATE
    model: ModelKind = ModelKind.HQNN
    n_qubits: int = 1
    n_layers: int = 5
    embedding: Embedding = Embedding.ANGLE
    noise: NoiseModel = NOISELESS
    train: TrainConfig = field(default_factory=TrainConfig)
    output_dir: Path | None = None
    nn_width: int = 2
    range_r: int = 1
    data_path: Path | None = None
    custom_inputs: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "task", Task(self.task))
        object.__setattr__(self, "model", ModelKind(self.model))
        object.__setattr__(self, "embedding", Embedding(self.embedding))
        if self.n_layers < 1:
            raise ValueError("n_layers must be positive")
        if self.model is not ModelKind.NN and self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        if self.nn_width < 1:
            raise ValueError("nn_width must be positive")
        if self.task is Task.CUSTOM_CSV and (self.data_path is None or self.custom_inputs is None):
            raise ValueError("a custom_csv task needs data_path and custom_inputs")
        if self.model in (ModelKind.QNN, ModelKind.HQNN_NO_CIN):
            d, n = self.n_inputs, self.n_qubits
            if self.embedding is Embedding.ANGLE and d != n:
                raise ValueError(f"{self.model.value} with angle embedding needs {n} inputs for {n} qubits, task has {d}")
            if self.embedding is Embedding.AMPLITUDE and d > 2**n:
                raise ValueError(f"{d} inputs do not fit in {n} qubits")

    @property
    def n_inputs(self) -> int:
        if self.task is Task.UNIVARIATE:
            return 1
        if self.task is Task.MULTIVARIATE:
            return 2
        return int(self.custom_inputs)

    def with_seed(self, seed: int) -> "ExperimentSpec":
        return replace(self, train=replace(self.train, seed=seed))

    def to_dict(self) -> dict:
        return {
            "task": self.task.value,
            "model": self.model.value,
            "n_qubits": self.n_qubits,
            "n_layers": self.n_layers,
            "embedding": self.embedding.value,
            "nn_width": self.nn_width,
            "range_r": self.range_r,
            "noise": {
                "channel": self.noise.channel.value,
                "rate": self.noise.rate,
                "insertion": self.noise.insertion.value,
            },
            "train": asdict(self.train),
            "data_path": None if self.data_path is None else str(self.data_path),
            "custom_inputs": self.custom_inputs,
        }


def _build(spec: ExperimentSpec, rng: np.random.Generator):
    d, n, L = spec.n_inputs, spec.n_qubits, spec.n_layers
    if spec.model is ModelKind.NN:
        widths = nn_widths(d, L, spec.nn_width)
        acts = [Activation.RELU] * (L - 1) + [Activation.IDENTITY]
        return DenseModel(DenseNet.init(widths, acts, rng))
    emb = EmbeddingKind(spec.embedding)
    circuit = ReuploadCircuit.random(n, L, rng, embedding=emb, range_r=spec.range_r if n > 1 else 1)
    embed_net = regress_net = None
    if spec.model is ModelKind.HQNN:
        embed_net = DenseNet.init([d, emb.input_width(n)], Activation.TANH, rng)
    if spec.model in (ModelKind.HQNN, ModelKind.HQNN_NO_CIN):
        regress_net = DenseNet.init([n, 1], Activation.IDENTITY, rng)
    return HybridModel(circuit, embed_net, regress_net, noise=spec.noise if spec.noise.is_active else None)


def build_model(spec: ExperimentSpec, seed: int | None = None):
    """Construct the model of ``spec``, seeded by ``seed`` (default: ``spec.train.seed``).

    Raises :class:`ModelAuditError` if the realized parameter counts disagree
    with :func:`complexity_report`.
    """
    rng = np.random.default_rng(spec.train.seed if seed is None else seed)
    model = _build(spec, rng)
    expected = complexity_report(spec)
    got = (model.n_classical, model.n_quantum)
    want = (expected.classical_param_count, expected.quantum_param_count)
    if got != want:
        raise ModelAuditError(f"{spec.model.value}: built {got} classical/quantum parameters, formulas give {want}")
    return model
