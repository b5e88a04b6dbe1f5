"""Hybrid quantum neural networks with data re-uploading, simulated in numpy."""

from .classical import Activation, DenseNet
from .embedding import AMPLITUDE, ANGLE, Embedding, EmbeddingKind
from .noise import Channel, Insertion, NoiseModel
from .reupload import PQCBlockSpec, ReuploadCircuit, expectations, qnn_forward
from .training import DenseModel, HybridModel, TrainConfig, TrainingDiverged, train

__version__ = "0.1.0"
