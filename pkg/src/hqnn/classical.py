"""Small dense feed-forward networks with hand-written backprop."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class Activation(enum.Enum):
    RELU = "relu"
    TANH = "tanh"
    SIGMOID = "sigmoid"
    IDENTITY = "identity"


def _act(kind: Activation, z: np.ndarray) -> np.ndarray:
    if kind is Activation.RELU:
        return np.maximum(z, 0.0)
    if kind is Activation.TANH:
        return np.tanh(z)
    if kind is Activation.SIGMOID:
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    return z


def _act_grad(kind: Activation, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if kind is Activation.RELU:
        return (z > 0).astype(float)
    if kind is Activation.TANH:
        return 1.0 - a**2
    if kind is Activation.SIGMOID:
        return a * (1.0 - a)
    return np.ones_like(z)


@dataclass(eq=False)
class DenseNet:
    """``y = act_L(W_L ... act_1(W_1 x + b_1) ... + b_L)``.

    ``weights[l]`` has shape ``(widths[l+1], widths[l])``.
    """

    widths: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: list[Activation]
    _version: int = field(default=0, repr=False)

    def __post_init__(self):
        self.widths = [int(w) for w in self.widths]
        self.activations = [Activation(a) for a in self.activations]
        n_layers = len(self.widths) - 1
        if n_layers < 1 or any(w < 1 for w in self.widths):
            raise ValueError(f"invalid layer widths {self.widths}")
        if not (len(self.weights) == len(self.biases) == len(self.activations) == n_layers):
            raise ValueError("weights, biases and activations must have one entry per layer")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.widths[l + 1], self.widths[l]) or b.shape != (self.widths[l + 1],):
                raise ValueError(f"layer {l}: weight {w.shape} / bias {b.shape} do not match widths")

    @classmethod
    def init(
        cls,
        widths: Sequence[int],
        activations: Sequence[Activation] | Activation,
        rng: np.random.Generator,
    ) -> "DenseNet":
        """Uniform ``[-sqrt(1/d_in), sqrt(1/d_in)]`` initialization for weights and biases."""
        widths = list(widths)
        if isinstance(activations, (Activation, str)):
            activations = [Activation(activations)] * (len(widths) - 1)
        weights, biases = [], []
        for d_in, d_out in zip(widths[:-1], widths[1:]):
            bound = np.sqrt(1.0 / d_in)
            weights.append(rng.uniform(-bound, bound, size=(d_out, d_in)))
            biases.append(rng.uniform(-bound, bound, size=d_out))
        return cls(widths, weights, biases, list(activations))

    @property
    def d_in(self) -> int:
        return self.widths[0]

    @property
    def d_out(self) -> int:
        return self.widths[-1]

    @property
    def n_params(self) -> int:
        return count_params(self)

    def get_flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.extend([w.ravel(), b])
        return np.concatenate(parts)

    def set_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {flat.size}")
        pos = 0
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            self.weights[l] = flat[pos : pos + w.size].reshape(w.shape).copy()
            pos += w.size
            self.biases[l] = flat[pos : pos + b.size].copy()
            pos += b.size
        self._version += 1

    def copy(self) -> "DenseNet":
        return DenseNet(
            list(self.widths),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            list(self.activations),
        )


@dataclass(eq=False)
class GradientTape:
    inputs: np.ndarray
    pre: list[np.ndarray]
    post: list[np.ndarray]
    version: int
    single: bool


def count_params(net: DenseNet) -> int:
    return sum(a * b + b for a, b in zip(net.widths[:-1], net.widths[1:]))


def forward(net: DenseNet, x) -> tuple[np.ndarray, GradientTape]:
    """Run the network on one input ``(d_in,)`` or a batch ``(B, d_in)``."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    a = x[None, :] if single else x
    if a.ndim != 2 or a.shape[1] != net.d_in:
        raise ValueError(f"expected input width {net.d_in}, got shape {x.shape}")
    pre, post = [], []
    for w, b, kind in zip(net.weights, net.biases, net.activations):
        z = a @ w.T + b
        a = _act(kind, z)
        pre.append(z)
        post.append(a)
    if not np.all(np.isfinite(a)):
        raise FloatingPointError("non-finite values in network output")
    tape = GradientTape(x[None, :] if single else x, pre, post, net._version, single)
    return (a[0] if single else a), tape


def backward(net: DenseNet, tape: GradientTape, upstream) -> tuple[np.ndarray, list[tuple[np.ndarray, np.ndarray]]]:
    """Reverse pass for ``sum(output * upstream)``.

    Returns the input gradient (same shape as the forward input) and a list of
    ``(dW, db)`` per layer, summed over the batch.
    """
    if tape.version != net._version or len(tape.pre) != len(net.weights):
        raise ValueError("stale gradient tape: network parameters changed after forward()")
    g = np.asarray(upstream, dtype=float)
    g = g[None, :] if g.ndim == 1 else g
    if g.shape != tape.post[-1].shape:
        raise ValueError(f"upstream shape {g.shape} does not match output {tape.post[-1].shape}")
    grads: list[tuple[np.ndarray, np.ndarray]] = []
    for l in range(len(net.weights) - 1, -1, -1):
        g = g * _act_grad(net.activations[l], tape.pre[l], tape.post[l])
        a_prev = tape.post[l - 1] if l > 0 else tape.inputs
        grads.append((g.T @ a_prev, g.sum(axis=0)))
        g = g @ net.weights[l]
    grads.reverse()
    return (g[0] if tape.single else g), grads


def flatten_grads(grads: list[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """Flatten ``(dW, db)`` pairs in the same order as :meth:`DenseNet.get_flat`."""
    parts = []
    for dw, db in grads:
        parts.extend([dw.ravel(), db])
    return np.concatenate(parts)
