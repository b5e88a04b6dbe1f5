"""Expressibility and entangling capability of the trainable block family.

Expressibility is the KL divergence between the histogram of fidelities of
randomly parameterized state pairs and the Haar fidelity distribution
``(N - 1)(1 - F)^(N - 2)``. Entangling capability is the sample mean of the
Meyer-Wallach measure over the same kind of random states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qstate import BatchState, StateVector, reduced_density_batch, rot_matrix, ry_matrix
from .reupload import PQCBlockSpec

KL_FLOOR = 1e-9


@dataclass(frozen=True)
class SamplingPlan:
    n_samples: int = 1000
    n_bins: int = 75
    n_runs: int = 4
    seed: int = 0

    def __post_init__(self):
        if min(self.n_samples, self.n_bins, self.n_runs) < 1:
            raise ValueError("sampling plan sizes must be positive")
        if self.n_samples < self.n_bins:
            raise ValueError("n_samples must be at least n_bins")

    def run_rngs(self) -> list[np.random.Generator]:
        return [np.random.default_rng(s) for s in np.random.SeedSequence(self.seed).spawn(self.n_runs)]


def haar_pdf(f, dim: int):
    """Density of ``|<psi|phi>|^2`` for two Haar-random states in dimension ``dim``."""
    if dim < 2:
        raise ValueError("Haar fidelity density needs dimension >= 2")
    f = np.asarray(f, dtype=float)
    return (dim - 1) * (1.0 - f) ** (dim - 2)


def haar_bin_masses(n_bins: int, dim: int) -> np.ndarray:
    """Exact Haar probability of each of ``n_bins`` equal-width fidelity bins on [0, 1]."""
    if dim < 2:
        raise ValueError("Haar fidelity density needs dimension >= 2")
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    cdf_tail = (1.0 - edges) ** (dim - 1)
    return cdf_tail[:-1] - cdf_tail[1:]


def kl_from_fidelities(fidelities, dim: int, n_bins: int = 75, floor: float = KL_FLOOR) -> float:
    """``D_KL(P_sampled || P_Haar)`` over equal-width bins, both floored at ``floor`` and renormalized."""
    fid = np.clip(np.asarray(fidelities, dtype=float), 0.0, 1.0)
    if fid.size == 0:
        raise ValueError("no fidelities given")
    counts, _ = np.histogram(fid, bins=n_bins, range=(0.0, 1.0))
    p = np.maximum(counts / fid.size, floor)
    q = np.maximum(haar_bin_masses(n_bins, dim), floor)
    p, q = p / p.sum(), q / q.sum()
    return max(0.0, float(np.sum(p * np.log(p / q))))


def haar_states(n_qubits: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar-random amplitude vectors, shape ``(count, 2**n)``."""
    z = rng.normal(size=(count, 2**n_qubits)) + 1j * rng.normal(size=(count, 2**n_qubits))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


@dataclass(frozen=True)
class BlockFamily:
    """States ``prod_l [CNOT ring . ROT(theta_l)] (S(phi_l)) |0>`` with all angles drawn uniformly.

    ``with_data`` adds the ``RY`` data block of each layer, its angles sampled like
    the trainable ones; ``entangle=False`` drops the CNOT ring.
    """

    n_qubits: int
    n_layers: int
    range_r: int = 1
    with_data: bool = False
    entangle: bool = True
    low: float = 0.0
    high: float = 2 * np.pi

    def __post_init__(self):
        if self.n_qubits < 1 or self.n_layers < 1:
            raise ValueError("family needs at least one qubit and one layer")
        PQCBlockSpec(self.n_qubits, self.range_r)

    @property
    def n_params(self) -> int:
        per_layer = 3 * self.n_qubits + (self.n_qubits if self.with_data else 0)
        return per_layer * self.n_layers

    def states(self, params: np.ndarray) -> np.ndarray:
        """Amplitudes ``(B, 2**n)`` for a parameter batch ``(B, n_params)``."""
        params = np.atleast_2d(np.asarray(params, dtype=float))
        n, L = self.n_qubits, self.n_layers
        per_layer = self.n_params // L
        params = params.reshape(-1, L, per_layer)
        pairs = PQCBlockSpec(n, self.range_r).cnot_pairs() if self.entangle else []
        sim = BatchState.zeros(params.shape[0], n)
        for layer in range(L):
            p = params[:, layer]
            if self.with_data:
                data, p = p[:, :n], p[:, n:]
                for i in range(n):
                    sim.apply_1q(ry_matrix(data[:, i]), i)
            theta = p.reshape(-1, n, 3)
            mats = rot_matrix(theta[..., 0], theta[..., 1], theta[..., 2])
            for i in range(n):
                sim.apply_1q(mats[:, i], i)
            for c, t in pairs:
                sim.apply_cnot(c, t)
        return sim.amplitudes()

    def sample_states(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return self.states(rng.uniform(self.low, self.high, size=(count, self.n_params)))


def meyer_wallach(state) -> float:
    """``Q = 2 (1 - mean_k Tr rho_k^2)``; zero for one qubit."""
    amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state)
    return float(meyer_wallach_batch(amps[None, :])[0])


def meyer_wallach_batch(amps: np.ndarray) -> np.ndarray:
    amps = np.asarray(amps)
    n = int(round(np.log2(amps.shape[1])))
    if n < 2:
        return np.zeros(amps.shape[0])
    purity = np.zeros(amps.shape[0])
    for wire in range(n):
        rho = reduced_density_batch(amps, wire)
        purity += np.einsum("bij,bji->b", rho, rho).real
    return np.clip(2.0 * (1.0 - purity / n), 0.0, 1.0)


def _fidelities(family, count: int, rng: np.random.Generator) -> np.ndarray:
    a = family.sample_states(count, rng)
    b = family.sample_states(count, rng)
    return np.abs(np.einsum("bi,bi->b", a.conj(), b)) ** 2


def expressibility(family, plan: SamplingPlan = SamplingPlan()) -> tuple[float, float]:
    """Mean and standard deviation of the KL estimate over ``plan.n_runs`` runs."""
    dim = 2**family.n_qubits
    kls = [kl_from_fidelities(_fidelities(family, plan.n_samples, rng), dim, plan.n_bins) for rng in plan.run_rngs()]
    return float(np.mean(kls)), float(np.std(kls))


def entangling_capability(family, plan: SamplingPlan = SamplingPlan()) -> tuple[float, float]:
    """Mean and standard deviation over runs of the sample-mean Meyer-Wallach measure."""
    runs = [float(meyer_wallach_batch(family.sample_states(plan.n_samples, rng)).mean()) for rng in plan.run_rngs()]
    return float(np.mean(runs)), float(np.std(runs))


def pooled_std(*stds: float) -> float:
    return float(np.sqrt(np.mean(np.square(stds))))
