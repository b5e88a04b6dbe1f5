"""Parameter-shift gradients for re-uploading circuits.

Every trainable angle (and every occurrence of an encoding angle) enters the
circuit through a single Pauli rotation, so

    d<O>/d phi = ( <O>(phi + pi/2) - <O>(phi - pi/2) ) / 2

is exact. All shifted circuits for a batch are stacked and evaluated in one
pass. The shift for an encoding angle is applied to one layer occurrence at a
time and the per-occurrence derivatives are summed.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .embedding import Embedding
from .qstate import Observable, sign_matrix
from .reupload import ReuploadCircuit, _measured, encode_inputs, run_expectations

SHIFT = np.pi / 2
FD_STEP = 1e-5
# cap on (rows x state size) evaluated at once
_CHUNK_ELEMENTS = 1 << 22


def _evaluate_rows(circuit, theta_rows, enc_rows, signs, noise) -> np.ndarray:
    rows = enc_rows.shape[0]
    width = 4**circuit.n_qubits if (noise is not None and noise.is_active) else 2**circuit.n_qubits
    step = max(1, _CHUNK_ELEMENTS // width)
    if rows <= step:
        return run_expectations(circuit, enc_rows, signs, theta=theta_rows, noise=noise)
    parts = [
        run_expectations(circuit, enc_rows[i : i + step], signs, theta=theta_rows[i : i + step], noise=noise)
        for i in range(0, rows, step)
    ]
    return np.concatenate(parts)


def shift_jacobians(
    circuit: ReuploadCircuit,
    h,
    measured: Sequence[Observable] | None = None,
    noise=None,
    wrt_theta: bool = True,
    wrt_inputs: bool = True,
) -> tuple[np.ndarray | None, np.ndarray | None]:
    """Jacobians of the measured expectations for a batch ``h`` of shape ``(B, width)``.

    Returns ``(jac_theta, jac_h)`` with shapes ``(B, K, L, n, 3)`` and
    ``(B, K, width)``. Angle inputs use the shift rule; amplitude inputs fall
    back to central finite differences (there is no shift rule through the
    state-preparation unitary).
    """
    h = np.atleast_2d(np.asarray(h, dtype=float))
    batch = h.shape[0]
    signs = sign_matrix(_measured(circuit, measured), circuit.n_qubits)
    L, n = circuit.n_layers, circuit.n_qubits
    angle = circuit.embedding.kind is Embedding.ANGLE
    enc = encode_inputs(circuit, h)
    n_theta = circuit.n_params if wrt_theta else 0
    n_occ = L * n if (wrt_inputs and angle) else 0

    jac_theta = jac_h = None
    configs = 2 * (n_theta + n_occ)
    if configs:
        theta = np.broadcast_to(circuit.theta, (configs,) + circuit.theta.shape).copy()
        enc_cfg = np.broadcast_to(enc, (configs,) + enc.shape).copy()
        flat_theta = theta.reshape(configs, -1)
        for j in range(n_theta):
            flat_theta[2 * j, j] += SHIFT
            flat_theta[2 * j + 1, j] -= SHIFT
        for o in range(n_occ):
            layer, wire = divmod(o, n)
            row = 2 * (n_theta + o)
            enc_cfg[row, :, layer, wire] += SHIFT
            enc_cfg[row + 1, :, layer, wire] -= SHIFT
        theta_rows = np.repeat(theta, batch, axis=0)
        enc_rows = enc_cfg.reshape((configs * batch,) + enc.shape[1:])
        values = _evaluate_rows(circuit, theta_rows, enc_rows, signs, noise)
        values = values.reshape(configs // 2, 2, batch, -1)
        diffs = 0.5 * (values[:, 0] - values[:, 1])  # (params, B, K)
        if n_theta:
            jac_theta = diffs[:n_theta].transpose(1, 2, 0).reshape((batch, -1) + circuit.theta.shape)
        if n_occ:
            per_occ = diffs[n_theta:].reshape(L, n, batch, -1)
            jac_h = per_occ.sum(axis=0).transpose(1, 2, 0)
    if wrt_inputs and not angle:
        jac_h = _finite_difference_inputs(circuit, h, signs, noise)
    return jac_theta, jac_h


def _finite_difference_inputs(circuit, h, signs, noise) -> np.ndarray:
    batch, width = h.shape
    shifted = np.repeat(h[None], 2 * width, axis=0)
    for i in range(width):
        shifted[2 * i, :, i] += FD_STEP
        shifted[2 * i + 1, :, i] -= FD_STEP
    rows = shifted.reshape(-1, width)
    enc = encode_inputs(circuit, rows)
    theta = np.broadcast_to(circuit.theta, (rows.shape[0],) + circuit.theta.shape)
    values = _evaluate_rows(circuit, theta, enc, signs, noise).reshape(width, 2, batch, -1)
    return ((values[:, 0] - values[:, 1]) / (2 * FD_STEP)).transpose(1, 2, 0)


def _contract(jac: np.ndarray, upstream, single: bool) -> np.ndarray:
    """Chain ``upstream`` (``(K,)`` or ``(B, K)``) into a ``(B, K, ...)`` Jacobian."""
    if upstream is None:
        return jac[0] if single else jac
    up = np.asarray(upstream, dtype=float)
    if up.ndim == 1:
        up = np.broadcast_to(up, jac.shape[:2])
    if up.shape != jac.shape[:2]:
        raise ValueError(f"upstream must have shape {jac.shape[1:2]} or {jac.shape[:2]}, got {up.shape}")
    return np.tensordot(up, jac, axes=([0, 1], [0, 1]))


def param_shift_grad(
    circuit: ReuploadCircuit,
    h,
    measured: Sequence[Observable] | None = None,
    upstream=None,
    noise=None,
) -> np.ndarray:
    """Gradient over ``theta`` via the shift rule.

    With ``upstream`` (one weight per measured observable, or per sample and
    observable) the result is ``sum_k upstream_k d<O_k>/d theta`` summed over the
    batch, shaped like ``theta``. Without it the raw Jacobian is returned.
    """
    h = np.asarray(h, dtype=float)
    single = h.ndim == 1
    jac, _ = shift_jacobians(circuit, h, measured, noise, wrt_theta=True, wrt_inputs=False)
    return _contract(jac, upstream, single)


def input_shift_grad(
    circuit: ReuploadCircuit,
    h,
    measured: Sequence[Observable] | None = None,
    upstream=None,
    noise=None,
) -> np.ndarray:
    """Gradient over the encoded inputs, summing the shift rule over all ``L`` uploads.

    Returns one gradient row per sample (``(n,)`` for a single input).
    """
    if circuit.embedding.kind is not Embedding.ANGLE:
        raise ValueError("the input shift rule needs angle embedding")
    h = np.asarray(h, dtype=float)
    single = h.ndim == 1
    _, jac = shift_jacobians(circuit, h, measured, noise, wrt_theta=False, wrt_inputs=True)
    if upstream is None:
        return jac[0] if single else jac
    up = np.atleast_2d(np.asarray(upstream, dtype=float))
    out = np.einsum("bk,bkn->bn", np.broadcast_to(up, jac.shape[:2]), jac)
    return out[0] if single else out
