"""Fully connected detector mapping y straight to a one-hot estimate."""

from typing import Dict, List, Tuple

import numpy as np

from app.lib.common.exceptions import ConfigurationError, TrainingDivergedError
from app.lib.networks.params import NetworkParams


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _as_batch(y) -> Tuple[np.ndarray, bool]:
    values = np.asarray(y, dtype=float)
    if values.ndim == 1:
        return values[None], True
    return values, False


def _forward(params: NetworkParams, Y: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray], List[np.ndarray]]:
    layers = params.spec.layers
    expected = params["W1"].shape[1]
    if Y.shape[-1] != expected:
        raise ConfigurationError(f"FullyCon expects inputs of length {expected}, got {Y.shape[-1]}")

    inputs = [Y]
    pre_activations = []
    q = Y
    for k in range(1, layers):
        p = q @ params[f"W{k}"].T + params[f"b{k}"]
        pre_activations.append(p)
        q = relu(p)
        inputs.append(q)
    output = q @ params[f"W{layers}"].T + params[f"b{layers}"]
    return output, inputs, pre_activations


def fullycon_forward(params: NetworkParams, y) -> np.ndarray:
    """
    q_1 = y, q_{k+1} = relu(W_k q_k + b_k), output W_L q_L + b_L.

    Accepts one received vector or a batch of row vectors.
    """
    Y, single = _as_batch(y)
    output, _, _ = _forward(params, Y)
    return output[0] if single else output


def fullycon_loss(x_oh, x_oh_hat):
    """Squared l2 distance; per sample for batches."""
    diff = np.asarray(x_oh, dtype=float) - np.asarray(x_oh_hat, dtype=float)
    return np.sum(diff**2, axis=-1)


def fullycon_gradient(
    params: NetworkParams, y, x_oh
) -> Tuple[float, Dict[str, np.ndarray], np.ndarray]:
    """
    Mean batch loss and its exact gradient for every parameter.

    :return: (mean loss, gradients by parameter name, per-sample losses)
    :raises TrainingDivergedError: If any per-sample loss is not finite.
    """
    Y, _ = _as_batch(y)
    X, _ = _as_batch(x_oh)
    output, inputs, pre_activations = _forward(params, Y)
    diff = output - X
    losses = np.sum(diff**2, axis=1)
    bad = np.flatnonzero(~np.isfinite(losses))
    if bad.size:
        raise TrainingDivergedError(
            f"Non-finite FullyCon loss at sample {int(bad[0])}", sample_index=int(bad[0])
        )

    batch = Y.shape[0]
    grads: Dict[str, np.ndarray] = {}
    upstream = 2.0 * diff / batch
    for k in range(params.spec.layers, 0, -1):
        grads[f"W{k}"] = upstream.T @ inputs[k - 1]
        grads[f"b{k}"] = upstream.sum(axis=0)
        if k > 1:
            upstream = (upstream @ params[f"W{k}"]) * (pre_activations[k - 2] > 0)

    ordered = {name: grads[name] for name in params.names()}
    return float(losses.mean()), ordered, losses
