"""
DetNet: unfolded projected gradient descent with learned step sizes.

Each layer forms q = x - delta1 H^T y + delta2 H^T H x, lifts [q; v] through
a relu layer and reads out a one-hot estimate and the next auxiliary vector,
both mixed with the previous layer's values by the residual weight. H and y
enter only through H^T y and H^T H.
"""

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from app.lib.common.exceptions import ConfigurationError, TrainingDivergedError
from app.lib.networks.fullycon import relu
from app.lib.networks.params import LossWeighting, NetworkParams


@dataclass
class LayerCache:
    x_prev: np.ndarray
    gram_x: np.ndarray
    lifted_input: np.ndarray
    pre_activation: np.ndarray
    hidden: np.ndarray


def compressed_statistics(H, y) -> Tuple[np.ndarray, np.ndarray]:
    """(H^T y, H^T H) for one instance or a batch."""
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    if H.ndim == 2:
        H, y = H[None], y[None]
    if y.shape != H.shape[:2]:
        raise ConfigurationError(f"Shapes H{H.shape} and y{y.shape} are inconsistent")
    return np.einsum("bki,bk->bi", H, y), np.einsum("bki,bkj->bij", H, H)


def layer_weights(layers: int, weighting) -> np.ndarray:
    """Loss weight of each layer output, l = 1..L."""
    mode = LossWeighting(weighting)
    index = np.arange(1, layers + 1, dtype=float)
    if mode is LossWeighting.LOG:
        return np.log(index)
    if mode is LossWeighting.LOG_PLUS_ONE:
        return np.log(index + 1.0)
    return np.ones(layers)


def _forward(
    params: NetworkParams, Hty: np.ndarray, HtH: np.ndarray, keep_cache: bool
) -> Tuple[List[np.ndarray], List[LayerCache]]:
    spec = params.spec
    alphabet = spec.constellation_obj.alphabet
    size = len(alphabet)
    batch, n = Hty.shape
    if n != spec.n_inputs:
        raise ConfigurationError(f"DetNet expects {spec.n_inputs} components, got {n}")
    eta = spec.residual_weight

    x_hat = np.zeros((batch, n))
    v = np.zeros((batch, spec.v_width))
    mixed = np.zeros((batch, n * size))
    outputs: List[np.ndarray] = []
    cache: List[LayerCache] = []

    for k in range(1, spec.layers + 1):
        gram_x = np.einsum("bij,bj->bi", HtH, x_hat)
        q = x_hat - params[f"delta1_{k}"] * Hty + params[f"delta2_{k}"] * gram_x
        lifted = np.concatenate([q, v], axis=1)
        p = lifted @ params[f"W1_{k}"].T + params[f"b1_{k}"]
        z = relu(p)
        onehot = z @ params[f"W2_{k}"].T + params[f"b2_{k}"]
        aux = z @ params[f"W3_{k}"].T + params[f"b3_{k}"]

        if keep_cache:
            cache.append(LayerCache(x_hat, gram_x, lifted, p, z))
        mixed = eta * onehot + (1.0 - eta) * mixed
        v = eta * aux + (1.0 - eta) * v
        x_hat = mixed.reshape(batch, n, size) @ alphabet
        outputs.append(mixed)

    return outputs, cache


def detnet_forward(params: NetworkParams, H, y) -> List[np.ndarray]:
    """
    One-hot estimate of every layer, after residual mixing.

    A single instance gives vectors, a batch gives (B, |S| n) arrays.
    """
    single = np.asarray(y).ndim == 1
    Hty, HtH = compressed_statistics(H, y)
    outputs, _ = _forward(params, Hty, HtH, keep_cache=False)
    return [out[0] for out in outputs] if single else outputs


def detnet_forward_statistics(params: NetworkParams, Hty: np.ndarray, HtH: np.ndarray) -> List[np.ndarray]:
    """Forward pass from precomputed batched statistics."""
    outputs, _ = _forward(params, Hty, HtH, keep_cache=False)
    return outputs


def detnet_loss(x_oh, outputs: List[np.ndarray], weighting=LossWeighting.LOG):
    """Sum over layers of w_l ||x_oh - x_oh_hat_l||^2; per sample for batches."""
    weights = layer_weights(len(outputs), weighting)
    target = np.asarray(x_oh, dtype=float)
    return sum(w * np.sum((target - out) ** 2, axis=-1) for w, out in zip(weights, outputs))


def detnet_gradient(
    params: NetworkParams, H, y, x_oh
) -> Tuple[float, Dict[str, np.ndarray], np.ndarray]:
    """
    Mean batch loss and its exact gradient, step sizes included.

    :return: (mean loss, gradients by parameter name, per-sample losses)
    :raises TrainingDivergedError: If any per-sample loss is not finite.
    """
    spec = params.spec
    Hty, HtH = compressed_statistics(H, y)
    target = np.asarray(x_oh, dtype=float)
    if target.ndim == 1:
        target = target[None]
    outputs, cache = _forward(params, Hty, HtH, keep_cache=True)

    weights = layer_weights(spec.layers, spec.loss_weighting)
    diffs = [out - target for out in outputs]
    losses = sum(w * np.sum(d**2, axis=1) for w, d in zip(weights, diffs))
    bad = np.flatnonzero(~np.isfinite(losses))
    if bad.size:
        raise TrainingDivergedError(
            f"Non-finite DetNet loss at sample {int(bad[0])}", sample_index=int(bad[0])
        )

    alphabet = spec.constellation_obj.alphabet
    batch, n = Hty.shape
    eta = spec.residual_weight
    grad_mixed = np.zeros_like(outputs[0])
    grad_aux = np.zeros((batch, spec.v_width))
    grad_x = np.zeros((batch, n))
    grads: Dict[str, np.ndarray] = {}

    for k in range(spec.layers, 0, -1):
        layer = cache[k - 1]
        # x_hat_k = soft_decode(mixed_k) feeds layer k + 1
        grad_mixed = (
            grad_mixed
            + 2.0 * weights[k - 1] * diffs[k - 1] / batch
            + (grad_x[:, :, None] * alphabet).reshape(batch, -1)
        )
        grad_onehot = eta * grad_mixed
        grad_v_out = eta * grad_aux

        grads[f"W2_{k}"] = grad_onehot.T @ layer.hidden
        grads[f"b2_{k}"] = grad_onehot.sum(axis=0)
        grads[f"W3_{k}"] = grad_v_out.T @ layer.hidden
        grads[f"b3_{k}"] = grad_v_out.sum(axis=0)

        grad_hidden = grad_onehot @ params[f"W2_{k}"] + grad_v_out @ params[f"W3_{k}"]
        grad_pre = grad_hidden * (layer.pre_activation > 0)
        grads[f"W1_{k}"] = grad_pre.T @ layer.lifted_input
        grads[f"b1_{k}"] = grad_pre.sum(axis=0)

        grad_lifted = grad_pre @ params[f"W1_{k}"]
        grad_q = grad_lifted[:, :n]
        grads[f"delta1_{k}"] = np.array(-np.sum(grad_q * Hty))
        grads[f"delta2_{k}"] = np.array(np.sum(grad_q * layer.gram_x))

        grad_x = grad_q + params[f"delta2_{k}"] * np.einsum("bji,bj->bi", HtH, grad_q)
        grad_mixed = (1.0 - eta) * grad_mixed
        grad_aux = (1.0 - eta) * grad_aux + grad_lifted[:, n:]

    ordered = {name: grads[name] for name in params.names()}
    return float(losses.mean()), ordered, losses
