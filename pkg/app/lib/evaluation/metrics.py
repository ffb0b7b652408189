from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np

from app.lib.common.exceptions import ConfigurationError, DomainError
from app.lib.mimo.constellation import Constellation, ConstellationKind, symbol_indices

# Floor added to every clamped one-hot entry before normalization
PROBABILITY_FLOOR = 1e-12

# Two decisions are the same symbol within this distance
MATCH_TOLERANCE = 1e-9


class ErrorMode(str, Enum):
    BER = "ber"
    SER = "ser"


def default_error_mode(c: Constellation) -> ErrorMode:
    """SER for 8-PSK, whose components carry no bit labels; BER otherwise."""
    return ErrorMode.SER if c.kind is ConstellationKind.PSK8 else ErrorMode.BER


def error_rate(
    x_hat, x_true, c: Constellation, mode: Union[str, ErrorMode, None] = None
) -> Tuple[int, int]:
    """
    Count decision errors.

    SER counts complex symbols (a symbol is wrong if either component is);
    BER counts bits under the constellation's per-axis labels.

    :return: (errors, denominator)
    :raises ConfigurationError: If BER is requested for 8-PSK.
    :raises DomainError: If shapes differ.
    """
    resolved = ErrorMode(mode) if mode is not None else default_error_mode(c)
    estimate = np.asarray(x_hat, dtype=float)
    truth = np.asarray(x_true, dtype=float)
    if estimate.shape != truth.shape:
        raise DomainError(f"Decision shape {estimate.shape} differs from truth {truth.shape}")
    if truth.size == 0:
        return 0, 0

    if resolved is ErrorMode.SER:
        wrong = ~(np.abs(estimate - truth) <= MATCH_TOLERANCE)
        if c.is_complex:
            half = truth.shape[-1] // 2
            wrong = wrong[..., :half] | wrong[..., half:]
        return int(wrong.sum()), int(wrong.size)

    if not c.bit_labels:
        raise ConfigurationError(f"BER is undefined for {c.kind.value}; use SER")
    labels = np.asarray(c.bit_labels)
    bits_hat = labels[symbol_indices(estimate, c)]
    bits_true = labels[symbol_indices(truth, c)]
    return int(np.sum(bits_hat != bits_true)), int(bits_true.size)


def posterior_distance(P, Q):
    """Sum of absolute differences between distributions; per row for matrices."""
    return np.sum(np.abs(np.asarray(P, dtype=float) - np.asarray(Q, dtype=float)), axis=-1)


def soft_output_from_onehot(x_oh_hat, c: Constellation) -> np.ndarray:
    """
    Posterior rows from raw one-hot estimates: clamp negatives, add a floor, normalize.

    :return: Array of shape (..., n, |S|).
    """
    weights = np.asarray(x_oh_hat, dtype=float)
    if weights.shape[-1] % c.onehot_dim:
        raise DomainError(f"One-hot length {weights.shape[-1]} is not a multiple of {c.onehot_dim}")
    blocks = np.maximum(weights.reshape(*weights.shape[:-1], -1, c.onehot_dim), 0.0) + PROBABILITY_FLOOR
    return blocks / blocks.sum(axis=-1, keepdims=True)


def binomial_stderr(errors: int, denominator: int) -> float:
    """sqrt(p (1 - p) / n) of an estimated rate; NaN when nothing was counted."""
    if denominator <= 0:
        return float("nan")
    rate = errors / denominator
    return float(np.sqrt(rate * (1.0 - rate) / denominator))


def safe_rate(errors: int, denominator: int) -> float:
    return errors / denominator if denominator > 0 else float("nan")


def mean_distance(total: float, count: int) -> Optional[float]:
    return total / count if count else None
