from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from app.lib.common.exceptions import ConfigurationError
from app.lib.networks.params import NetworkParams


@dataclass
class AdamState:
    """First and second moment accumulators per parameter plus hyperparameters."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def initial(cls, params: NetworkParams, **hyperparameters: float) -> "AdamState":
        """Zero accumulators shaped like the parameters."""
        return cls(
            first_moment={k: np.zeros_like(v, dtype=float) for k, v in params.arrays.items()},
            second_moment={k: np.zeros_like(v, dtype=float) for k, v in params.arrays.items()},
            **hyperparameters,  # type: ignore[arg-type]
        )

    def hyperparameters(self) -> Dict[str, float]:
        return {
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "epsilon": self.epsilon,
        }


def adam_step(
    params: NetworkParams,
    grads: Dict[str, np.ndarray],
    state: AdamState,
    learning_rate: Optional[float] = None,
) -> Tuple[NetworkParams, AdamState]:
    """
    One bias-corrected Adam update.

    :param learning_rate: Overrides the state's rate for this step (decay schedules).
    :return: New parameters and new state; the inputs are left untouched.
    :raises ConfigurationError: If gradient names or shapes do not mirror the parameters.
    """
    lr = state.learning_rate if learning_rate is None else learning_rate
    step = state.step + 1
    correction1 = 1.0 - state.beta1**step
    correction2 = 1.0 - state.beta2**step

    arrays: Dict[str, np.ndarray] = {}
    first: Dict[str, np.ndarray] = {}
    second: Dict[str, np.ndarray] = {}
    for name, value in params.arrays.items():
        if name not in grads or np.shape(grads[name]) != value.shape:
            raise ConfigurationError(f"Gradient for '{name}' is missing or has the wrong shape")
        grad = np.asarray(grads[name], dtype=float)
        first[name] = state.beta1 * state.first_moment[name] + (1.0 - state.beta1) * grad
        second[name] = state.beta2 * state.second_moment[name] + (1.0 - state.beta2) * grad**2
        update = (first[name] / correction1) / (np.sqrt(second[name] / correction2) + state.epsilon)
        arrays[name] = value - lr * update

    new_state = AdamState(
        learning_rate=state.learning_rate,
        beta1=state.beta1,
        beta2=state.beta2,
        epsilon=state.epsilon,
        step=step,
        first_moment=first,
        second_moment=second,
    )
    return params.with_arrays(arrays), new_state
