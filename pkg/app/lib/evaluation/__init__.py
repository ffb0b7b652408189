"""Monte Carlo curves, runtime benchmarks and oracle checks."""

from app.lib.evaluation.metrics import (
    ErrorMode,
    binomial_stderr,
    error_rate,
    posterior_distance,
    soft_output_from_onehot,
)

__all__ = [
    "ErrorMode",
    "binomial_stderr",
    "error_rate",
    "posterior_distance",
    "soft_output_from_onehot",
]
