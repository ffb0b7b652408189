"""Exhaustive ML search and exact Bayes posteriors by full enumeration."""

from typing import Optional

import numpy as np
from scipy.special import logsumexp

from app.lib.common.exceptions import DomainError, SearchSpaceError
from app.lib.detectors.base_detector import BaseDetector, DetectorOutput
from app.lib.mimo.constellation import (
    MAX_CANDIDATES,
    Constellation,
    count_candidates,
    enumerate_candidates,
    hard_round,
    symbol_indices,
)


def guard_search_space(c: Constellation, n_components: int) -> int:
    """
    Candidate count of a full enumeration.

    :raises SearchSpaceError: If it exceeds MAX_CANDIDATES.
    """
    total = count_candidates(c, n_components)
    if total > MAX_CANDIDATES:
        raise SearchSpaceError(
            f"{c.kind.value} with {n_components} components has {total} candidates, above {MAX_CANDIDATES}"
        )
    return total


def lexicographic_first(rows: np.ndarray) -> np.ndarray:
    """Row that sorts first when comparing column 0, then column 1, ..."""
    order = np.lexsort(rows[:, ::-1].T)
    return rows[order[0]]


def lexicographically_less(a: np.ndarray, b: np.ndarray) -> bool:
    differing = np.flatnonzero(a != b)
    return bool(differing.size) and bool(a[differing[0]] < b[differing[0]])


def squared_residuals(H: np.ndarray, y: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """||y - Hx||^2 for every row x of candidates."""
    residual = y - candidates @ H.T
    return np.einsum("ij,ij->i", residual, residual)


def ml_detect_exhaustive(H, y, c: Constellation) -> DetectorOutput:
    """
    Minimizes ||y - Hx||^2 over every valid transmit vector.

    Ties resolve to the lexicographically smallest vector.

    :raises SearchSpaceError: If the enumeration is too large.
    """
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    total = guard_search_space(c, H.shape[1])

    best_metric = np.inf
    best: Optional[np.ndarray] = None
    for chunk in enumerate_candidates(c, H.shape[1]):
        metric = squared_residuals(H, y, chunk)
        lowest = metric.min()
        if lowest > best_metric:
            continue
        winner = lexicographic_first(chunk[metric == lowest])
        if best is None or lowest < best_metric or lexicographically_less(winner, best):
            best_metric = float(lowest)
            best = winner.copy()

    assert best is not None
    return DetectorOutput(hard=best, metadata={"candidates": total, "metric": best_metric})


def exact_posteriors(H, y, sigma2: float, c: Constellation) -> DetectorOutput:
    """
    Per-component posteriors P(x_j = s | y) under a uniform prior on valid vectors.

    Mass is accumulated in the log domain chunk by chunk; the hard output is
    the per-row argmax (projected to a valid point for 8-PSK).

    :raises DomainError: If sigma2 is not positive.
    :raises SearchSpaceError: If the enumeration is too large.
    """
    if not sigma2 > 0:
        raise DomainError(f"Noise variance must be positive, got {sigma2}")
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    n = H.shape[1]
    size = c.onehot_dim
    total = guard_search_space(c, n)

    log_mass = np.full((n, size), -np.inf)
    with np.errstate(divide="ignore"):
        for chunk in enumerate_candidates(c, n):
            log_weight = -squared_residuals(H, y, chunk) / (2.0 * sigma2)
            indices = symbol_indices(chunk, c)
            for s in range(size):
                masked = np.where(indices == s, log_weight[:, None], -np.inf)
                log_mass[:, s] = np.logaddexp(log_mass[:, s], logsumexp(masked, axis=0))

        posteriors = np.exp(log_mass - logsumexp(log_mass, axis=1, keepdims=True))
    hard = hard_round(c.alphabet[posteriors.argmax(axis=1)], c)
    return DetectorOutput(hard=hard, posteriors=posteriors, metadata={"candidates": total})


class MLDetector(BaseDetector):
    name = "ml"
    search_based = True

    def _detect(self, H: np.ndarray, y: np.ndarray, sigma2: Optional[float]) -> DetectorOutput:
        return ml_detect_exhaustive(H, y, self.constellation)


class ExactPosteriorDetector(BaseDetector):
    name = "exact"
    uses_noise_variance = True
    search_based = True
    produces_posteriors = True

    def _detect(self, H: np.ndarray, y: np.ndarray, sigma2: Optional[float]) -> DetectorOutput:
        return exact_posteriors(H, y, float(sigma2), self.constellation)  # type: ignore[arg-type]
