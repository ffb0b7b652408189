"""Schnorr-Euchner sphere decoding and breadth-first M-Best soft search."""

from typing import Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from app.lib.common.exceptions import ConfigurationError, DomainError, NumericalError
from app.lib.detectors.base_detector import BaseDetector, DetectorOutput
from app.lib.detectors.exhaustive import lexicographic_first, lexicographically_less, squared_residuals
from app.lib.mimo.constellation import Constellation, allowed_component_values

# Relative size below which a diagonal entry of R counts as zero
RANK_TOLERANCE = 1e-10


def triangularize(H: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Reduced QR of H with the received vector rotated into the R basis.

    :raises NumericalError: If H is not of full column rank.
    """
    if H.shape[0] < H.shape[1]:
        raise NumericalError(f"H with shape {H.shape} cannot have full column rank")
    Q, R = np.linalg.qr(H)
    diagonal = np.abs(np.diag(R))
    if diagonal.min() <= RANK_TOLERANCE * max(diagonal.max(), 1.0):
        raise NumericalError("H is rank deficient")
    return R, Q.T @ y


def sphere_decode(H, y, c: Constellation) -> DetectorOutput:
    """
    Exact ML detection by depth-first tree search.

    Levels are visited from the last component to the first. Children are
    tried in order of distance to the unconstrained center (ties toward the
    smaller symbol); the first leaf sets the radius, which then shrinks.
    Equal metrics keep the lexicographically smaller vector, matching the
    exhaustive search.

    :raises NumericalError: If H is rank deficient.
    """
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    R, y_rotated = triangularize(H, y)
    n = R.shape[0]
    alphabet = c.alphabet

    chosen = np.zeros(n, dtype=int)
    values = np.zeros(n)
    best = {"metric": np.inf, "x": None}
    nodes = 0

    def search(level: int, partial: float) -> None:
        nonlocal nodes
        diag = R[level, level]
        center = (y_rotated[level] - R[level, level + 1 :] @ values[level + 1 :]) / diag
        partner = chosen[level + n // 2] if c.is_joint and level < n // 2 else None
        admissible = np.flatnonzero(allowed_component_values(c, level, n, partner))
        order = admissible[np.argsort(np.abs(center - alphabet[admissible]), kind="stable")]

        for index in order:
            metric = partial + (diag * (center - alphabet[index])) ** 2
            if metric > best["metric"]:
                break
            nodes += 1
            chosen[level] = index
            values[level] = alphabet[index]
            if level > 0:
                search(level - 1, metric)
                continue
            incumbent = best["x"]
            if metric < best["metric"] or (incumbent is not None and lexicographically_less(values, incumbent)):
                best["metric"] = metric
                best["x"] = values.copy()

    search(n - 1, 0.0)
    hard = best["x"]
    assert hard is not None
    return DetectorOutput(
        hard=hard,
        metadata={"nodes": nodes, "metric": float(squared_residuals(H, y, hard[None])[0])},
    )


def mbest_soft(
    H, y, sigma2: float, c: Constellation, M: int, weighting: str = "likelihood"
) -> DetectorOutput:
    """
    Breadth-first search keeping the M lowest partial metrics per level.

    Posteriors come from the surviving list only: each candidate is weighted
    by exp(-||y - Hx||^2 / (2 sigma2)) ("likelihood") or equally ("count"),
    and symbols absent from the list at a position get probability 0.

    :raises ConfigurationError: If M < 1 or the weighting is unknown.
    :raises DomainError: If sigma2 is not positive.
    :raises NumericalError: If H is rank deficient.
    """
    if M < 1:
        raise ConfigurationError(f"M-Best list width must be at least 1, got {M}")
    if weighting not in ("likelihood", "count"):
        raise ConfigurationError(f"Unknown M-Best weighting '{weighting}'")
    if not sigma2 > 0:
        raise DomainError(f"Noise variance must be positive, got {sigma2}")

    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    R, y_rotated = triangularize(H, y)
    n = R.shape[0]
    alphabet = c.alphabet
    size = c.onehot_dim

    indices = np.zeros((1, n), dtype=int)
    metrics = np.zeros(1)
    nodes = 0
    for level in range(n - 1, -1, -1):
        fixed = alphabet[indices[:, level + 1 :]]
        centers = (y_rotated[level] - fixed @ R[level, level + 1 :]) / R[level, level]
        totals = metrics[:, None] + (R[level, level] * (centers[:, None] - alphabet)) ** 2
        if c.is_joint and level < n // 2:
            mask = c.pair_compatibility[:, indices[:, level + n // 2]].T
            totals = np.where(mask, totals, np.inf)

        flat = totals.ravel()
        order = np.argsort(flat, kind="stable")
        order = order[np.isfinite(flat[order])]
        nodes += order.size
        keep = order[:M]

        indices = indices[keep // size].copy()
        indices[:, level] = keep % size
        metrics = flat[keep]

    candidates = alphabet[indices]
    distances = squared_residuals(H, y, candidates)
    if weighting == "likelihood":
        log_weight = -distances / (2.0 * sigma2)
    else:
        log_weight = np.zeros(len(candidates))

    log_mass = np.full((n, size), -np.inf)
    with np.errstate(divide="ignore"):
        for s in range(size):
            masked = np.where(indices == s, log_weight[:, None], -np.inf)
            log_mass[:, s] = logsumexp(masked, axis=0)
        posteriors = np.exp(log_mass - logsumexp(log_mass, axis=1, keepdims=True))

    lowest = distances.min()
    hard = lexicographic_first(candidates[distances == lowest])
    return DetectorOutput(
        hard=hard,
        posteriors=posteriors,
        metadata={"list_size": len(candidates), "nodes": nodes, "metric": float(lowest)},
    )


class SphereDecoder(BaseDetector):
    name = "sd"
    search_based = True

    def _detect(self, H: np.ndarray, y: np.ndarray, sigma2: Optional[float]) -> DetectorOutput:
        return sphere_decode(H, y, self.constellation)


class MBestDetector(BaseDetector):
    name = "mbest"
    uses_noise_variance = True
    search_based = True
    produces_posteriors = True

    def __init__(self, constellation: Constellation, m: int = 5, weighting: str = "likelihood") -> None:
        super().__init__(constellation)
        if m < 1:
            raise ConfigurationError(f"M-Best list width must be at least 1, got {m}")
        self.m = m
        self.weighting = weighting
        self.name = f"mbest-{m}"

    def _detect(self, H: np.ndarray, y: np.ndarray, sigma2: Optional[float]) -> DetectorOutput:
        return mbest_soft(H, y, float(sigma2), self.constellation, self.m, self.weighting)  # type: ignore[arg-type]
