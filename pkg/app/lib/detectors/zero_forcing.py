from typing import Optional

import numpy as np

from app.lib.common.exceptions import NumericalError
from app.lib.detectors.base_detector import BaseDetector, DetectorOutput
from app.lib.mimo.constellation import Constellation, hard_round

# Gram matrices at or above this condition number count as singular
CONDITION_LIMIT = 1e12


def _condition_numbers(gram: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.linalg.cond(gram)
    return np.where(np.isfinite(cond), cond, np.inf)


def zf_detect(H, y, c: Constellation) -> DetectorOutput:
    """
    Least-squares inversion followed by symbol rounding.

    :raises NumericalError: If H^T H is singular or badly conditioned.
    """
    H = np.asarray(H, dtype=float)
    y = np.asarray(y, dtype=float)
    gram = H.T @ H
    cond = float(_condition_numbers(gram))
    if cond >= CONDITION_LIMIT:
        raise NumericalError(f"H^T H is singular (condition number {cond:.3g})")
    estimate = np.linalg.solve(gram, H.T @ y)
    return DetectorOutput(hard=hard_round(estimate, c), metadata={"condition_number": cond})


class ZeroForcingDetector(BaseDetector):
    name = "zf"

    def _detect(self, H: np.ndarray, y: np.ndarray, sigma2: Optional[float]) -> DetectorOutput:
        return zf_detect(H, y, self.constellation)

    def detect_batch(self, H, y, sigma2=None) -> DetectorOutput:
        H = np.asarray(H, dtype=float)
        y = np.asarray(y, dtype=float)
        gram = np.einsum("bki,bkj->bij", H, H)
        matched = np.einsum("bki,bk->bi", H, y)
        cond = _condition_numbers(gram)
        skipped = cond >= CONDITION_LIMIT
        if np.any(skipped):
            self.logger.warning(f"Skipping {int(skipped.sum())} instances with singular H^T H")

        hard = np.full(matched.shape, np.nan)
        usable = ~skipped
        if np.any(usable):
            estimate = np.linalg.solve(gram[usable], matched[usable][..., None])[..., 0]
            hard[usable] = hard_round(estimate, self.constellation)
        return DetectorOutput(hard=hard, metadata={"skipped": skipped, "condition_number": cond})
