"""Cross-checks of the search-based detectors against exhaustive enumeration."""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from app.lib.common.exceptions import ConfigurationError
from app.lib.detectors.exhaustive import exact_posteriors, guard_search_space, ml_detect_exhaustive
from app.lib.detectors.sphere import mbest_soft, sphere_decode
from app.lib.evaluation.metrics import posterior_distance
from app.lib.mimo.channel import ORACLE_STREAM, ChannelModel, RngStream, sample_problem
from app.lib.mimo.constellation import Constellation, count_candidates

logger = logging.getLogger("evaluation")

ORACLE_COLUMNS = ["check", "agree", "total", "mean_distance", "max_distance"]


@dataclass
class OracleReport:
    sd_agree: int
    total: int
    posterior_instances: int = 0
    mean_distance: Optional[float] = None
    max_distance: Optional[float] = None
    disagreements: List[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.sd_agree == self.total

    def summary_lines(self) -> List[str]:
        lines = [f"sd==ml: {self.sd_agree}/{self.total}"]
        if self.mean_distance is not None:
            lines.append(
                f"mbest-full vs exact: mean delta {self.mean_distance:.3g} "
                f"(max {self.max_distance:.3g}, n={self.posterior_instances})"
            )
        return lines

    def as_records(self) -> List[Dict[str, Any]]:
        records = [
            {"check": "sd==ml", "agree": self.sd_agree, "total": self.total, "mean_distance": None, "max_distance": None}
        ]
        if self.mean_distance is not None:
            records.append(
                {
                    "check": "mbest-full==exact",
                    "agree": None,
                    "total": self.posterior_instances,
                    "mean_distance": self.mean_distance,
                    "max_distance": self.max_distance,
                }
            )
        return records

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def oracle_check(
    model: ChannelModel,
    c: Constellation,
    instances: int,
    snr_list: Sequence[float],
    seed: int,
    posterior_instances: int = 0,
) -> OracleReport:
    """
    Run the baseline oracle suite on seeded instances.

    Instance i is drawn at snr_list[i % len(snr_list)] from its own stream.
    Sphere decoding must return the exhaustive ML vector, ties included. The
    first posterior_instances instances also compare full-width M-Best
    posteriors with the exact ones.

    :raises SearchSpaceError: If the problem is too large to enumerate.
    """
    if instances < 1:
        raise ConfigurationError(f"instances must be positive, got {instances}")
    if not snr_list:
        raise ConfigurationError("snr_list must not be empty")
    guard_search_space(c, model.n_inputs)
    full_width = count_candidates(c, model.n_inputs)
    stream = RngStream(seed, ORACLE_STREAM)

    agree = 0
    disagreements: List[int] = []
    distances: List[np.ndarray] = []
    for index in range(instances):
        snr = float(snr_list[index % len(snr_list)])
        sample = sample_problem(model, c, snr, snr, stream.generator(index))

        sd = sphere_decode(sample.H, sample.y, c).hard
        ml = ml_detect_exhaustive(sample.H, sample.y, c).hard
        if np.array_equal(sd, ml):
            agree += 1
        else:
            disagreements.append(index)
            logger.warning(f"Instance {index} at {snr:g} dB: sd={sd.tolist()} ml={ml.tolist()}")

        if index < posterior_instances:
            soft = mbest_soft(sample.H, sample.y, sample.sigma2, c, full_width).posteriors
            exact = exact_posteriors(sample.H, sample.y, sample.sigma2, c).posteriors
            distances.append(posterior_distance(soft, exact))

    report = OracleReport(sd_agree=agree, total=instances, disagreements=disagreements)
    if distances:
        stacked = np.concatenate(distances)
        report.posterior_instances = len(distances)
        report.mean_distance = float(stacked.mean())
        report.max_distance = float(stacked.max())
    for line in report.summary_lines():
        logger.info(line)
    return report
