"""Per-sample detection runtime by batch size."""

import logging
import math
import time
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.lib.common.exceptions import ConfigurationError, DetectionError
from app.lib.detectors.base_detector import BaseDetector
from app.lib.mimo.channel import BENCH_STREAM, ChannelModel, RngStream, sample_batch
from app.lib.mimo.constellation import Constellation

logger = logging.getLogger("evaluation")

DEFAULT_BATCH_SIZES = (1, 10, 100, 1000)
BENCH_COLUMNS = [
    "detector",
    "batch",
    "mean_s",
    "median_s",
    "min_s",
    "max_s",
    "repetitions",
    "min_nodes",
    "median_nodes",
    "max_nodes",
]


@dataclass
class BenchRecord:
    detector: str
    batch: int
    mean_s: float
    median_s: float
    min_s: float
    max_s: float
    repetitions: int
    min_nodes: Optional[int] = None
    median_nodes: Optional[float] = None
    max_nodes: Optional[int] = None

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def summary(self) -> str:
        line = (
            f"{self.detector} batch={self.batch} mean={self.mean_s:.3g}s median={self.median_s:.3g}s "
            f"min={self.min_s:.3g}s max={self.max_s:.3g}s"
        )
        if self.median_nodes is not None:
            line += f" nodes={self.min_nodes}/{self.median_nodes:g}/{self.max_nodes}"
        return line


def _summarize(name: str, batch: int, per_sample: List[float], nodes: List[int]) -> BenchRecord:
    times = np.asarray(per_sample, dtype=float)
    record = BenchRecord(
        detector=name,
        batch=batch,
        mean_s=float(times.mean()),
        median_s=float(np.median(times)),
        min_s=float(times.min()),
        max_s=float(times.max()),
        repetitions=int(times.size),
    )
    if nodes:
        record.min_nodes = int(min(nodes))
        record.median_nodes = float(np.median(nodes))
        record.max_nodes = int(max(nodes))
    return record


def _time_batched(
    detector: BaseDetector, H, y, sigma2, repetitions: int, warmup: int
) -> Tuple[List[float], List[int]]:
    size = len(y)
    for _ in range(warmup):
        detector.detect_batch(H, y, sigma2)
    per_sample = []
    for _ in range(repetitions):
        started = time.perf_counter()
        detector.detect_batch(H, y, sigma2)
        per_sample.append((time.perf_counter() - started) / size)
    return per_sample, []


def _time_per_instance(
    detector: BaseDetector, H, y, sigma2, repetitions: int, warmup: int
) -> Tuple[List[float], List[int]]:
    size = len(y)
    for index in range(min(warmup, size)):
        try:
            detector.detect(H[index], y[index], float(sigma2[index]))
        except DetectionError:
            pass
    passes = max(1, math.ceil(repetitions / size))
    per_sample: List[float] = []
    nodes: List[int] = []
    for _ in range(passes):
        for index in range(size):
            started = time.perf_counter()
            try:
                output = detector.detect(H[index], y[index], float(sigma2[index]))
            except DetectionError:
                continue
            per_sample.append(time.perf_counter() - started)
            if "nodes" in output.metadata:
                nodes.append(int(output.metadata["nodes"]))
    return per_sample, nodes


def runtime_bench(
    detectors: Sequence[BaseDetector],
    model: ChannelModel,
    c: Constellation,
    snr_min_db: float,
    snr_max_db: float,
    batch_sizes: Sequence[int] = DEFAULT_BATCH_SIZES,
    repetitions: int = 20,
    warmup: int = 2,
    seed: int = 0,
) -> List[BenchRecord]:
    """
    Wall-clock detection time per sample for each batch size.

    Only the detect call is timed. Batched detectors are timed over whole
    batches and divided by the batch size; search-based detectors are timed
    instance by instance, so min and max show how their cost spreads, and
    tree searches also report visited node counts.
    """
    if repetitions < 1:
        raise ConfigurationError(f"repetitions must be positive, got {repetitions}")
    stream = RngStream(seed, BENCH_STREAM)
    records: List[BenchRecord] = []
    for size in batch_sizes:
        batch = sample_batch(model, c, snr_min_db, snr_max_db, stream.generator(size), size)
        for detector in detectors:
            timer = _time_per_instance if detector.search_based else _time_batched
            per_sample, nodes = timer(detector, batch.H, batch.y, batch.sigma2, repetitions, warmup)
            if not per_sample:
                logger.warning(f"{detector.name} failed on every instance at batch {size}")
                continue
            record = _summarize(detector.name, size, per_sample, nodes)
            logger.info(record.summary())
            records.append(record)
    return records
