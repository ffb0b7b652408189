"""Paired Monte Carlo accuracy, per-layer and soft-output distance curves."""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from app.lib.common.exceptions import ConfigurationError, DetectionError
from app.lib.detectors.base_detector import BaseDetector
from app.lib.detectors.exhaustive import exact_posteriors, guard_search_space
from app.lib.detectors.learned import LearnedDetector
from app.lib.evaluation.metrics import (
    ErrorMode,
    binomial_stderr,
    default_error_mode,
    error_rate,
    mean_distance,
    posterior_distance,
    safe_rate,
)
from app.lib.mimo.channel import CURVE_STREAM, ChannelModel, RngStream, SampleBatch, sample_batch
from app.lib.mimo.constellation import Constellation

logger = logging.getLogger("evaluation")

CURVE_COLUMNS = [
    "detector",
    "constellation",
    "regime",
    "distribution",
    "K",
    "N",
    "snr_db",
    "trials",
    "errors",
    "denominator",
    "rate",
    "stderr",
    "skipped",
    "mode",
    "layer",
    "mean_distance",
]


@dataclass
class EvalRecord:
    detector: str
    constellation: str
    regime: str
    distribution: str
    K: int
    N: int
    snr_db: float
    trials: int
    errors: int
    denominator: int
    rate: float
    stderr: float
    mode: str
    skipped: int = 0
    layer: Optional[int] = None
    mean_distance: Optional[float] = None

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def summary(self) -> str:
        line = f"{self.detector} snr={self.snr_db:g}dB {self.mode}={self.rate:.4g} (+/-{self.stderr:.2g}, n={self.trials})"
        if self.layer is not None:
            line += f" layer={self.layer}"
        if self.mean_distance is not None:
            line += f" delta={self.mean_distance:.4g}"
        if self.skipped:
            line += f" skipped={self.skipped}"
        return line


@dataclass
class _Tally:
    errors: int = 0
    denominator: int = 0
    skipped: int = 0
    distance: float = 0.0
    distance_count: int = 0


def _record(
    name: str,
    tally: _Tally,
    model: ChannelModel,
    c: Constellation,
    snr_db: float,
    trials: int,
    mode: ErrorMode,
    layer: Optional[int] = None,
    with_distance: bool = False,
) -> EvalRecord:
    return EvalRecord(
        detector=name,
        constellation=c.kind.value,
        regime=model.regime.value,
        distribution=model.distribution.value,
        K=model.K,
        N=model.N,
        snr_db=float(snr_db),
        trials=trials,
        errors=tally.errors,
        denominator=tally.denominator,
        rate=safe_rate(tally.errors, tally.denominator),
        stderr=binomial_stderr(tally.errors, tally.denominator),
        mode=mode.value,
        skipped=tally.skipped,
        layer=layer,
        mean_distance=mean_distance(tally.distance, tally.distance_count) if with_distance else None,
    )


def curve_batches(
    model: ChannelModel, c: Constellation, snr_index: int, snr_db: float, trials: int, seed: int, batch_size: int
):
    """
    Samples of one SNR point, block by block.

    Block b of SNR index i always comes from the stream keyed (i, b), so
    every detector and every run sees the same samples.
    """
    stream = RngStream(seed, CURVE_STREAM)
    for block, start in enumerate(range(0, trials, batch_size)):
        size = min(batch_size, trials - start)
        yield sample_batch(model, c, snr_db, snr_db, stream.generator(snr_index, block), size)


def _count(tally: _Tally, hard: np.ndarray, batch: SampleBatch, skipped: np.ndarray, c: Constellation, mode: ErrorMode) -> None:
    kept = ~skipped
    errors, denominator = error_rate(hard[kept], batch.x[kept], c, mode)
    tally.errors += errors
    tally.denominator += denominator
    tally.skipped += int(skipped.sum())


def _accuracy_point(
    detectors: Sequence[BaseDetector],
    model: ChannelModel,
    c: Constellation,
    snr_index: int,
    snr_db: float,
    trials: int,
    seed: int,
    mode: ErrorMode,
    batch_size: int,
) -> List[EvalRecord]:
    tallies = [_Tally() for _ in detectors]
    for batch in curve_batches(model, c, snr_index, snr_db, trials, seed, batch_size):
        for detector, tally in zip(detectors, tallies):
            output = detector.detect_batch(batch.H, batch.y, batch.sigma2)
            _count(tally, output.hard, batch, output.skipped, c, mode)

    records = [_record(d.name, t, model, c, snr_db, trials, mode) for d, t in zip(detectors, tallies)]
    for record in records:
        logger.info(record.summary())
    return records


def _run_points(worker, arguments: List[tuple], workers: int) -> List[EvalRecord]:
    if workers <= 1 or len(arguments) <= 1:
        results = [worker(*args) for args in arguments]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(arguments))) as pool:
            results = list(pool.map(worker, *zip(*arguments)))
    return [record for point in results for record in point]


def accuracy_curve(
    detectors: Sequence[BaseDetector],
    model: ChannelModel,
    c: Constellation,
    snr_grid: Sequence[float],
    trials: int,
    seed: int,
    mode: Optional[ErrorMode] = None,
    batch_size: int = 1000,
    workers: int = 1,
) -> List[EvalRecord]:
    """
    BER/SER of every detector at every SNR on paired samples.

    Instances a detector fails on are excluded from its count and reported
    in the skipped column. Points are computed in parallel when workers > 1
    and returned in grid order.
    """
    if trials < 1:
        raise ConfigurationError(f"trials must be positive, got {trials}")
    resolved = ErrorMode(mode) if mode is not None else default_error_mode(c)
    arguments = [
        (list(detectors), model, c, index, float(snr), trials, seed, resolved, batch_size)
        for index, snr in enumerate(snr_grid)
    ]
    return _run_points(_accuracy_point, arguments, workers)


def _layer_point(
    detector: LearnedDetector,
    model: ChannelModel,
    c: Constellation,
    snr_index: int,
    snr_db: float,
    trials: int,
    seed: int,
    mode: ErrorMode,
    batch_size: int,
) -> List[EvalRecord]:
    tallies = [_Tally() for _ in range(detector.params.spec.layers)]
    for batch in curve_batches(model, c, snr_index, snr_db, trials, seed, batch_size):
        for tally, output in zip(tallies, detector.detect_layers_batch(batch.H, batch.y)):
            _count(tally, output.hard, batch, output.skipped, c, mode)
    base = detector.params.spec.architecture.value
    return [
        _record(base, tally, model, c, snr_db, trials, mode, layer=layer)
        for layer, tally in enumerate(tallies, start=1)
    ]


def layer_curve(
    detector: LearnedDetector,
    model: ChannelModel,
    c: Constellation,
    snr_grid: Sequence[float],
    trials: int,
    seed: int,
    mode: Optional[ErrorMode] = None,
    batch_size: int = 1000,
    workers: int = 1,
) -> List[EvalRecord]:
    """Error rate of every DetNet layer output, one forward pass per batch."""
    resolved = ErrorMode(mode) if mode is not None else default_error_mode(c)
    arguments = [
        (detector, model, c, index, float(snr), trials, seed, resolved, batch_size)
        for index, snr in enumerate(snr_grid)
    ]
    return _run_points(_layer_point, arguments, workers)


def _soft_point(
    detectors: Sequence[BaseDetector],
    model: ChannelModel,
    c: Constellation,
    snr_index: int,
    snr_db: float,
    trials: int,
    seed: int,
    mode: ErrorMode,
    batch_size: int,
) -> List[EvalRecord]:
    tallies = [_Tally() for _ in detectors]
    for batch in curve_batches(model, c, snr_index, snr_db, trials, seed, batch_size):
        reference = np.stack(
            [exact_posteriors(batch.H[i], batch.y[i], float(batch.sigma2[i]), c).posteriors for i in range(len(batch))]
        )
        for detector, tally in zip(detectors, tallies):
            output = detector.detect_batch(batch.H, batch.y, batch.sigma2)
            _count(tally, output.hard, batch, output.skipped, c, mode)
            kept = ~output.skipped
            distances = posterior_distance(output.posteriors[kept], reference[kept])  # type: ignore[index]
            tally.distance += float(distances.sum())
            tally.distance_count += int(distances.size)

    records = [
        _record(d.name, t, model, c, snr_db, trials, mode, with_distance=True) for d, t in zip(detectors, tallies)
    ]
    for record in records:
        logger.info(record.summary())
    return records


def soft_distance_curve(
    detectors: Sequence[BaseDetector],
    model: ChannelModel,
    c: Constellation,
    snr_grid: Sequence[float],
    trials: int,
    seed: int,
    mode: Optional[ErrorMode] = None,
    batch_size: int = 1000,
    workers: int = 1,
) -> List[EvalRecord]:
    """
    Mean distance of each detector's posteriors to the exact ones, averaged
    over components and trials, alongside the hard-decision error rate.

    :raises SearchSpaceError: If the exact posteriors cannot be enumerated.
    :raises ConfigurationError: If a detector produces no posteriors.
    """
    guard_search_space(c, model.n_inputs)
    for detector in detectors:
        if not detector.produces_posteriors:
            raise ConfigurationError(f"Detector '{detector.name}' produces no posteriors")
    resolved = ErrorMode(mode) if mode is not None else default_error_mode(c)
    arguments = [
        (list(detectors), model, c, index, float(snr), trials, seed, resolved, batch_size)
        for index, snr in enumerate(snr_grid)
    ]
    try:
        return _run_points(_soft_point, arguments, workers)
    except DetectionError:
        logger.error("Exact posterior reference failed")
        raise
