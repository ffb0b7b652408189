"""Online-sampled training loop with validation, logging and checkpoints."""

import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from app.lib.common.exceptions import CheckpointMismatchError, TrainingDivergedError
from app.lib.common.validation import TrainConfig
from app.lib.detectors.base_detector import BaseDetector
from app.lib.detectors.learned import LearnedDetector
from app.lib.evaluation.metrics import ErrorMode, default_error_mode, error_rate, safe_rate
from app.lib.mimo.channel import (
    INIT_STREAM,
    TRAIN_STREAM,
    VALIDATION_STREAM,
    ChannelModel,
    RngStream,
    sample_batch,
)
from app.lib.mimo.constellation import Constellation, make_constellation
from app.lib.networks.adam import AdamState, adam_step
from app.lib.networks.checkpoint import load_checkpoint, save_checkpoint
from app.lib.networks.gradients import gradient
from app.lib.networks.params import (
    NetworkParams,
    NetworkSpec,
    detnet_spec,
    fullycon_spec,
    init_params,
)

logger = logging.getLogger("training")

CHECKPOINT_NAME = "checkpoint.npz"


@dataclass
class TrainLogRow:
    """
    One logged training window.

    loss is the mean batch loss since the previous row. All fields except
    seconds, which is wall-clock time since the run started, are reproducible
    from the config and seed.
    """

    iteration: int
    loss: float
    val_ber: float
    seconds: float

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass
class TrainResult:
    params: NetworkParams
    adam_state: AdamState
    log: List[TrainLogRow] = field(default_factory=list)
    iterations: int = 0


def network_spec_from_config(cfg: TrainConfig) -> NetworkSpec:
    """Architecture layout for a training config, with its width defaults."""
    channel = cfg.channel
    if cfg.architecture == "fullycon":
        return fullycon_spec(
            cfg.constellation,  # type: ignore[arg-type]
            channel.K,
            channel.N,
            channel.complex,
            layers=int(cfg.layers),  # type: ignore[arg-type]
            hidden_widths=cfg.hidden_widths,
        )
    return detnet_spec(
        cfg.constellation,  # type: ignore[arg-type]
        channel.K,
        channel.N,
        channel.complex,
        layers=int(cfg.layers),  # type: ignore[arg-type]
        z_width=cfg.z_width,
        v_width=cfg.v_width,
        residual_weight=cfg.residual_weight,
        loss_weighting=cfg.loss_weighting,  # type: ignore[arg-type]
    )


def build_network(cfg: TrainConfig) -> NetworkParams:
    """Freshly initialized parameters drawn from the config seed."""
    return init_params(network_spec_from_config(cfg), RngStream(cfg.seed, INIT_STREAM).generator())


def learning_rate_at(cfg: TrainConfig, iteration: int) -> float:
    """Constant rate, or geometric decay by lr_decay every lr_decay_every iterations."""
    if cfg.lr_decay is None:
        return cfg.learning_rate
    return cfg.learning_rate * cfg.lr_decay ** ((iteration - 1) // cfg.lr_decay_every)


def validate(
    detector: Union[BaseDetector, NetworkParams],
    model: ChannelModel,
    c: Constellation,
    snr_db: float,
    trials: int,
    seed: int,
    mode: Optional[ErrorMode] = None,
    batch_size: int = 1000,
) -> float:
    """
    Monte Carlo error rate at one SNR on the held-out validation stream.

    Networks are evaluated through their final layer. Instances a detector
    skips are left out of the count.

    :return: BER (SER for 8-PSK) unless mode says otherwise.
    """
    if isinstance(detector, NetworkParams):
        detector = LearnedDetector(detector)
    mode = mode or default_error_mode(c)
    stream = RngStream(seed, VALIDATION_STREAM)

    errors = denominator = 0
    for block, start in enumerate(range(0, trials, batch_size)):
        size = min(batch_size, trials - start)
        batch = sample_batch(model, c, snr_db, snr_db, stream.generator(block), size)
        output = detector.detect_batch(batch.H, batch.y, batch.sigma2)
        kept = ~output.skipped
        e, d = error_rate(output.hard[kept], batch.x[kept], c, mode)
        errors += e
        denominator += d
    return safe_rate(errors, denominator)


def _resume(cfg: TrainConfig, path: Path, spec: NetworkSpec):
    checkpoint = load_checkpoint(path)
    if checkpoint.params.spec != spec:
        raise CheckpointMismatchError(
            f"Checkpoint {path} holds {checkpoint.params.spec.describe()}, config asks for {spec.describe()}"
        )
    state = checkpoint.adam_state or AdamState.initial(checkpoint.params, **_hyperparameters(cfg))
    logger.info(f"Resuming from {path} at iteration {checkpoint.iterations}")
    return checkpoint.params, state, checkpoint.iterations


def _hyperparameters(cfg: TrainConfig) -> Dict[str, float]:
    return {
        "learning_rate": cfg.learning_rate,
        "beta1": cfg.beta1,
        "beta2": cfg.beta2,
        "epsilon": cfg.epsilon,
    }


def train(
    cfg: TrainConfig,
    output_dir: Optional[Union[str, Path]] = None,
    resume_from: Optional[Union[str, Path]] = None,
    config_hash: str = "",
) -> TrainResult:
    """
    Train a network on freshly sampled batches.

    Batch t is drawn from the training stream keyed by t, so a resumed run
    sees exactly the batches an uninterrupted run would. A non-finite loss
    aborts the run; the checkpoint on disk is the last good one.

    :param output_dir: Where checkpoint.npz is written; None keeps everything in memory.
    :param resume_from: Checkpoint to continue from.
    :param config_hash: Provenance stored in checkpoints.
    """
    model = ChannelModel.from_config(cfg.channel)
    c = make_constellation(cfg.constellation)
    spec = network_spec_from_config(cfg)

    if resume_from is not None:
        params, state, start = _resume(cfg, Path(resume_from), spec)
    else:
        params = init_params(spec, RngStream(cfg.seed, INIT_STREAM).generator())
        state = AdamState.initial(params, **_hyperparameters(cfg))
        start = 0

    checkpoint_path = Path(output_dir) / CHECKPOINT_NAME if output_dir is not None else None
    provenance = {"config_hash": config_hash, "seed": cfg.seed}
    stream = RngStream(cfg.seed, TRAIN_STREAM)
    log: List[TrainLogRow] = []
    window: List[float] = []
    started = time.perf_counter()

    logger.info(f"Training {spec.describe()} for iterations {start + 1}..{cfg.iterations}")
    for iteration in range(start + 1, cfg.iterations + 1):
        batch = sample_batch(
            model, c, cfg.snr_min_db, cfg.snr_max_db, stream.generator(iteration), cfg.batch_size  # type: ignore[arg-type]
        )
        try:
            loss, grads, _ = gradient(params, batch)
        except TrainingDivergedError as e:
            logger.error(f"Training diverged at iteration {iteration}: {e}; last good checkpoint kept")
            raise
        params, state = adam_step(params, grads, state, learning_rate=learning_rate_at(cfg, iteration))
        window.append(loss)

        if iteration % cfg.log_every == 0 or iteration == cfg.iterations:
            val_ber = validate(params, model, c, cfg.mid_snr_db, cfg.validation_trials, cfg.seed)
            row = TrainLogRow(
                iteration=iteration,
                loss=float(np.mean(window)),
                val_ber=val_ber,
                seconds=time.perf_counter() - started,
            )
            window = []
            log.append(row)
            logger.info(
                f"iteration {row.iteration}: loss {row.loss:.6g}, val_ber {row.val_ber:.4g}, {row.seconds:.1f}s"
            )
        else:
            logger.debug(f"iteration {iteration}: loss {loss:.6g}")

        if checkpoint_path is not None and cfg.checkpoint_every and iteration % cfg.checkpoint_every == 0:
            save_checkpoint(checkpoint_path, params, state, {"iterations": iteration, **provenance})

    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, params, state, {"iterations": cfg.iterations, **provenance})
        logger.info(f"Final checkpoint written to {checkpoint_path}")

    return TrainResult(params=params, adam_state=state, log=log, iterations=cfg.iterations)
