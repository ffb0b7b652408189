import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence

from app.lib.common.config_utilities import config_hash, load_experiment_config
from app.lib.common.csv_utilities import write_records_csv
from app.lib.common.datetime_utilities import datetime_to_iso, elapsed_seconds, utc_now
from app.lib.common.env_config import Config
from app.lib.common.exceptions import (
    ArtifactExistsError,
    CheckpointError,
    ConfigurationError,
    DetectionError,
    MimoDetectError,
    TrainingDivergedError,
)
from app.lib.common.file_operations import prepare_experiment_dir
from app.lib.common.logger_utilities import attach_run_log, configure_logging, detach_run_log
from app.lib.common.validation import DetectorSpec, EvaluationConfig, ExperimentConfig
from app.lib.detectors import create_detector
from app.lib.detectors.base_detector import BaseDetector
from app.lib.detectors.learned import LearnedDetector
from app.lib.evaluation.bench import BENCH_COLUMNS, runtime_bench
from app.lib.evaluation.curves import CURVE_COLUMNS, EvalRecord, accuracy_curve, layer_curve, soft_distance_curve
from app.lib.evaluation.oracle import ORACLE_COLUMNS, oracle_check
from app.lib.mimo.channel import ChannelModel
from app.lib.mimo.constellation import Constellation, make_constellation
from app.lib.networks.checkpoint import describe_checkpoint, ensure_compatible, load_checkpoint
from app.lib.pipeline.training import CHECKPOINT_NAME, train

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIGURATION = 2
EXIT_NUMERICAL = 3
EXIT_ARTIFACT = 4

TRAIN_LOG_NAME = "train_log.csv"
TRAIN_LOG_COLUMNS = ["iteration", "loss", "val_ber", "seconds"]


def exit_code_for(error: Exception) -> int:
    """Map an exception family to the process exit status."""
    if isinstance(error, ConfigurationError):
        return EXIT_CONFIGURATION
    if isinstance(error, (DetectionError, TrainingDivergedError)):
        return EXIT_NUMERICAL
    if isinstance(error, (CheckpointError, ArtifactExistsError)):
        return EXIT_ARTIFACT
    return EXIT_FAILURE


def load_learned_detector(spec: DetectorSpec, model: ChannelModel, c: Constellation) -> LearnedDetector:
    """
    Restore a trained network named by a detector entry.

    :raises ConfigurationError: If no checkpoint is given or the file is missing.
    :raises CheckpointMismatchError: If the network was trained for another setup.
    """
    if not spec.checkpoint:
        raise ConfigurationError(f"Detector '{spec.name}' needs a checkpoint path")
    path = Path(spec.checkpoint)
    if not path.exists():
        raise ConfigurationError(f"Checkpoint for detector '{spec.name}' not found: {path}")
    checkpoint = load_checkpoint(path)
    params = checkpoint.params
    if params.spec.architecture.value != spec.name:
        raise ConfigurationError(
            f"Checkpoint {path} holds a {params.spec.architecture.value} network, not {spec.name}"
        )
    ensure_compatible(params.spec, c.kind.value, model.K, model.N, model.is_complex)
    detector = LearnedDetector(params, output_layer=spec.layer)
    if spec.label:
        detector.name = spec.label
    return detector


def build_detectors(evaluation: EvaluationConfig, model: ChannelModel, c: Constellation) -> List[BaseDetector]:
    detectors: List[BaseDetector] = []
    for spec in evaluation.detectors:
        if spec.name in ("detnet", "fullycon"):
            detectors.append(load_learned_detector(spec, model, c))
            continue
        detector = create_detector(
            spec.name, c, m=spec.m, weighting=spec.weighting, iterations=spec.iterations, damping=spec.damping
        )
        detector.name = spec.display_name
        detectors.append(detector)
    return detectors


def _emit(lines: Iterable[str]) -> None:
    for line in lines:
        print(line)


def stored_config(cfg: ExperimentConfig) -> Dict[str, Any]:
    """The config as written to config.json; running that file repeats the experiment."""
    if cfg.train is None:
        return cfg.model_dump(mode="json")
    return cfg.model_dump(mode="json", exclude={"train": {"seed"}})


def run_train(cfg: ExperimentConfig, target: Path, header: Dict[str, str]) -> None:
    assert cfg.train is not None
    train_cfg = cfg.train.model_copy(update={"seed": cfg.seed})
    result = train(train_cfg, output_dir=target, config_hash=header["config_hash"])
    write_records_csv(
        target / TRAIN_LOG_NAME, [row.as_dict() for row in result.log], header=header, columns=TRAIN_LOG_COLUMNS
    )
    _emit(
        f"iteration={row.iteration} loss={row.loss:.6g} val_ber={row.val_ber:.4g} seconds={row.seconds:.1f}"
        for row in result.log
    )
    print(f"checkpoint: {target / CHECKPOINT_NAME}")


def run_curve(cfg: ExperimentConfig, target: Path, header: Dict[str, str], soft: bool) -> None:
    evaluation = cfg.evaluation
    assert evaluation is not None
    model = ChannelModel.from_config(evaluation.channel)
    c = make_constellation(evaluation.constellation)
    workers = Config.worker_count(cfg.workers)
    common = dict(
        model=model,
        c=c,
        snr_grid=evaluation.snr_db,
        trials=evaluation.trials,
        seed=cfg.seed,
        mode=evaluation.error_mode,
        batch_size=evaluation.batch_size,
        workers=workers,
    )

    records: List[EvalRecord] = []
    detectors = build_detectors(evaluation, model, c)
    per_layer = [
        detector
        for detector, spec in zip(detectors, evaluation.detectors)
        if spec.per_layer and isinstance(detector, LearnedDetector)
    ]
    if soft:
        records.extend(soft_distance_curve(detectors, **common))  # type: ignore[arg-type]
    else:
        records.extend(accuracy_curve(detectors, **common))  # type: ignore[arg-type]
    for detector in per_layer:
        records.extend(layer_curve(detector, **common))  # type: ignore[arg-type]

    write_records_csv(
        target / f"{cfg.experiment_id}.csv", [r.as_dict() for r in records], header=header, columns=CURVE_COLUMNS
    )
    _emit(record.summary() for record in records)


def run_bench(cfg: ExperimentConfig, target: Path, header: Dict[str, str]) -> None:
    evaluation = cfg.evaluation
    assert evaluation is not None
    model = ChannelModel.from_config(evaluation.channel)
    c = make_constellation(evaluation.constellation)
    records = runtime_bench(
        build_detectors(evaluation, model, c),
        model,
        c,
        snr_min_db=min(evaluation.snr_db),
        snr_max_db=max(evaluation.snr_db),
        batch_sizes=evaluation.batch_sizes,
        repetitions=evaluation.repetitions,
        warmup=evaluation.warmup,
        seed=cfg.seed,
    )
    write_records_csv(
        target / f"{cfg.experiment_id}.csv", [r.as_dict() for r in records], header=header, columns=BENCH_COLUMNS
    )
    _emit(record.summary() for record in records)


def run_oracle(cfg: ExperimentConfig, target: Path, header: Dict[str, str]) -> None:
    oracle = cfg.oracle
    assert oracle is not None
    model = ChannelModel.from_config(oracle.channel)
    c = make_constellation(oracle.constellation)
    report = oracle_check(model, c, oracle.instances, oracle.snr_db, cfg.seed, oracle.posterior_instances)
    write_records_csv(target / f"{cfg.experiment_id}.csv", report.as_records(), header=header, columns=ORACLE_COLUMNS)
    _emit(report.summary_lines())


MODE_RUNNERS: Dict[str, Callable[[ExperimentConfig, Path, Dict[str, str]], None]] = {
    "train": run_train,
    "curve": lambda cfg, target, header: run_curve(cfg, target, header, soft=False),
    "soft-curve": lambda cfg, target, header: run_curve(cfg, target, header, soft=True),
    "bench": run_bench,
    "oracle-check": run_oracle,
}


def run(config_path: str, force: bool = False) -> Path:
    """
    Execute one experiment config and write its artifacts.

    :param config_path: JSON experiment config.
    :param force: Overwrite artifacts of an earlier run with the same id.
    :return: The experiment directory.
    """
    logger = logging.getLogger("main")
    cfg = load_experiment_config(config_path)
    digest = config_hash(cfg)
    root = Config.output_root(cfg.output_dir)
    target = prepare_experiment_dir(root, cfg.experiment_id, force=force)

    header = {
        "experiment_id": cfg.experiment_id,
        "config_hash": digest,
        "seed": str(cfg.seed),
        "created": datetime_to_iso(),
    }
    (target / "config.json").write_text(
        json.dumps(stored_config(cfg), indent=2, sort_keys=True), encoding="utf-8"
    )

    started = utc_now()
    run_log = attach_run_log(target)
    try:
        logger.info(f"Running {cfg.mode} experiment '{cfg.experiment_id}' (config {digest}) into {target}")
        MODE_RUNNERS[cfg.mode](cfg, target, header)
        logger.info(f"Experiment '{cfg.experiment_id}' finished in {elapsed_seconds(started):.1f}s")
    finally:
        detach_run_log(run_log)
    return target


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mimo-detect", description="MIMO detection experiments")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="Run an experiment config")
    run_parser.add_argument("config", help="Path to the JSON experiment config")
    run_parser.add_argument("--force", action="store_true", help="Overwrite existing artifacts")

    describe_parser = commands.add_parser("describe", help="Print checkpoint metadata")
    describe_parser.add_argument("checkpoint", help="Path to a checkpoint .npz file")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point. Sets up logging and dispatches the subcommand.

    :param argv: Arguments without the program name; defaults to sys.argv.
    :return: Process exit status.
    """
    args = build_parser().parse_args(argv)
    configure_logging()
    logger = logging.getLogger("main")

    try:
        if args.command == "describe":
            print(describe_checkpoint(args.checkpoint))
        else:
            run(args.config, force=args.force)
    except MimoDetectError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)
    except Exception as e:
        logger.error(f"Unexpected failure: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
