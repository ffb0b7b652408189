"""End-to-end tests for the command-line entry point."""

from pathlib import Path

import pytest

from app.lib.common.config_utilities import load_json_file, parse_experiment_config
from app.lib.common.csv_utilities import read_csv_header, read_records_csv
from app.lib.common.env_config import Config
from app.lib.common.exceptions import (
    ArtifactExistsError,
    CheckpointMismatchError,
    ConfigurationError,
    MimoDetectError,
    NumericalError,
    TrainingDivergedError,
)
from app.lib.common.logger_utilities import RUN_LOG_NAME
from app.main import (
    EXIT_ARTIFACT,
    EXIT_CONFIGURATION,
    EXIT_FAILURE,
    EXIT_NUMERICAL,
    EXIT_OK,
    TRAIN_LOG_NAME,
    exit_code_for,
    main,
)


@pytest.fixture(autouse=True)
def isolated_logs(monkeypatch, temp_dir):
    """Keep log files inside the temp dir."""
    monkeypatch.setattr(Config, "LOG_DIR", temp_dir / "logs")
    monkeypatch.setattr(Config, "LOG_TO_CONSOLE", False)
    monkeypatch.delenv("MIMODET_OUTPUT_DIR", raising=False)


@pytest.fixture
def output_root(temp_dir) -> Path:
    return temp_dir / "out"


@pytest.fixture
def oracle_config(channel_section, output_root):
    return {
        "experiment_id": "oracle_small",
        "mode": "oracle-check",
        "seed": 0,
        "output_dir": str(output_root),
        "oracle": {
            "channel": channel_section,
            "constellation": "bpsk",
            "instances": 12,
            "snr_db": [0.0, 10.0],
            "posterior_instances": 4,
        },
    }


def _evaluation(channel_section, detectors, **extra):
    return {"channel": channel_section, "constellation": "bpsk", "snr_db": [0.0, 10.0], "detectors": detectors, **extra}


@pytest.mark.unit
class TestExitCodes:
    """Exception families map to distinct statuses."""

    def test_mapping(self):
        assert exit_code_for(ConfigurationError("x")) == EXIT_CONFIGURATION
        assert exit_code_for(NumericalError("x")) == EXIT_NUMERICAL
        assert exit_code_for(TrainingDivergedError("x")) == EXIT_NUMERICAL
        assert exit_code_for(CheckpointMismatchError("x")) == EXIT_ARTIFACT
        assert exit_code_for(ArtifactExistsError("x")) == EXIT_ARTIFACT
        assert exit_code_for(MimoDetectError("x")) == EXIT_FAILURE


@pytest.mark.integration
class TestRun:
    """Experiment configs through main()."""

    def test_oracle_check(self, oracle_config, write_config, output_root, capsys):
        assert main(["run", str(write_config(oracle_config))]) == EXIT_OK
        assert "sd==ml: 12/12" in capsys.readouterr().out

        target = output_root / "oracle_small"
        assert (target / "config.json").exists()
        header = read_csv_header(target / "oracle_small.csv")
        assert header["experiment_id"] == "oracle_small"
        assert len(header["config_hash"]) == 16
        assert header["seed"] == "0"
        assert len(read_records_csv(target / "oracle_small.csv")) == 2

    def test_refuses_overwrite_without_force(self, oracle_config, write_config, capsys):
        path = str(write_config(oracle_config))
        assert main(["run", path]) == EXIT_OK
        assert main(["run", path]) == EXIT_ARTIFACT
        assert "--force" in capsys.readouterr().err
        assert main(["run", path, "--force"]) == EXIT_OK

    def test_unknown_constellation(self, oracle_config, write_config, capsys):
        oracle_config["oracle"]["constellation"] = "qam64"
        assert main(["run", str(write_config(oracle_config))]) == EXIT_CONFIGURATION
        assert "constellation" in capsys.readouterr().err

    def test_unknown_field(self, oracle_config, write_config):
        oracle_config["oracle"]["antennas"] = 4
        assert main(["run", str(write_config(oracle_config))]) == EXIT_CONFIGURATION

    def test_missing_config_file(self, temp_dir):
        assert main(["run", str(temp_dir / "absent.json")]) == EXIT_CONFIGURATION

    def test_environment_output_dir_wins(self, oracle_config, write_config, output_root, temp_dir, monkeypatch):
        monkeypatch.setenv("MIMODET_OUTPUT_DIR", str(temp_dir / "from_env"))
        assert main(["run", str(write_config(oracle_config))]) == EXIT_OK
        assert (temp_dir / "from_env" / "oracle_small" / "oracle_small.csv").exists()
        assert not (output_root / "oracle_small").exists()

    def test_seed_inside_train_rejected(self, train_section, write_config, output_root):
        config = {
            "experiment_id": "train_seeded",
            "mode": "train",
            "output_dir": str(output_root),
            "train": {**train_section, "seed": 9},
        }
        assert main(["run", str(write_config(config))]) == EXIT_CONFIGURATION
        assert not (output_root / "train_seeded").exists()

    def test_bench(self, channel_section, write_config, output_root, capsys):
        config = {
            "experiment_id": "bench_small",
            "mode": "bench",
            "output_dir": str(output_root),
            "evaluation": _evaluation(
                channel_section,
                [{"name": "zf"}, {"name": "mbest", "m": 4}],
                batch_sizes=[1, 4],
                repetitions=2,
                warmup=0,
            ),
        }
        assert main(["run", str(write_config(config))]) == EXIT_OK
        frame = read_records_csv(output_root / "bench_small" / "bench_small.csv")
        assert frame["detector"].tolist() == ["zf", "mbest-4", "zf", "mbest-4"]
        assert frame["batch"].tolist() == [1, 1, 4, 4]
        assert len(capsys.readouterr().out.strip().splitlines()) == 4

    def test_curve(self, channel_section, write_config, output_root):
        config = {
            "experiment_id": "curve_small",
            "mode": "curve",
            "seed": 5,
            "workers": 1,
            "output_dir": str(output_root),
            "evaluation": _evaluation(channel_section, [{"name": "zf"}, {"name": "sd", "label": "sphere"}], trials=40),
        }
        assert main(["run", str(write_config(config))]) == EXIT_OK
        frame = read_records_csv(output_root / "curve_small" / "curve_small.csv")
        assert frame["detector"].tolist() == ["zf", "sphere", "zf", "sphere"]
        assert (frame["denominator"] == 120).all()
        assert set(frame["mode"]) == {"ber"}

    def test_soft_curve_rejects_hard_detectors(self, channel_section, write_config, output_root):
        config = {
            "experiment_id": "soft_small",
            "mode": "soft-curve",
            "workers": 1,
            "output_dir": str(output_root),
            "evaluation": _evaluation(channel_section, [{"name": "zf"}], trials=10),
        }
        assert main(["run", str(write_config(config))]) == EXIT_CONFIGURATION

    def test_learned_detector_needs_checkpoint(self, channel_section, write_config, output_root):
        config = {
            "experiment_id": "curve_detnet",
            "mode": "curve",
            "output_dir": str(output_root),
            "evaluation": _evaluation(channel_section, [{"name": "detnet"}], trials=10),
        }
        assert main(["run", str(write_config(config))]) == EXIT_CONFIGURATION


@pytest.mark.integration
class TestTrainAndEvaluate:
    """Train a tiny DetNet, describe it, then evaluate it."""

    @pytest.fixture
    def checkpoint(self, train_section, write_config, output_root) -> Path:
        config = {
            "experiment_id": "train_small",
            "mode": "train",
            "seed": 2,
            "output_dir": str(output_root),
            "train": train_section,
        }
        assert main(["run", str(write_config(config, "train.json"))]) == EXIT_OK
        return output_root / "train_small" / "checkpoint.npz"

    def test_train_artifacts(self, checkpoint):
        assert checkpoint.exists()
        log = read_records_csv(checkpoint.parent / TRAIN_LOG_NAME)
        assert log["iteration"].tolist() == [3, 6]
        assert read_csv_header(checkpoint.parent / TRAIN_LOG_NAME)["seed"] == "2"
        assert (checkpoint.parent / RUN_LOG_NAME).exists()
        stored = parse_experiment_config(load_json_file(checkpoint.parent / "config.json"))
        assert stored.seed == 2

    def test_describe(self, checkpoint, capsys):
        capsys.readouterr()
        assert main(["describe", str(checkpoint)]) == EXIT_OK
        out = capsys.readouterr().out
        assert "architecture: detnet" in out
        assert "L: 3" in out
        assert "training iterations: 6" in out

    def test_describe_missing_checkpoint(self, temp_dir):
        assert main(["describe", str(temp_dir / "absent.npz")]) == EXIT_ARTIFACT

    def test_curve_with_layers(self, checkpoint, channel_section, write_config, output_root):
        config = {
            "experiment_id": "curve_learned",
            "mode": "curve",
            "workers": 1,
            "output_dir": str(output_root),
            "evaluation": _evaluation(
                channel_section, [{"name": "detnet", "checkpoint": str(checkpoint), "per_layer": True}], trials=30
            ),
        }
        assert main(["run", str(write_config(config, "curve.json"))]) == EXIT_OK
        frame = read_records_csv(output_root / "curve_learned" / "curve_learned.csv")
        assert len(frame) == 2 + 2 * 3
        assert frame["layer"].dropna().astype(int).tolist() == [1, 2, 3, 1, 2, 3]

    def test_mismatched_channel(self, checkpoint, channel_section, write_config, output_root):
        config = {
            "experiment_id": "curve_mismatch",
            "mode": "curve",
            "workers": 1,
            "output_dir": str(output_root),
            "evaluation": _evaluation(
                {**channel_section, "K": 2}, [{"name": "detnet", "checkpoint": str(checkpoint)}], trials=10
            ),
        }
        assert main(["run", str(write_config(config, "curve.json"))]) == EXIT_ARTIFACT
