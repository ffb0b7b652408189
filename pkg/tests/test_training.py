"""Tests for the training loop and validation helper."""

import numpy as np
import pytest

from app.lib.common.exceptions import CheckpointMismatchError
from app.lib.common.validation import TrainConfig
from app.lib.detectors import ZeroForcingDetector
from app.lib.detectors.base_detector import BaseDetector, DetectorOutput
from app.lib.mimo.channel import ChannelModel, sample_batch
from app.lib.networks.checkpoint import load_checkpoint
from app.lib.pipeline import training
from app.lib.pipeline.training import CHECKPOINT_NAME, build_network, learning_rate_at, train, validate


def _equal_params(first, second) -> bool:
    return first.names() == second.names() and all(np.array_equal(first[n], second[n]) for n in first.names())


class CoinFlipDetector(BaseDetector):
    """Picks every symbol uniformly at random."""

    name = "coin-flip"

    def __init__(self, constellation, seed: int = 0) -> None:
        super().__init__(constellation)
        self.rng = np.random.default_rng(seed)

    def _detect(self, H, y, sigma2):
        picks = self.rng.integers(0, self.constellation.alphabet.size, size=H.shape[1])
        return DetectorOutput(hard=self.constellation.alphabet[picks])

    def detect_batch(self, H, y, sigma2=None):
        picks = self.rng.integers(0, self.constellation.alphabet.size, size=(H.shape[0], H.shape[2]))
        return DetectorOutput(hard=self.constellation.alphabet[picks])


class KnownSymbolsDetector(BaseDetector):
    """Returns the transmitted symbols of the batch last drawn by validate."""

    name = "known-symbols"

    def __init__(self, constellation, monkeypatch) -> None:
        super().__init__(constellation)
        self.last_batch = None

        def recording_sample_batch(*args, **kwargs):
            self.last_batch = sample_batch(*args, **kwargs)
            return self.last_batch

        monkeypatch.setattr(training, "sample_batch", recording_sample_batch)

    def _detect(self, H, y, sigma2):
        raise NotImplementedError

    def detect_batch(self, H, y, sigma2=None):
        return DetectorOutput(hard=self.last_batch.x.copy())


@pytest.mark.integration
class TestTrain:
    """Short training runs on a 3x5 BPSK channel."""

    def test_log_rows_and_checkpoint(self, train_section, temp_dir):
        result = train(TrainConfig(**train_section), output_dir=temp_dir, config_hash="abc")
        assert [row.iteration for row in result.log] == [3, 6]
        assert all(np.isfinite(row.loss) for row in result.log)
        assert all(0.0 <= row.val_ber <= 1.0 for row in result.log)
        assert result.adam_state.step == 6

        checkpoint = load_checkpoint(temp_dir / CHECKPOINT_NAME)
        assert checkpoint.iterations == 6
        assert checkpoint.metadata["training"]["config_hash"] == "abc"
        assert _equal_params(checkpoint.params, result.params)

    def test_reproducible(self, train_section):
        cfg = TrainConfig(**train_section)
        first = train(cfg)
        second = train(cfg)
        assert _equal_params(first.params, second.params)
        without_clock = [{k: v for k, v in r.as_dict().items() if k != "seconds"} for r in first.log]
        assert without_clock == [{k: v for k, v in r.as_dict().items() if k != "seconds"} for r in second.log]
        assert set(first.log[0].as_dict()) - set(without_clock[0]) == {"seconds"}

    def test_resume_matches_uninterrupted_run(self, train_section, temp_dir):
        full = train(TrainConfig(**train_section))

        partial_dir = temp_dir / "partial"
        partial_dir.mkdir()
        train(TrainConfig(**{**train_section, "iterations": 3}), output_dir=partial_dir)
        resumed = train(TrainConfig(**train_section), resume_from=partial_dir / CHECKPOINT_NAME)

        assert resumed.iterations == 6
        assert [row.iteration for row in resumed.log] == [6]
        assert np.allclose(resumed.log[0].loss, full.log[1].loss)
        for name in full.params.names():
            assert np.allclose(resumed.params[name], full.params[name])

    def test_resume_refuses_other_architecture(self, train_section, temp_dir):
        train(TrainConfig(**{**train_section, "iterations": 3}), output_dir=temp_dir)
        with pytest.raises(CheckpointMismatchError):
            train(TrainConfig(**{**train_section, "layers": 4}), resume_from=temp_dir / CHECKPOINT_NAME)

    def test_fullycon_trains(self, train_section):
        section = {**train_section, "architecture": "fullycon", "layers": 2, "hidden_widths": [6]}
        result = train(TrainConfig(**section))
        assert result.params["W1"].shape == (6, 5)
        assert len(result.log) == 2

    def test_seed_changes_initialization(self, train_section):
        first = build_network(TrainConfig(**train_section))
        second = build_network(TrainConfig(**{**train_section, "seed": 1}))
        assert not np.array_equal(first["W1_1"], second["W1_1"])

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "architecture, extra",
        [("detnet", {"layers": 3}), ("fullycon", {"layers": 3, "hidden_widths": [16, 16]})],
    )
    def test_loss_decreases(self, train_section, architecture, extra):
        section = {
            **train_section,
            **extra,
            "architecture": architecture,
            "batch_size": 100,
            "iterations": 400,
            "learning_rate": 0.005,
            "log_every": 100,
            "checkpoint_every": 0,
            "validation_trials": 50,
        }
        log = train(TrainConfig(**section)).log
        assert [row.iteration for row in log] == [100, 200, 300, 400]
        assert log[-1].loss < log[0].loss


@pytest.mark.unit
class TestLearningRate:
    def test_constant(self, train_section):
        cfg = TrainConfig(**train_section)
        assert learning_rate_at(cfg, 1) == learning_rate_at(cfg, 5000) == cfg.learning_rate

    def test_geometric_decay(self, train_section):
        cfg = TrainConfig(**{**train_section, "learning_rate": 0.01, "lr_decay": 0.5, "lr_decay_every": 2})
        assert [learning_rate_at(cfg, t) for t in (1, 2, 3, 5)] == pytest.approx([0.01, 0.01, 0.005, 0.0025])


@pytest.mark.integration
class TestValidate:
    """Held-out error rate at one SNR."""

    def test_high_snr_zero_forcing(self, bpsk):
        model = ChannelModel(regime="vc", distribution="iid_gaussian", K=3, N=5)
        assert validate(ZeroForcingDetector(bpsk), model, bpsk, 60.0, 300, seed=0, batch_size=128) == 0.0

    def test_deterministic_per_seed(self, bpsk):
        model = ChannelModel(regime="vc", distribution="iid_gaussian", K=3, N=5)
        detector = ZeroForcingDetector(bpsk)
        first = validate(detector, model, bpsk, 0.0, 400, seed=3)
        assert first == validate(detector, model, bpsk, 0.0, 400, seed=3)
        assert 0.0 < first < 0.5

    def test_known_symbols_give_zero(self, bpsk, monkeypatch):
        model = ChannelModel(regime="vc", distribution="iid_gaussian", K=3, N=5)
        detector = KnownSymbolsDetector(bpsk, monkeypatch)
        assert validate(detector, model, bpsk, 0.0, 1000, seed=4, batch_size=250) == 0.0

    def test_coin_flip_gives_half(self, bpsk):
        model = ChannelModel(regime="vc", distribution="iid_gaussian", K=3, N=5)
        trials = 10_000
        ber = validate(CoinFlipDetector(bpsk, seed=5), model, bpsk, 10.0, trials, seed=4)
        sigma = np.sqrt(0.25 / (trials * model.K))
        assert abs(ber - 0.5) < 3 * sigma
