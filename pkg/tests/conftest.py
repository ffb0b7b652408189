"""Pytest configuration and shared fixtures."""

import json
import sys
import tempfile
from pathlib import Path
from typing import Any, Dict, Generator

import numpy as np
import pytest

# Add app directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from app.lib.mimo.channel import ChannelModel  # noqa: E402
from app.lib.mimo.constellation import make_constellation  # noqa: E402


@pytest.fixture
def temp_dir() -> Generator[Path, None, None]:
    """Create a temporary directory for tests."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator for reproducible draws."""
    return np.random.default_rng(1234)


@pytest.fixture
def bpsk():
    return make_constellation("bpsk")


@pytest.fixture
def qpsk():
    return make_constellation("qpsk")


@pytest.fixture
def qam16():
    return make_constellation("qam16")


@pytest.fixture
def psk8():
    return make_constellation("psk8")


@pytest.fixture
def small_model() -> ChannelModel:
    """Real i.i.d. Gaussian 4x8 channel redrawn per sample."""
    return ChannelModel(regime="vc", distribution="iid_gaussian", K=4, N=8)


@pytest.fixture
def complex_model() -> ChannelModel:
    """Complex 2x2 channel for QAM16 and 8-PSK checks."""
    return ChannelModel(regime="vc", distribution="iid_gaussian", K=2, N=2, is_complex=True)


@pytest.fixture
def toeplitz_model() -> ChannelModel:
    """Fixed 0.55-Toeplitz channel."""
    return ChannelModel(regime="fc", distribution="alpha_toeplitz", K=4, N=6, alpha=0.55)


@pytest.fixture
def channel_section() -> Dict[str, Any]:
    return {"regime": "vc", "distribution": "iid_gaussian", "K": 3, "N": 5}


@pytest.fixture
def train_section(channel_section) -> Dict[str, Any]:
    """Tiny DetNet training config that finishes in a few seconds."""
    return {
        "architecture": "detnet",
        "channel": channel_section,
        "constellation": "bpsk",
        "layers": 3,
        "batch_size": 20,
        "iterations": 6,
        "checkpoint_every": 3,
        "log_every": 3,
        "validation_trials": 50,
    }


@pytest.fixture
def write_config(temp_dir: Path):
    """Write an experiment config into the temp dir and return its path."""

    def _write(data: Dict[str, Any], name: str = "experiment.json") -> Path:
        path = temp_dir / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def mock_env_vars(monkeypatch, temp_dir: Path):
    """Point artifact and log directories into the temp dir."""
    monkeypatch.setenv("MIMODET_OUTPUT_DIR", str(temp_dir / "output"))
    monkeypatch.setenv("MIMODET_LOG_DIR", str(temp_dir / "logs"))
    monkeypatch.setenv("MIMODET_LOG_TO_CONSOLE", "false")
