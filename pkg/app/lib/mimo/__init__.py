"""Constellations and channel models."""

from app.lib.mimo.channel import (
    ChannelDistribution,
    ChannelModel,
    Regime,
    RngStream,
    Sample,
    SampleBatch,
    sample_batch,
    sample_channel,
    sample_problem,
    sigma_for_snr,
)
from app.lib.mimo.constellation import (
    Constellation,
    ConstellationKind,
    complex_to_real,
    encode_one_hot,
    hard_round,
    make_constellation,
    soft_decode,
)

__all__ = [
    "ChannelDistribution",
    "ChannelModel",
    "Regime",
    "RngStream",
    "Sample",
    "SampleBatch",
    "sample_batch",
    "sample_channel",
    "sample_problem",
    "sigma_for_snr",
    "Constellation",
    "ConstellationKind",
    "complex_to_real",
    "encode_one_hot",
    "hard_round",
    "make_constellation",
    "soft_decode",
]
