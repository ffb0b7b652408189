"""Channel matrices, noise and labeled samples under the fixed and varying regimes."""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy.linalg import eigh, toeplitz

from app.lib.common.exceptions import ConfigurationError, NumericalError
from app.lib.mimo.constellation import Constellation, encode_one_hot, psk8_points

logger = logging.getLogger(__name__)

# Stream ids; every consumer of randomness owns one
FIXED_CHANNEL_STREAM = 0
TRAIN_STREAM = 1
VALIDATION_STREAM = 2
CURVE_STREAM = 3
BENCH_STREAM = 4
ORACLE_STREAM = 5
INIT_STREAM = 6


class Regime(str, Enum):
    FC = "fc"
    VC = "vc"


class ChannelDistribution(str, Enum):
    IID_GAUSSIAN = "iid_gaussian"
    ALPHA_TOEPLITZ = "alpha_toeplitz"


@dataclass(frozen=True)
class RngStream:
    """
    Reproducible source of numpy Generators.

    Generators are derived from (seed, stream id, *keys) through SeedSequence
    spawn keys, so distinct keys give independent streams and equal keys give
    identical draws.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        if self.seed < 0 or self.stream_id < 0:
            raise ConfigurationError(
                f"Seed and stream id must be non-negative, got ({self.seed}, {self.stream_id})"
            )

    def generator(self, *keys: int) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *keys))
        return np.random.default_rng(sequence)


RandomSource = Union[RngStream, np.random.Generator]


def as_generator(rng: RandomSource) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


@dataclass(frozen=True)
class ChannelModel:
    """
    Channel regime and distribution.

    K and N count transmit and receive symbols; for complex models the real
    equivalent has 2N rows and 2K columns.
    """

    regime: Regime
    distribution: ChannelDistribution
    K: int
    N: int
    is_complex: bool = False
    alpha: Optional[float] = None
    fixed_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "regime", Regime(self.regime))
        object.__setattr__(self, "distribution", ChannelDistribution(self.distribution))
        if not 0 < self.K <= self.N:
            raise ConfigurationError(f"Channel needs N >= K > 0, got K={self.K}, N={self.N}")
        if self.distribution is ChannelDistribution.ALPHA_TOEPLITZ:
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def n_inputs(self) -> int:
        return 2 * self.K if self.is_complex else self.K

    @property
    def n_outputs(self) -> int:
        return 2 * self.N if self.is_complex else self.N

    @property
    def expected_gram_trace(self) -> float:
        """E[trace(H^T H)] of the real-valued channel."""
        if self.distribution is ChannelDistribution.ALPHA_TOEPLITZ:
            return float(self.n_inputs)
        return float(self.n_outputs * self.n_inputs)

    @classmethod
    def from_config(cls, config) -> "ChannelModel":
        """Build from a validated ChannelConfig."""
        return cls(
            regime=Regime(config.regime),
            distribution=ChannelDistribution(config.distribution),
            K=config.K,
            N=config.N,
            is_complex=config.complex,
            alpha=config.alpha,
            fixed_seed=config.fixed_seed,
        )


@dataclass(frozen=True)
class Sample:
    H: np.ndarray
    y: np.ndarray
    x: np.ndarray
    x_oh: np.ndarray
    sigma2: float
    snr_db: float


@dataclass(frozen=True)
class SampleBatch:
    """Samples stacked along a leading batch axis."""

    H: np.ndarray
    y: np.ndarray
    x: np.ndarray
    x_oh: np.ndarray
    sigma2: np.ndarray
    snr_db: np.ndarray

    def __len__(self) -> int:
        return int(self.y.shape[0])

    def __getitem__(self, index: int) -> Sample:
        return Sample(
            H=self.H[index],
            y=self.y[index],
            x=self.x[index],
            x_oh=self.x_oh[index],
            sigma2=float(self.sigma2[index]),
            snr_db=float(self.snr_db[index]),
        )


def toeplitz_sqrt(n: int, alpha: float) -> np.ndarray:
    """
    Symmetric square root of the alpha-Toeplitz matrix Sigma_ij = alpha^|i-j|.

    :raises NumericalError: If Sigma is not positive definite.
    """
    sigma = toeplitz(alpha ** np.arange(n))
    eigenvalues, eigenvectors = eigh(sigma)
    if eigenvalues.min() <= 0:
        raise NumericalError(f"Toeplitz matrix with alpha={alpha} is not positive definite")
    root = (eigenvectors * np.sqrt(eigenvalues)) @ eigenvectors.T
    return 0.5 * (root + root.T)


def _draw_gaussian(m: ChannelModel, rng: np.random.Generator, size: int) -> np.ndarray:
    if not m.is_complex:
        return rng.standard_normal((size, m.N, m.K))
    real = rng.standard_normal((size, m.N, m.K))
    imag = rng.standard_normal((size, m.N, m.K))
    top = np.concatenate([real, -imag], axis=-1)
    bottom = np.concatenate([imag, real], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


@lru_cache(maxsize=32)
def fixed_channel(m: ChannelModel) -> np.ndarray:
    """
    The deterministic H of a model; read-only and shared between calls.

    Toeplitz channels embed Sigma^{1/2} in the first rows and zero-pad the
    rest. A fixed i.i.d. Gaussian channel is one draw from the model's
    fixed_seed.
    """
    if m.distribution is ChannelDistribution.ALPHA_TOEPLITZ:
        H = np.zeros((m.n_outputs, m.n_inputs))
        H[: m.n_inputs] = toeplitz_sqrt(m.n_inputs, float(m.alpha))  # type: ignore[arg-type]
    else:
        rng = RngStream(m.fixed_seed, FIXED_CHANNEL_STREAM).generator()
        H = _draw_gaussian(m, rng, 1)[0]
    H.setflags(write=False)
    logger.debug(f"Built fixed {m.distribution.value} channel {H.shape}")
    return H


def sample_channels(m: ChannelModel, rng: RandomSource, size: int) -> np.ndarray:
    """Channel matrices of shape (size, n_outputs, n_inputs)."""
    if m.regime is Regime.FC or m.distribution is ChannelDistribution.ALPHA_TOEPLITZ:
        return np.broadcast_to(fixed_channel(m), (size, m.n_outputs, m.n_inputs))
    return _draw_gaussian(m, as_generator(rng), size)


def sample_channel(m: ChannelModel, rng: RandomSource) -> np.ndarray:
    """One channel matrix; FC models always return the same array."""
    if m.regime is Regime.FC or m.distribution is ChannelDistribution.ALPHA_TOEPLITZ:
        return fixed_channel(m)
    return _draw_gaussian(m, as_generator(rng), 1)[0]


def sigma_for_snr(m: ChannelModel, c: Constellation, snr_db):
    """
    Noise variance per real component for a received SNR in dB.

    sigma2 = P_s * E[trace(H^T H)] / (dim(y) * 10^(snr_db / 10)), P_s being the
    mean energy of one real component.
    """
    snr = np.asarray(snr_db, dtype=float)
    sigma2 = c.component_energy * m.expected_gram_trace / (m.n_outputs * 10.0 ** (snr / 10.0))
    return float(sigma2) if sigma2.ndim == 0 else sigma2


def draw_symbols(c: Constellation, n_components: int, rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform transmit vectors of shape (size, n_components)."""
    if c.is_joint:
        points = psk8_points()[rng.integers(0, len(psk8_points()), size=(size, n_components // 2))]
        return np.concatenate([points[..., 0], points[..., 1]], axis=-1)
    return c.alphabet[rng.integers(0, c.onehot_dim, size=(size, n_components))]


def sample_batch(
    m: ChannelModel,
    c: Constellation,
    snr_min_db: float,
    snr_max_db: float,
    rng: RandomSource,
    size: int,
) -> SampleBatch:
    """
    Draw a batch of labeled samples y = Hx + w.

    Draw order is symbols, channels, SNRs, noise.

    :raises ConfigurationError: On an empty SNR range, a non-positive size or
        a constellation that does not match the model.
    """
    if snr_min_db > snr_max_db:
        raise ConfigurationError(f"snr_min_db ({snr_min_db}) exceeds snr_max_db ({snr_max_db})")
    if size < 1:
        raise ConfigurationError(f"Batch size must be positive, got {size}")
    if c.is_complex != m.is_complex:
        raise ConfigurationError(
            f"Constellation {c.kind.value} does not match a {'complex' if m.is_complex else 'real'} channel"
        )

    generator = as_generator(rng)
    x = draw_symbols(c, m.n_inputs, generator, size)
    H = sample_channels(m, generator, size)
    if snr_min_db == snr_max_db:
        snr_db = np.full(size, float(snr_min_db))
    else:
        snr_db = generator.uniform(snr_min_db, snr_max_db, size=size)
    sigma2 = np.asarray(sigma_for_snr(m, c, snr_db), dtype=float)
    noise = generator.standard_normal((size, m.n_outputs)) * np.sqrt(sigma2)[:, None]
    y = np.einsum("bij,bj->bi", H, x) + noise

    return SampleBatch(H=H, y=y, x=x, x_oh=encode_one_hot(x, c), sigma2=sigma2, snr_db=snr_db)


def sample_problem(
    m: ChannelModel,
    c: Constellation,
    snr_min_db: float,
    snr_max_db: float,
    rng: RandomSource,
) -> Sample:
    """A single labeled sample."""
    return sample_batch(m, c, snr_min_db, snr_max_db, rng, 1)[0]
