"""Real symbol alphabets, one-hot mappings and the complex-to-real reparameterization."""

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from typing import Iterator, Optional, Tuple, Union

import numpy as np

from app.lib.common.exceptions import ConfigurationError, DomainError

# Alphabet membership tolerance
ALPHABET_TOLERANCE = 1e-12

# Largest candidate set an exhaustive enumeration may walk
MAX_CANDIDATES = 2**24

HALF_SQRT2 = math.sqrt(2.0) / 2.0


class ConstellationKind(str, Enum):
    """Constellation names as they appear in config files."""

    BPSK = "bpsk"
    QPSK = "qpsk"
    QAM16 = "qam16"
    PSK8 = "psk8"


@dataclass(frozen=True)
class Constellation:
    """
    Real-valued view of a digital constellation.

    Complex constellations are handled through their real part alphabet; a
    real symbol vector of length 2K stores the real parts of the K complex
    symbols first and the imaginary parts after them, so component j pairs
    with component j + K.
    """

    kind: ConstellationKind
    real_alphabet: Tuple[float, ...]
    bits_per_real_symbol: int
    is_complex: bool
    bit_labels: Tuple[Tuple[int, ...], ...] = ()
    component_weights: Tuple[float, ...] = ()

    @cached_property
    def alphabet(self) -> np.ndarray:
        values = np.asarray(self.real_alphabet, dtype=float)
        values.setflags(write=False)
        return values

    @property
    def onehot_dim(self) -> int:
        return len(self.real_alphabet)

    @property
    def symbol_energy(self) -> float:
        """Mean of s^2 over the real alphabet."""
        return float(np.mean(self.alphabet**2))

    @cached_property
    def component_prior(self) -> np.ndarray:
        """Marginal probability of each alphabet value under uniform transmission."""
        if self.component_weights:
            weights = np.asarray(self.component_weights, dtype=float)
        else:
            weights = np.ones(self.onehot_dim)
        prior = weights / weights.sum()
        prior.setflags(write=False)
        return prior

    @property
    def component_energy(self) -> float:
        """E[s^2] of one real component under the transmitted distribution."""
        return float(self.component_prior @ self.alphabet**2)

    @property
    def is_joint(self) -> bool:
        """True when real and imaginary parts are not independent (8-PSK)."""
        return self.kind is ConstellationKind.PSK8

    @cached_property
    def pair_compatibility(self) -> np.ndarray:
        """
        Boolean matrix indexed [re index, im index]: True where the pair is a
        transmittable point.
        """
        size = self.onehot_dim
        if not self.is_joint:
            table = np.ones((size, size), dtype=bool)
        else:
            table = np.zeros((size, size), dtype=bool)
            for re_value, im_value in psk8_points():
                table[_alphabet_index(self, re_value), _alphabet_index(self, im_value)] = True
        table.setflags(write=False)
        return table

    def n_components(self, K: int) -> int:
        """Length of the real symbol vector carrying K transmit symbols."""
        return 2 * K if self.is_complex else K


def _alphabet_index(c: Constellation, value: float) -> int:
    return int(np.argmin(np.abs(c.alphabet - value)))


@lru_cache(maxsize=None)
def psk8_points() -> np.ndarray:
    """The eight (re, im) pairs of e^{i 2 pi k / 8}, k = 0..7."""
    r = HALF_SQRT2
    points = np.array(
        [(1.0, 0.0), (r, r), (0.0, 1.0), (-r, r), (-1.0, 0.0), (-r, -r), (0.0, -1.0), (r, -r)]
    )
    points.setflags(write=False)
    return points


_DEFINITIONS = {
    ConstellationKind.BPSK: dict(
        real_alphabet=(-1.0, 1.0),
        bits_per_real_symbol=1,
        is_complex=False,
        bit_labels=((0,), (1,)),
    ),
    ConstellationKind.QPSK: dict(
        real_alphabet=(-1.0, 1.0),
        bits_per_real_symbol=1,
        is_complex=True,
        bit_labels=((0,), (1,)),
    ),
    ConstellationKind.QAM16: dict(
        real_alphabet=(-3.0, -1.0, 1.0, 3.0),
        bits_per_real_symbol=2,
        is_complex=True,
        # Gray labels along each axis
        bit_labels=((0, 0), (0, 1), (1, 1), (1, 0)),
    ),
    ConstellationKind.PSK8: dict(
        real_alphabet=(-1.0, -HALF_SQRT2, 0.0, HALF_SQRT2, 1.0),
        bits_per_real_symbol=0,
        is_complex=True,
        component_weights=(1.0, 2.0, 2.0, 2.0, 1.0),
    ),
}


@lru_cache(maxsize=None)
def _build(kind: ConstellationKind) -> Constellation:
    return Constellation(kind=kind, **_DEFINITIONS[kind])  # type: ignore[arg-type]


def make_constellation(kind: Union[str, ConstellationKind]) -> Constellation:
    """
    Build one of the supported constellations.

    :param kind: "bpsk", "qpsk", "qam16" or "psk8" (or the enum member).
    :return: The shared, immutable Constellation instance.
    :raises ConfigurationError: If the kind is unknown.
    """
    try:
        resolved = ConstellationKind(kind)
    except ValueError:
        supported = ", ".join(k.value for k in ConstellationKind)
        raise ConfigurationError(
            f"Unknown constellation '{kind}'. Supported: {supported}"
        ) from None
    return _build(resolved)


def symbol_indices(x, c: Constellation) -> np.ndarray:
    """
    Alphabet index of every entry of x.

    :raises DomainError: If an entry is farther than ALPHABET_TOLERANCE from every symbol.
    """
    values = np.asarray(x, dtype=float)
    alphabet = c.alphabet
    indices = np.abs(values[..., None] - alphabet).argmin(axis=-1)
    off_alphabet = ~(np.abs(values - alphabet[indices]) <= ALPHABET_TOLERANCE)
    if np.any(off_alphabet):
        position = tuple(int(i) for i in np.argwhere(off_alphabet)[0])
        index = position[-1] if position else 0
        raise DomainError(
            f"Entry at index {index} ({values[position]!r}) is not a {c.kind.value} symbol"
        )
    return indices


def encode_one_hot(x, c: Constellation) -> np.ndarray:
    """
    Stack the unit vector of every symbol of x.

    Works on a single vector of length n or on a batch of shape (B, n); the
    result has |S| * n entries per vector, block i belonging to x_i.
    """
    values = np.atleast_1d(np.asarray(x, dtype=float))
    indices = symbol_indices(values, c)
    identity = np.eye(c.onehot_dim)
    return identity[indices].reshape(*values.shape[:-1], -1)


def soft_decode(x_oh, c: Constellation) -> np.ndarray:
    """
    Weighted symbol sum per one-hot block, without normalization.

    :raises DomainError: If the length is not a multiple of |S|.
    """
    weights = np.asarray(x_oh, dtype=float)
    if weights.ndim == 0 or weights.shape[-1] % c.onehot_dim:
        raise DomainError(
            f"One-hot length {weights.shape[-1] if weights.ndim else 0} is not a multiple of {c.onehot_dim}"
        )
    blocks = weights.reshape(*weights.shape[:-1], -1, c.onehot_dim)
    return blocks @ c.alphabet


def hard_round(x_soft, c: Constellation) -> np.ndarray:
    """
    Nearest alphabet value per component, ties toward the smaller symbol.

    For 8-PSK, (re, im) pairs that do not form a valid point after rounding
    are replaced by the valid point nearest to the unrounded pair.
    """
    values = np.asarray(x_soft, dtype=float)
    alphabet = c.alphabet
    rounded = alphabet[np.abs(values[..., None] - alphabet).argmin(axis=-1)]
    if c.is_joint:
        rounded = _project_psk8(values, rounded, c)
    return rounded


def _project_psk8(values: np.ndarray, rounded: np.ndarray, c: Constellation) -> np.ndarray:
    n = rounded.shape[-1]
    if n % 2:
        raise DomainError(f"8-PSK vectors need an even number of components, got {n}")
    half = n // 2
    re_index = np.abs(rounded[..., :half, None] - c.alphabet).argmin(axis=-1)
    im_index = np.abs(rounded[..., half:, None] - c.alphabet).argmin(axis=-1)
    valid = c.pair_compatibility[re_index, im_index]
    if np.all(valid):
        return rounded

    points = psk8_points()
    soft_pairs = np.stack([values[..., :half], values[..., half:]], axis=-1)
    distances = ((soft_pairs[..., None, :] - points) ** 2).sum(axis=-1)
    nearest = points[distances.argmin(axis=-1)]

    projected = rounded.copy()
    projected[..., :half] = np.where(valid, rounded[..., :half], nearest[..., 0])
    projected[..., half:] = np.where(valid, rounded[..., half:], nearest[..., 1])
    return projected


def complex_to_real(Hc, yc=None) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Real-valued equivalent of a complex model.

    H = [[Re Hc, -Im Hc], [Im Hc, Re Hc]], y = [Re yc; Im yc]. Leading batch
    dimensions are kept.

    :raises DomainError: If yc does not match the row count of Hc.
    """
    channel = np.asarray(Hc, dtype=complex)
    if channel.ndim < 2:
        raise DomainError(f"Channel must be at least 2-D, got shape {channel.shape}")
    top = np.concatenate([channel.real, -channel.imag], axis=-1)
    bottom = np.concatenate([channel.imag, channel.real], axis=-1)
    H = np.concatenate([top, bottom], axis=-2)
    if yc is None:
        return H, None

    received = np.asarray(yc, dtype=complex)
    if received.shape[-1] != channel.shape[-2]:
        raise DomainError(
            f"Received vector length {received.shape[-1]} does not match {channel.shape[-2]} channel rows"
        )
    return H, realify(received)


def realify(v) -> np.ndarray:
    """Stack real parts above imaginary parts along the last axis."""
    values = np.asarray(v, dtype=complex)
    return np.concatenate([values.real, values.imag], axis=-1)


def count_candidates(c: Constellation, n_components: int) -> int:
    """Number of valid transmitted vectors with n_components real entries."""
    if c.is_joint:
        return len(psk8_points()) ** (n_components // 2)
    return c.onehot_dim**n_components


def enumerate_candidates(
    c: Constellation, n_components: int, chunk_size: int = 1 << 15
) -> Iterator[np.ndarray]:
    """
    Yield every valid transmitted vector in chunks of shape (C, n_components).

    Per-component alphabets come out in lexicographic order of the real
    vectors. 8-PSK vectors are enumerated jointly over the 8 points of each
    complex symbol.
    """
    total = count_candidates(c, n_components)
    if c.is_joint:
        units = n_components // 2
        shape = (len(psk8_points()),) * units
    else:
        shape = (c.onehot_dim,) * n_components

    for start in range(0, total, chunk_size):
        flat = np.arange(start, min(start + chunk_size, total))
        digits = np.stack(np.unravel_index(flat, shape), axis=-1)
        if c.is_joint:
            pairs = psk8_points()[digits]
            yield np.concatenate([pairs[..., 0], pairs[..., 1]], axis=-1)
        else:
            yield c.alphabet[digits]


def allowed_component_values(
    c: Constellation, position: int, n_components: int, partner_index: Optional[int] = None
) -> np.ndarray:
    """
    Mask over the alphabet of the values admissible at one component.

    Tree searches fix components from the last to the first, so for 8-PSK the
    imaginary part j + K is already known when the real part j is chosen.

    :param position: Component being chosen.
    :param n_components: Length of the real symbol vector.
    :param partner_index: Alphabet index of the fixed imaginary partner, if any.
    """
    if not c.is_joint or position >= n_components // 2 or partner_index is None:
        return np.ones(c.onehot_dim, dtype=bool)
    return c.pair_compatibility[:, partner_index]
