"""Architecture descriptions and parameter containers for the learned detectors."""

from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from app.lib.common.exceptions import ConfigurationError
from app.lib.mimo.constellation import Constellation, ConstellationKind, make_constellation

# Initial value of the learned step sizes
INITIAL_STEP = 1e-2


class Architecture(str, Enum):
    FULLYCON = "fullycon"
    DETNET = "detnet"


class LossWeighting(str, Enum):
    LOG = "log"
    LOG_PLUS_ONE = "log_plus_one"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class NetworkSpec:
    """
    Shapes and hyperparameters that fix a network's parameter layout.

    K and N count transmit and receive symbols as in the channel model.
    """

    architecture: Architecture
    constellation: ConstellationKind
    K: int
    N: int
    is_complex: bool
    layers: int
    hidden_widths: Tuple[int, ...] = ()
    z_width: int = 0
    v_width: int = 0
    residual_weight: float = 0.8
    loss_weighting: LossWeighting = LossWeighting.LOG

    def __post_init__(self) -> None:
        object.__setattr__(self, "architecture", Architecture(self.architecture))
        object.__setattr__(self, "constellation", ConstellationKind(self.constellation))
        object.__setattr__(self, "loss_weighting", LossWeighting(self.loss_weighting))
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.layers < 1:
            raise ConfigurationError(f"Networks need at least one layer, got {self.layers}")
        if not 0.0 <= self.residual_weight <= 1.0:
            raise ConfigurationError(f"Residual weight must lie in [0, 1], got {self.residual_weight}")
        if self.architecture is Architecture.FULLYCON:
            if len(self.hidden_widths) != self.layers - 1:
                raise ConfigurationError(
                    f"FullyCon with {self.layers} layers needs {self.layers - 1} hidden widths"
                )
        elif self.z_width < self.n_inputs + self.v_width:
            raise ConfigurationError(
                f"DetNet lifting is not tall: z width {self.z_width} < {self.n_inputs + self.v_width}"
            )

    @property
    def constellation_obj(self) -> Constellation:
        return make_constellation(self.constellation)

    @property
    def n_inputs(self) -> int:
        return 2 * self.K if self.is_complex else self.K

    @property
    def n_outputs(self) -> int:
        return 2 * self.N if self.is_complex else self.N

    @property
    def onehot_width(self) -> int:
        return self.constellation_obj.onehot_dim * self.n_inputs

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["architecture"] = self.architecture.value
        data["constellation"] = self.constellation.value
        data["loss_weighting"] = self.loss_weighting.value
        data["hidden_widths"] = list(self.hidden_widths)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NetworkSpec":
        return cls(**data)

    def describe(self) -> str:
        if self.architecture is Architecture.FULLYCON:
            widths = f"widths={list(self.hidden_widths)}"
        else:
            widths = f"z_width={self.z_width} v_width={self.v_width}"
        return (
            f"{self.architecture.value} L={self.layers} {widths} "
            f"constellation={self.constellation.value} K={self.K} N={self.N}"
        )


@dataclass
class NetworkParams:
    """Named parameter arrays in declared order."""

    spec: NetworkSpec
    arrays: Dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.arrays)

    def names(self) -> List[str]:
        return list(self.arrays)

    def copy(self) -> "NetworkParams":
        return type(self)(spec=self.spec, arrays={k: v.copy() for k, v in self.arrays.items()})

    def with_arrays(self, arrays: Dict[str, np.ndarray]) -> "NetworkParams":
        return type(self)(spec=self.spec, arrays=arrays)


class FullyConParams(NetworkParams):
    """W{k}, b{k} for k = 1..L."""

    def layer(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        return self.arrays[f"W{k}"], self.arrays[f"b{k}"]


class DetNetParams(NetworkParams):
    """W1_k, b1_k, W2_k, b2_k, W3_k, b3_k, delta1_k, delta2_k for k = 1..L."""

    def layer(self, k: int) -> Dict[str, np.ndarray]:
        return {name: self.arrays[f"{name}_{k}"] for name in DETNET_LAYER_NAMES}


DETNET_LAYER_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3", "delta1", "delta2")


def parameter_count(params: NetworkParams) -> int:
    return int(sum(array.size for array in params.arrays.values()))


def glorot_uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def fullycon_spec(
    constellation: ConstellationKind,
    K: int,
    N: int,
    is_complex: bool,
    layers: int = 6,
    hidden_widths: Optional[Sequence[int]] = None,
) -> NetworkSpec:
    """FullyCon layout; hidden widths default to 4K each."""
    widths = tuple(hidden_widths) if hidden_widths is not None else (4 * K,) * (layers - 1)
    return NetworkSpec(
        architecture=Architecture.FULLYCON,
        constellation=constellation,
        K=K,
        N=N,
        is_complex=is_complex,
        layers=layers,
        hidden_widths=widths,
    )


def detnet_spec(
    constellation: ConstellationKind,
    K: int,
    N: int,
    is_complex: bool,
    layers: int = 30,
    z_width: Optional[int] = None,
    v_width: Optional[int] = None,
    residual_weight: float = 0.8,
    loss_weighting: LossWeighting = LossWeighting.LOG,
) -> NetworkSpec:
    """DetNet layout; z and v widths default to 8K and 4K."""
    return NetworkSpec(
        architecture=Architecture.DETNET,
        constellation=constellation,
        K=K,
        N=N,
        is_complex=is_complex,
        layers=layers,
        z_width=z_width if z_width is not None else 8 * K,
        v_width=v_width if v_width is not None else 4 * K,
        residual_weight=residual_weight,
        loss_weighting=loss_weighting,
    )


def init_params(spec: NetworkSpec, rng: np.random.Generator) -> NetworkParams:
    """
    Fresh parameters: Glorot-uniform weights, zero biases, step sizes 1e-2.
    """
    arrays: Dict[str, np.ndarray] = {}
    if spec.architecture is Architecture.FULLYCON:
        widths = [spec.n_outputs, *spec.hidden_widths, spec.onehot_width]
        for k in range(1, spec.layers + 1):
            arrays[f"W{k}"] = glorot_uniform(rng, widths[k], widths[k - 1])
            arrays[f"b{k}"] = np.zeros(widths[k])
        return FullyConParams(spec=spec, arrays=arrays)

    n, z, v = spec.n_inputs, spec.z_width, spec.v_width
    for k in range(1, spec.layers + 1):
        arrays[f"W1_{k}"] = glorot_uniform(rng, z, n + v)
        arrays[f"b1_{k}"] = np.zeros(z)
        arrays[f"W2_{k}"] = glorot_uniform(rng, spec.onehot_width, z)
        arrays[f"b2_{k}"] = np.zeros(spec.onehot_width)
        arrays[f"W3_{k}"] = glorot_uniform(rng, v, z)
        arrays[f"b3_{k}"] = np.zeros(v)
        arrays[f"delta1_{k}"] = np.array(INITIAL_STEP)
        arrays[f"delta2_{k}"] = np.array(INITIAL_STEP)
    return DetNetParams(spec=spec, arrays=arrays)


def params_from_arrays(spec: NetworkSpec, arrays: Dict[str, np.ndarray]) -> NetworkParams:
    """Wrap loaded arrays in the container class matching the architecture."""
    cls = FullyConParams if spec.architecture is Architecture.FULLYCON else DetNetParams
    return cls(spec=spec, arrays=arrays)
