"""Experiment configuration schemas using Pydantic."""

from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

ConstellationName = Literal["bpsk", "qpsk", "qam16", "psk8"]
DetectorName = Literal["zf", "ml", "amp", "sd", "mbest", "exact", "detnet", "fullycon"]

# Training SNR ranges used when a config leaves them out
DEFAULT_SNR_RANGES = {
    "bpsk": (7.0, 14.0),
    "qpsk": (8.0, 15.0),
    "qam16": (15.0, 25.0),
    "psk8": (15.0, 25.0),
}

DEFAULT_LAYERS = {"detnet": 30, "fullycon": 6}


class StrictModel(BaseModel):
    """Base model rejecting unknown fields."""

    model_config = ConfigDict(extra="forbid", str_strip_whitespace=True)


class ChannelConfig(StrictModel):
    """Channel model section: {regime, distribution, alpha?, K, N, complex}."""

    regime: Literal["fc", "vc"]
    distribution: Literal["iid_gaussian", "alpha_toeplitz"]
    alpha: Optional[float] = None
    K: int = Field(gt=0)
    N: int = Field(gt=0)
    complex: bool = False
    fixed_seed: int = Field(default=0, ge=0)

    @model_validator(mode="after")
    def validate_dimensions(self) -> "ChannelConfig":
        """Require N >= K and a valid alpha for Toeplitz channels."""
        if self.N < self.K:
            raise ValueError(f"N ({self.N}) must be at least K ({self.K})")
        if self.distribution == "alpha_toeplitz":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValueError(f"alpha must lie in (0, 1) for alpha_toeplitz, got {self.alpha}")
        return self


class TrainConfig(StrictModel):
    """Training run for one learned detector."""

    architecture: Literal["detnet", "fullycon"]
    channel: ChannelConfig
    constellation: ConstellationName
    snr_min_db: Optional[float] = None
    snr_max_db: Optional[float] = None
    batch_size: int = Field(default=500, ge=1)
    iterations: int = Field(default=20000, ge=1)
    learning_rate: float = Field(default=1e-3, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    epsilon: float = Field(default=1e-8, gt=0)
    lr_decay: Optional[float] = Field(default=None, gt=0, le=1)
    lr_decay_every: int = Field(default=1000, ge=1)
    layers: Optional[int] = Field(default=None, ge=1)
    hidden_widths: Optional[List[int]] = None
    z_width: Optional[int] = Field(default=None, ge=1)
    v_width: Optional[int] = Field(default=None, ge=1)
    residual_weight: float = Field(default=0.8, ge=0, le=1)
    loss_weighting: Literal["log", "log_plus_one", "uniform"] = "log"
    seed: int = Field(default=0, ge=0)
    checkpoint_every: int = Field(default=1000, ge=0)
    log_every: int = Field(default=100, ge=1)
    validation_trials: int = Field(default=1000, ge=1)
    validation_snr_db: Optional[float] = None

    @field_validator("hidden_widths")
    @classmethod
    def validate_widths(cls, v: Optional[List[int]]) -> Optional[List[int]]:
        """Hidden widths must be positive."""
        if v is not None and any(width < 1 for width in v):
            raise ValueError(f"hidden widths must be positive, got {v}")
        return v

    @model_validator(mode="after")
    def fill_defaults(self) -> "TrainConfig":
        """Fill SNR range and depth defaults, then check consistency."""
        low, high = DEFAULT_SNR_RANGES[self.constellation]
        if self.snr_min_db is None:
            self.snr_min_db = low
        if self.snr_max_db is None:
            self.snr_max_db = high
        if self.snr_min_db > self.snr_max_db:
            raise ValueError(
                f"snr_min_db ({self.snr_min_db}) exceeds snr_max_db ({self.snr_max_db})"
            )
        if self.layers is None:
            self.layers = DEFAULT_LAYERS[self.architecture]
        if self.hidden_widths is not None and len(self.hidden_widths) != self.layers - 1:
            raise ValueError(
                f"hidden_widths needs {self.layers - 1} entries for {self.layers} layers"
            )
        if self.complex_mismatch():
            raise ValueError(
                f"constellation '{self.constellation}' does not match channel complex={self.channel.complex}"
            )
        return self

    def complex_mismatch(self) -> bool:
        return (self.constellation != "bpsk") != self.channel.complex

    @property
    def mid_snr_db(self) -> float:
        """Validation SNR: explicit value or the middle of the training range."""
        if self.validation_snr_db is not None:
            return self.validation_snr_db
        return 0.5 * (float(self.snr_min_db) + float(self.snr_max_db))  # type: ignore[arg-type]


class DetectorSpec(StrictModel):
    """One detector taking part in an evaluation."""

    name: DetectorName
    label: Optional[str] = None
    m: Optional[int] = Field(default=None, ge=1)
    weighting: Literal["likelihood", "count"] = "likelihood"
    iterations: int = Field(default=50, ge=1)
    damping: float = Field(default=0.0, ge=0, lt=1)
    checkpoint: Optional[str] = None
    layer: Optional[int] = Field(default=None, ge=1)
    per_layer: bool = False

    @model_validator(mode="after")
    def validate_parameters(self) -> "DetectorSpec":
        """M-Best needs its list width."""
        if self.name == "mbest" and self.m is None:
            raise ValueError("detector 'mbest' requires the list width m")
        return self

    @property
    def display_name(self) -> str:
        if self.label:
            return self.label
        if self.name == "mbest":
            return f"mbest-{self.m}"
        return self.name


class EvaluationConfig(StrictModel):
    """Curve, soft-curve and bench settings."""

    channel: ChannelConfig
    constellation: ConstellationName
    snr_db: List[float] = Field(min_length=1)
    trials: int = Field(default=1000, ge=1)
    batch_size: int = Field(default=1000, ge=1)
    error_mode: Optional[Literal["ber", "ser"]] = None
    detectors: List[DetectorSpec] = Field(min_length=1)
    batch_sizes: List[int] = Field(default_factory=lambda: [1, 10, 100, 1000])
    repetitions: int = Field(default=20, ge=1)
    warmup: int = Field(default=2, ge=0)

    @field_validator("batch_sizes")
    @classmethod
    def validate_batch_sizes(cls, v: List[int]) -> List[int]:
        """Batch sizes must be positive."""
        if not v or any(size < 1 for size in v):
            raise ValueError(f"batch sizes must be positive, got {v}")
        return v


class OracleConfig(StrictModel):
    """Oracle comparison suite: SD against ML, full-width M-Best against exact posteriors."""

    channel: ChannelConfig
    constellation: ConstellationName
    instances: int = Field(default=1000, ge=1)
    snr_db: List[float] = Field(default_factory=lambda: [0.0, 5.0, 10.0], min_length=1)
    posterior_instances: int = Field(default=200, ge=0)


class ExperimentConfig(StrictModel):
    """Top-level experiment file."""

    experiment_id: str = Field(pattern=r"^[A-Za-z0-9][A-Za-z0-9_.-]*$", max_length=128)
    mode: Literal["train", "curve", "soft-curve", "bench", "oracle-check"]
    seed: int = Field(default=0, ge=0)
    output_dir: Optional[str] = None
    workers: Optional[int] = Field(default=None, ge=0)
    train: Optional[TrainConfig] = None
    evaluation: Optional[EvaluationConfig] = None
    oracle: Optional[OracleConfig] = None

    @model_validator(mode="after")
    def validate_sections(self) -> "ExperimentConfig":
        """The section matching the mode must be present; the top-level seed is the only seed."""
        required = {
            "train": "train",
            "curve": "evaluation",
            "soft-curve": "evaluation",
            "bench": "evaluation",
            "oracle-check": "oracle",
        }[self.mode]
        if getattr(self, required) is None:
            raise ValueError(f"mode '{self.mode}' requires the '{required}' section")
        if self.train is not None and "seed" in self.train.model_fields_set:
            raise ValueError("set the seed at the top level of the experiment, not inside 'train'")
        return self


def validate_experiment(data: dict) -> ExperimentConfig:
    """
    Validate an experiment dictionary against its schema.

    Args:
        data: Parsed JSON document

    Returns:
        Validated ExperimentConfig

    Raises:
        ValidationError: If validation fails
    """
    return ExperimentConfig(**data)
