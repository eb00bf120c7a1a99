"""
Configuration settings for the AccentCraft toolkit.

Module-level constants hold the defaults; a JSON config file passed with
--config overrides any subset of them through load_config().
"""

import json
import math
from dataclasses import asdict, dataclass, field, fields

from accentcraft.errors import ConfigError

# Application information
APP_NAME = "AccentCraft"
VERSION = "0.1.0"

# Acoustic features
SAMPLE_RATE = 22050
N_MELS = 80
FFT_SIZE = 1024
HOP_LENGTH = 256
MEL_FMIN = 0.0
MEL_FMAX = 8000.0

# Pitch tracker
F0_MIN = 60.0
F0_MAX = 400.0
PITCH_WINDOW_SEC = 0.025
VOICING_THRESHOLD = 0.30
DEFAULT_LOG_F0 = math.log(150.0)

# Speaker statistics
STATS_MAX_M = 15
STATS_REFRESH_STEPS = 2500

# Editor backend
BACKEND_KIND = "mock"  # mock or remote
BACKEND_URL = "https://api.openai.com/v1/chat/completions"
BACKEND_MODEL = "gpt-5.1"
BACKEND_TEMPERATURE = 0.0
BACKEND_TOKEN_ENV = "ACCENTCRAFT_API_KEY"
BACKEND_TIMEOUT = 60.0  # seconds
BACKEND_TRANSPORT_RETRIES = 3
MAX_RETRIES = 3

# Execution
WORKERS = 4
MASTER_SEED = 0

# Experiment sweeps
K_VALUES_PROMPTING = [0, 1, 3, 5, 10, 15]
K_VALUES = [1, 3, 5, 10, 15]
K_FIXED = 15
SWEEP_RUNS = 7
SYNTH_BUDGET = 500

# Matched rates of the random-phoneme control per accent
MATCHED_RATES = {
    "indian": 0.19,
    "korean": 0.35,
}


@dataclass(frozen=True)
class MelConfig:
    """STFT / mel parameters shared by energy and pitch extraction."""

    sample_rate: int = SAMPLE_RATE
    n_mels: int = N_MELS
    fft_size: int = FFT_SIZE
    hop: int = HOP_LENGTH
    fmin: float = MEL_FMIN
    fmax: float = MEL_FMAX

    def validate(self):
        """
        Check the configuration invariants.

        Raises:
            ConfigError: if hop > fft_size or fmax exceeds the Nyquist frequency
        """
        if self.sample_rate <= 0 or self.hop <= 0 or self.fft_size <= 0:
            raise ConfigError("sample_rate, hop and fft_size must be positive")
        if self.hop > self.fft_size:
            raise ConfigError(f"hop {self.hop} exceeds fft_size {self.fft_size}")
        if self.fmax > self.sample_rate / 2:
            raise ConfigError(
                f"fmax {self.fmax} Hz exceeds Nyquist {self.sample_rate / 2} Hz")
        if not 0 <= self.fmin < self.fmax:
            raise ConfigError(f"invalid mel range {self.fmin}-{self.fmax} Hz")
        return self


@dataclass(frozen=True)
class TrackerConfig:
    """Normalized cross-correlation pitch tracker settings."""

    f0_min: float = F0_MIN
    f0_max: float = F0_MAX
    window_sec: float = PITCH_WINDOW_SEC
    voicing_threshold: float = VOICING_THRESHOLD
    default_log_f0: float = DEFAULT_LOG_F0


@dataclass(frozen=True)
class BackendConfig:
    """Chat-completion backend settings."""

    kind: str = BACKEND_KIND
    url: str = BACKEND_URL
    model: str = BACKEND_MODEL
    temperature: float = BACKEND_TEMPERATURE
    token_env: str = BACKEND_TOKEN_ENV
    timeout: float = BACKEND_TIMEOUT
    transport_retries: int = BACKEND_TRANSPORT_RETRIES


@dataclass(frozen=True)
class PipelineConfig:
    """Top-level configuration for a pipeline invocation."""

    mel: MelConfig = field(default_factory=MelConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    backend: BackendConfig = field(default_factory=BackendConfig)
    max_retries: int = MAX_RETRIES
    workers: int = WORKERS
    master_seed: int = MASTER_SEED

    def to_dict(self):
        """
        Convert the configuration to a dictionary.

        Returns:
            dict: nested plain-data configuration
        """
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        """
        Create a configuration from (partial) dictionary data.

        Missing keys keep their defaults; unknown keys are rejected.

        Args:
            data: Dictionary of configuration overrides

        Returns:
            PipelineConfig: New configuration instance
        """
        sections = {"mel": MelConfig, "tracker": TrackerConfig, "backend": BackendConfig}
        _reject_unknown(data, {f.name for f in fields(cls)}, "")
        kwargs = {}
        for key, value in data.items():
            if key in sections:
                if not isinstance(value, dict):
                    raise ConfigError(f"section {key!r} must be an object")
                section_cls = sections[key]
                _reject_unknown(value, {f.name for f in fields(section_cls)}, key + ".")
                kwargs[key] = section_cls(**value)
            else:
                kwargs[key] = value
        config = cls(**kwargs)
        config.mel.validate()
        if config.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if config.workers < 1:
            raise ConfigError("workers must be >= 1")
        return config


def _reject_unknown(data, known, prefix):
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(prefix + k for k in unknown)}")


def load_config(path=None):
    """
    Load a pipeline configuration.

    Args:
        path: Path to a JSON config file, or None for the defaults

    Returns:
        PipelineConfig: The loaded configuration

    Raises:
        ConfigError: if the file cannot be read or holds invalid settings
    """
    if path is None:
        return PipelineConfig()
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    try:
        return PipelineConfig.from_dict(data)
    except TypeError as e:
        raise ConfigError(f"invalid config {path}: {e}") from e
