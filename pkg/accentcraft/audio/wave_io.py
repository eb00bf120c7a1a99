"""
Waveform container and WAV ingestion.
"""

import logging
from dataclasses import dataclass

import numpy as np
import soundfile as sf

from accentcraft.config import SAMPLE_RATE
from accentcraft.errors import InvariantViolation

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class WaveBuffer:
    """Mono samples in [-1, 1] at a given sample rate."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise InvariantViolation("a wave buffer needs a non-empty mono signal")
        if self.sample_rate <= 0:
            raise InvariantViolation(f"invalid sample rate {self.sample_rate}")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.size

    @property
    def duration(self):
        return self.samples.size / self.sample_rate

    def scaled(self, factor):
        return WaveBuffer(self.samples * factor, self.sample_rate)


def resample_linear(wave, target_rate):
    """
    Linearly resample a wave buffer.

    Args:
        wave: Source WaveBuffer
        target_rate: Output sample rate in Hz

    Returns:
        WaveBuffer: Resampled buffer (the input itself if rates match)
    """
    if wave.sample_rate == target_rate:
        return wave
    n_out = max(1, int(round(len(wave) * target_rate / wave.sample_rate)))
    source_times = np.arange(len(wave)) / wave.sample_rate
    target_times = np.arange(n_out) / target_rate
    return WaveBuffer(np.interp(target_times, source_times, wave.samples), target_rate)


def read_wav(path, target_rate=SAMPLE_RATE):
    """
    Read a PCM16 or float32 WAV file as a mono buffer at the target rate.

    Multichannel audio is averaged to mono and other sample rates are
    linearly resampled; both are logged as warnings.

    Args:
        path: Path to the WAV file
        target_rate: Sample rate of the returned buffer

    Returns:
        WaveBuffer: The decoded audio
    """
    data, rate = sf.read(str(path), dtype="float64", always_2d=True)
    if data.shape[1] > 1:
        logger.warning("%s: averaging %d channels to mono", path, data.shape[1])
    wave = WaveBuffer(data.mean(axis=1), int(rate))
    if wave.sample_rate != target_rate:
        logger.warning("%s: resampling %d Hz to %d Hz", path, wave.sample_rate, target_rate)
        wave = resample_linear(wave, target_rate)
    return wave


def write_wav(path, wave, subtype="PCM_16"):
    """Write a wave buffer as a mono WAV file."""
    sf.write(str(path), np.clip(wave.samples, -1.0, 1.0), wave.sample_rate, subtype=subtype)
