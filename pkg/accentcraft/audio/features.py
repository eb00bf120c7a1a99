"""
Frame-level energy and pitch extraction.

Both extractors share one frame grid: frame t is centred on sample t * hop
and a signal of L samples yields floor(L / hop) + 1 frames.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import librosa
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.ndimage import median_filter

from accentcraft.config import DEFAULT_LOG_F0, MelConfig, TrackerConfig
from accentcraft.errors import ConfigError, InvariantViolation

logger = logging.getLogger(__name__)

# Frames whose analysis window holds less energy than this are unvoiced
SILENCE_ENERGY = 1e-10
# A correlation peak at a shorter lag wins if it reaches this share of the best peak
OCTAVE_PREFERENCE = 0.9
# Interpolated periods within this many samples of the lag range count as in range
LAG_SLACK = 1.0


@dataclass(frozen=True)
class FrameTrack:
    """Per-frame log-F0 (None when unvoiced) and energy."""

    log_f0: Tuple[Optional[float], ...]
    energy: Tuple[float, ...]

    def __post_init__(self):
        if len(self.log_f0) != len(self.energy):
            raise InvariantViolation(
                f"track has {len(self.log_f0)} pitch and {len(self.energy)} energy frames")

    @property
    def n_frames(self):
        return len(self.energy)

    def voiced_values(self):
        return [v for v in self.log_f0 if v is not None]


def frame_count(n_samples, hop):
    return n_samples // hop + 1


@lru_cache(maxsize=8)
def _mel_basis(sample_rate, fft_size, n_mels, fmin, fmax):
    return librosa.filters.mel(sr=sample_rate, n_fft=fft_size, n_mels=n_mels,
                               fmin=fmin, fmax=fmax, dtype=np.float64)


def _check_config(wave, cfg):
    cfg.validate()
    if cfg.fmax > wave.sample_rate / 2:
        raise ConfigError(f"fmax {cfg.fmax} Hz exceeds Nyquist of {wave.sample_rate} Hz audio")


def mel_energy(wave, cfg=MelConfig()):
    """
    Frame energy as the L2 norm of the linear-magnitude mel frame.

    The signal is reflection-padded by fft_size / 2 on both ends.

    Args:
        wave: WaveBuffer
        cfg: MelConfig

    Returns:
        np.ndarray: One non-negative value per frame

    Raises:
        ConfigError: if fmax exceeds the Nyquist frequency
    """
    _check_config(wave, cfg)
    pad = cfg.fft_size // 2
    mode = "reflect" if len(wave) > pad else "constant"
    padded = np.pad(wave.samples, pad, mode=mode)
    spectrum = librosa.stft(padded, n_fft=cfg.fft_size, hop_length=cfg.hop,
                            win_length=cfg.fft_size, window="hann", center=False)
    basis = _mel_basis(wave.sample_rate, cfg.fft_size, cfg.n_mels, cfg.fmin, cfg.fmax)
    mel = np.dot(basis, np.abs(spectrum))
    energy = np.linalg.norm(mel, axis=0)
    return energy[:frame_count(len(wave), cfg.hop)]


def _frame_f0(segment, window, min_lag, max_lag, sample_rate, tracker):
    reference = segment[:window]
    e0 = float(reference @ reference)
    if e0 < SILENCE_ENERGY:
        return None
    lags = sliding_window_view(segment, window)[:max_lag + 2]
    cross = lags @ reference
    squares = np.concatenate(([0.0], np.cumsum(segment * segment)))
    lag_energy = squares[window:window + len(cross)] - squares[:len(cross)]
    denominator = np.sqrt(e0 * np.maximum(lag_energy, 0.0))
    ncc = np.divide(cross, denominator, out=np.zeros_like(cross), where=denominator > 0)

    peaks = [k for k in range(max(min_lag, 1), min(max_lag, len(ncc) - 2) + 1)
             if ncc[k] >= ncc[k - 1] and ncc[k] >= ncc[k + 1]]
    if not peaks:
        return None
    best = max(ncc[k] for k in peaks)
    if best < tracker.voicing_threshold:
        return None
    lag = next(k for k in peaks if ncc[k] >= OCTAVE_PREFERENCE * best)

    a, b, c = ncc[lag - 1], ncc[lag], ncc[lag + 1]
    curvature = a - 2 * b + c
    offset = 0.5 * (a - c) / curvature if curvature < 0 else 0.0
    period = lag + offset
    shortest, longest = sample_rate / tracker.f0_max, sample_rate / tracker.f0_min
    if not shortest - LAG_SLACK <= period <= longest + LAG_SLACK:
        return None
    return float(np.clip(sample_rate / period, tracker.f0_min, tracker.f0_max))


def track_pitch(wave, cfg=MelConfig(), tracker=TrackerConfig()):
    """
    Normalized cross-correlation pitch tracker on the mel frame grid.

    Each frame correlates a window of tracker.window_sec seconds with its
    lagged copies for lags covering f0_min..f0_max. Frames whose best
    correlation peak is below the voicing threshold are unvoiced. The
    shortest-lag peak within OCTAVE_PREFERENCE of the best is taken and
    refined by parabolic interpolation; estimates just outside f0_min..f0_max
    are clipped to the range. Voiced F0 values are then passed through a
    3-point median filter.

    Args:
        wave: WaveBuffer
        cfg: MelConfig providing the hop
        tracker: TrackerConfig

    Returns:
        list: natural-log F0 per frame, None for unvoiced frames
    """
    sr = wave.sample_rate
    n_frames = frame_count(len(wave), cfg.hop)
    window = max(2, int(round(tracker.window_sec * sr)))
    min_lag = max(2, int(math.floor(sr / tracker.f0_max)) - 1)
    max_lag = int(math.ceil(sr / tracker.f0_min)) + 1
    half = window // 2
    padded = np.pad(wave.samples, (half, window + max_lag + 2))

    f0 = []
    for t in range(n_frames):
        start = t * cfg.hop
        segment = padded[start:start + window + max_lag + 2]
        f0.append(_frame_f0(segment, window, min_lag, max_lag, sr, tracker))

    voiced = [i for i, value in enumerate(f0) if value is not None]
    if voiced:
        smoothed = median_filter(np.array([f0[i] for i in voiced]), size=3, mode="nearest")
        for i, value in zip(voiced, smoothed):
            f0[i] = float(value)
    return [None if value is None else math.log(value) for value in f0]


def extract_track(wave, cfg=MelConfig(), tracker=TrackerConfig()):
    """
    Build the frame-level contour of an utterance.

    Returns:
        FrameTrack: pitch and energy on the shared frame grid
    """
    energy = mel_energy(wave, cfg)
    log_f0 = track_pitch(wave, cfg, tracker)
    return FrameTrack(tuple(log_f0), tuple(float(e) for e in energy))


def interpolate_unvoiced(track, default_log_f0=DEFAULT_LOG_F0):
    """
    Fill unvoiced frames by linear interpolation between voiced neighbours.

    Leading and trailing gaps take the nearest voiced value; a track with no
    voiced frame takes default_log_f0 everywhere.

    Args:
        track: FrameTrack
        default_log_f0: Fill value for all-unvoiced tracks

    Returns:
        FrameTrack: Fully voiced track with the same energy
    """
    voiced = [i for i, value in enumerate(track.log_f0) if value is not None]
    if not voiced:
        return FrameTrack((default_log_f0,) * track.n_frames, track.energy)
    filled = np.interp(np.arange(track.n_frames), voiced,
                       [track.log_f0[i] for i in voiced])
    return FrameTrack(tuple(float(v) for v in filled), track.energy)
