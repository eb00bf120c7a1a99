"""
Phoneme-level aggregation of frame tracks.
"""

import logging
import math

import numpy as np

from accentcraft.audio.features import extract_track, interpolate_unvoiced
from accentcraft.config import MelConfig, TrackerConfig
from accentcraft.errors import CoverageError
from accentcraft.models.utterance import AlignedUtterance

logger = logging.getLogger(__name__)


def frame_index(seconds, sample_rate, hop):
    """Nearest frame boundary for a time in seconds."""
    return int(math.floor(seconds * sample_rate / hop + 0.5))


def _word_lengths(phones, words):
    lengths = []
    assigned = 0
    for word in words:
        count = sum(1 for p in phones if word.start <= (p.start + p.end) / 2 < word.end)
        if count:
            lengths.append(count)
            assigned += count
    if assigned != len(phones):
        logger.warning("%d of %d phones fall outside word intervals; dropping word lengths",
                       len(phones) - assigned, len(phones))
        return None
    return lengths


def aggregate(track, intervals, cfg=MelConfig(), sample_rate=None,
              default_log_f0=None):
    """
    Aggregate a frame track to one duration, pitch and energy per phoneme.

    Boundary times are rounded to the frame grid and differenced, so
    adjacent phonemes tile the grid exactly; durations are clamped to at
    least one frame. Pitch is the mean interpolated log-F0 and energy the
    mean frame energy over each phoneme's frames. Silence intervals are dropped.

    Args:
        track: FrameTrack on the cfg frame grid
        intervals: PhoneIntervals
        cfg: MelConfig providing the hop
        sample_rate: Audio sample rate (defaults to cfg.sample_rate)
        default_log_f0: Fill value for all-unvoiced tracks

    Returns:
        AlignedUtterance: The phoneme-level features

    Raises:
        CoverageError: if an interval extends beyond the available frames
    """
    sample_rate = sample_rate or cfg.sample_rate
    if any(v is None for v in track.log_f0):
        track = (interpolate_unvoiced(track) if default_log_f0 is None
                 else interpolate_unvoiced(track, default_log_f0))
    log_f0 = np.asarray(track.log_f0, dtype=np.float64)
    energy = np.asarray(track.energy, dtype=np.float64)
    n_frames = track.n_frames

    phones = intervals.phones()
    if not phones:
        raise CoverageError("alignment holds no phones")
    symbols, durations, pitch, energies = [], [], [], []
    for interval in phones:
        start = frame_index(interval.start, sample_rate, cfg.hop)
        end = frame_index(interval.end, sample_rate, cfg.hop)
        if end > n_frames or start >= n_frames:
            raise CoverageError(
                f"{interval.phoneme} ends at frame {end} but the track has {n_frames} frames")
        duration = max(1, end - start)
        frames = slice(start, min(start + duration, n_frames))
        symbols.append(interval.phoneme)
        durations.append(duration)
        pitch.append(float(np.mean(log_f0[frames])))
        energies.append(float(np.mean(energy[frames])))

    word_lengths = None
    if intervals.words:
        word_lengths = _word_lengths(phones, intervals.words)
    return AlignedUtterance.build(symbols, durations, pitch, energies, word_lengths)


def extract_utterance(wave, intervals, cfg=MelConfig(), tracker=TrackerConfig()):
    """
    Full source-side extraction: frame track, interpolation, aggregation.

    Args:
        wave: WaveBuffer
        intervals: PhoneIntervals for the same audio
        cfg: MelConfig
        tracker: TrackerConfig

    Returns:
        AlignedUtterance: phoneme-level duration, log-F0 and energy
    """
    track = extract_track(wave, cfg, tracker)
    return aggregate(track, intervals, cfg, wave.sample_rate, tracker.default_log_f0)
