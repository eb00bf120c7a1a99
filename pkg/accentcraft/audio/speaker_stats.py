"""
Speaker prosody statistics from small, dynamically sampled utterance subsets.
"""

import logging
from dataclasses import dataclass, replace

import numpy as np

from accentcraft.config import DEFAULT_LOG_F0, STATS_MAX_M, STATS_REFRESH_STEPS
from accentcraft.errors import EmptyPool, InvariantViolation

logger = logging.getLogger(__name__)

EPSILON = 1e-8

_STATS_KEYS = ("pitch_mean", "pitch_std", "energy_mean", "energy_std", "n_utterances_used")


@dataclass(frozen=True)
class SpeakerStats:
    """Pitch (log-F0) and energy moments of a speaker's sampled utterances."""

    pitch_mean: float
    pitch_std: float
    energy_mean: float
    energy_std: float
    n_utterances_used: int
    pitch_fallback: bool = False

    def __post_init__(self):
        if self.pitch_std < 0 or self.energy_std < 0:
            raise InvariantViolation("standard deviations must be non-negative")
        if self.n_utterances_used < 1:
            raise InvariantViolation("statistics need at least one utterance")

    def to_dict(self):
        return {
            "pitch_mean": self.pitch_mean,
            "pitch_std": self.pitch_std,
            "energy_mean": self.energy_mean,
            "energy_std": self.energy_std,
            "n_utterances_used": self.n_utterances_used,
            "pitch_fallback": self.pitch_fallback,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            float(data["pitch_mean"]), float(data["pitch_std"]),
            float(data["energy_mean"]), float(data["energy_std"]),
            int(data["n_utterances_used"]),
            str(data.get("pitch_fallback", False)).lower() == "true",
        )


def _pooled_stats(tracks):
    pitch = np.array([v for track in tracks for v in track.voiced_values()], dtype=np.float64)
    energy = np.array([e for track in tracks for e in track.energy], dtype=np.float64)
    if energy.size == 0:
        raise EmptyPool("sampled utterances hold no frames")
    fallback = pitch.size == 0
    if fallback:
        logger.warning("no voiced frames in %d sampled utterances; pitch std set to 0",
                       len(tracks))
        pitch_mean, pitch_std = DEFAULT_LOG_F0, 0.0
    else:
        pitch_mean, pitch_std = float(pitch.mean()), float(pitch.std())
    return SpeakerStats(pitch_mean, pitch_std, float(energy.mean()), float(energy.std()),
                        len(tracks), fallback)


def sample_speaker_stats(utterances, m, seed):
    """
    Statistics over m utterances sampled without replacement.

    Voiced log-F0 values and all frame energies of the sampled utterances are
    pooled; population mean and standard deviation are returned.

    Args:
        utterances: List of FrameTrack
        m: Number of utterances to sample
        seed: Integer seed

    Returns:
        SpeakerStats: The pooled statistics

    Raises:
        EmptyPool: if m is not in 1..len(utterances)
    """
    if not 1 <= m <= len(utterances):
        raise EmptyPool(f"cannot sample {m} of {len(utterances)} utterances")
    rng = np.random.default_rng(seed)
    chosen = sorted(int(i) for i in rng.choice(len(utterances), size=m, replace=False))
    return _pooled_stats([utterances[i] for i in chosen])


class DynamicStatsSampler:
    """
    Speaker statistics that are resampled every refresh_every steps.

    Within one refresh window the subset size M is drawn uniformly from
    1..min(max_m, n) and the subset itself is drawn without replacement;
    both depend only on (seed, window), never on call order.
    """

    def __init__(self, tracks, seed, max_m=STATS_MAX_M, refresh_every=STATS_REFRESH_STEPS):
        if not tracks:
            raise EmptyPool("no utterances to sample from")
        if refresh_every < 1 or max_m < 1:
            raise ValueError("refresh_every and max_m must be positive")
        self.tracks = list(tracks)
        self.seed = seed
        self.max_m = max_m
        self.refresh_every = refresh_every

    def window(self, step):
        return step // self.refresh_every

    def subset_for_step(self, step):
        """Sorted utterance indices used during the window containing step."""
        rng = np.random.default_rng([self.seed, self.window(step)])
        m = int(rng.integers(1, min(self.max_m, len(self.tracks)) + 1))
        return sorted(int(i) for i in rng.choice(len(self.tracks), size=m, replace=False))

    def stats_for_step(self, step):
        return _pooled_stats([self.tracks[i] for i in self.subset_for_step(step)])

    def mean_embedding(self, embeddings, step):
        """
        Average the speaker embeddings of the same subset.

        Args:
            embeddings: Sequence of vectors aligned with the tracks
            step: Training step

        Returns:
            np.ndarray: The mean embedding
        """
        if len(embeddings) != len(self.tracks):
            raise InvariantViolation("embeddings must align with the sampled tracks")
        subset = self.subset_for_step(step)
        return np.mean(np.asarray([embeddings[i] for i in subset], dtype=np.float64), axis=0)


def normalize(utterance, stats):
    """
    Z-score the phoneme-level pitch and energy of an utterance.

    The result lives in feature space: normalized energy may be negative, so
    it is not revalidated as an AlignedUtterance.

    Returns:
        AlignedUtterance: utterance with normalized pitch and energy
    """
    pitch_scale = max(stats.pitch_std, EPSILON)
    energy_scale = max(stats.energy_std, EPSILON)
    return replace(
        utterance,
        pitch=tuple((p - stats.pitch_mean) / pitch_scale for p in utterance.pitch),
        energy=tuple((e - stats.energy_mean) / energy_scale for e in utterance.energy),
    )


def denormalize(utterance, stats):
    """Inverse of normalize()."""
    pitch_scale = max(stats.pitch_std, EPSILON)
    energy_scale = max(stats.energy_std, EPSILON)
    return replace(
        utterance,
        pitch=tuple(p * pitch_scale + stats.pitch_mean for p in utterance.pitch),
        energy=tuple(e * energy_scale + stats.energy_mean for e in utterance.energy),
    )


def write_stats_cache(path, stats_by_speaker):
    """
    Write per-speaker statistics as key=value records.

    Args:
        path: Destination path
        stats_by_speaker: dict speaker_id -> SpeakerStats
    """
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for speaker in sorted(stats_by_speaker):
            f.write(f"[{speaker}]\n")
            for key, value in stats_by_speaker[speaker].to_dict().items():
                f.write(f"{key}={value!r}\n" if isinstance(value, float) else f"{key}={value}\n")
            f.write("\n")


def read_stats_cache(path):
    """
    Read a stats cache written by write_stats_cache().

    Returns:
        dict: speaker_id -> SpeakerStats
    """
    records, current = {}, None
    with open(path, "r", encoding="utf-8") as f:
        for number, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1]
                records[current] = {}
                continue
            key, sep, value = line.partition("=")
            if current is None or not sep:
                raise InvariantViolation(f"{path}:{number}: malformed stats record")
            records[current][key.strip()] = value.strip()
    result = {}
    for speaker, data in records.items():
        missing = [key for key in _STATS_KEYS if key not in data]
        if missing:
            raise InvariantViolation(f"{path}: speaker {speaker} lacks {', '.join(missing)}")
        result[speaker] = SpeakerStats.from_dict(data)
    return result
