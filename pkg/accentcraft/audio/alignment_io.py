"""
Forced-alignment ingestion.

Reads the "phones" (and, when present, "words") interval tiers of an
MFA-style TextGrid, or a plain three-column table of
``phoneme<TAB>start_sec<TAB>end_sec`` lines.
"""

import logging
import os
from dataclasses import dataclass
from typing import Optional, Tuple

import textgrids

from accentcraft.errors import AlignmentFileError, InvariantViolation, UnknownPhoneme
from accentcraft.models.phonemes import PhonemeSymbol, parse_phoneme

logger = logging.getLogger(__name__)

SILENCE_LABELS = frozenset({"", "sil", "sp", "spn", "<eps>"})


@dataclass(frozen=True)
class PhoneInterval:
    """One aligned segment; phoneme is None for silence."""

    phoneme: Optional[PhonemeSymbol]
    start: float
    end: float

    @property
    def is_silence(self):
        return self.phoneme is None


@dataclass(frozen=True)
class WordInterval:
    word: str
    start: float
    end: float


@dataclass(frozen=True)
class PhoneIntervals:
    """Sorted, non-overlapping phone intervals with optional word intervals."""

    intervals: Tuple[PhoneInterval, ...]
    words: Optional[Tuple[WordInterval, ...]] = None

    def __post_init__(self):
        previous_end = None
        for i, interval in enumerate(self.intervals):
            if not interval.start < interval.end:
                raise InvariantViolation(
                    f"interval {i} has start {interval.start} >= end {interval.end}")
            if previous_end is not None and interval.start < previous_end - 1e-9:
                raise InvariantViolation(f"interval {i} overlaps or is out of order")
            previous_end = interval.end

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    def phones(self):
        """Non-silence intervals in order."""
        return [interval for interval in self.intervals if not interval.is_silence]


def _phone_from_label(label, position):
    text = label.strip()
    if text.lower() in SILENCE_LABELS:
        return None
    try:
        return parse_phoneme(text.upper(), position)
    except UnknownPhoneme as e:
        raise AlignmentFileError(f"phone tier entry {position}: {e}") from e


def _find_tier(grid, suffix):
    for name in grid:
        if name == suffix or name.endswith(suffix):
            return grid[name]
    return None


def read_textgrid(path):
    """
    Read phone (and word) intervals from a TextGrid.

    Args:
        path: Path to the TextGrid file

    Returns:
        PhoneIntervals: The aligned phones; words is set when a words tier exists

    Raises:
        AlignmentFileError: if the file has no phones tier or holds unknown labels
    """
    try:
        grid = textgrids.TextGrid(str(path))
    except Exception as e:
        raise AlignmentFileError(f"cannot read TextGrid {path}: {e}") from e
    phone_tier = _find_tier(grid, "phones")
    if phone_tier is None:
        raise AlignmentFileError(f"{path}: no phones tier")
    phones = tuple(
        PhoneInterval(_phone_from_label(str(entry.text), i), float(entry.xmin), float(entry.xmax))
        for i, entry in enumerate(phone_tier)
    )
    word_tier = _find_tier(grid, "words")
    words = None
    if word_tier is not None:
        words = tuple(
            WordInterval(str(entry.text).strip(), float(entry.xmin), float(entry.xmax))
            for entry in word_tier
            if str(entry.text).strip().lower() not in SILENCE_LABELS
        )
    return PhoneIntervals(phones, words)


def read_interval_table(path):
    """
    Read a three-column ``phoneme<TAB>start<TAB>end`` alignment file.

    Args:
        path: Path to the table

    Returns:
        PhoneIntervals: The aligned phones
    """
    intervals = []
    with open(path, "r", encoding="utf-8") as f:
        for number, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            columns = line.split("\t")
            if len(columns) != 3:
                raise AlignmentFileError(f"{path}:{number}: expected 3 tab-separated columns")
            try:
                start, end = float(columns[1]), float(columns[2])
            except ValueError as e:
                raise AlignmentFileError(f"{path}:{number}: bad time value") from e
            intervals.append(PhoneInterval(_phone_from_label(columns[0], len(intervals)), start, end))
    return PhoneIntervals(tuple(intervals))


def read_alignment(path):
    """Read an alignment file, choosing the parser by extension."""
    if os.path.splitext(str(path))[1].lower() == ".textgrid":
        return read_textgrid(path)
    return read_interval_table(path)
