"""
Aligned phoneme-prosody data model.

An utterance is a phoneme sequence with one duration (frames), pitch
(log-F0) and energy value per phoneme. The canonical text form is

    W IH1 L | d:10,7,7 | p:5.3000,5.3000,5.2000 | e:0.8000,3.6000,3.1000

with an optional trailing ``| w:`` field holding per-word phoneme counts.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

from accentcraft.errors import (AccentCraftError, AlignmentError, InvariantViolation,
                                SequenceSyntaxError)
from accentcraft.models.phonemes import PhonemeSymbol, validate_inventory

DECIMALS = 4
FIELD_ORDER = ("d", "p", "e", "w")


@dataclass(frozen=True)
class AlignedUtterance:
    """Phoneme sequence with aligned duration, pitch and energy vectors."""

    phonemes: Tuple[PhonemeSymbol, ...]
    durations: Tuple[int, ...]
    pitch: Tuple[float, ...]
    energy: Tuple[float, ...]
    word_lengths: Optional[Tuple[int, ...]] = None

    @classmethod
    def build(cls, phonemes, durations, pitch, energy, word_lengths=None):
        """
        Create a validated utterance from any sequences.

        Returns:
            AlignedUtterance: The new utterance

        Raises:
            AlignmentError: if the vector lengths differ
            InvariantViolation: for any other broken invariant
        """
        utterance = cls(
            tuple(phonemes),
            tuple(int(d) for d in durations),
            tuple(float(p) for p in pitch),
            tuple(float(e) for e in energy),
            None if word_lengths is None else tuple(int(w) for w in word_lengths),
        )
        return utterance.validate()

    def __len__(self):
        return len(self.phonemes)

    def validate(self):
        """
        Check every utterance invariant.

        Returns:
            AlignedUtterance: self, for chaining

        Raises:
            AlignmentError: if d/p/e lengths differ from the phoneme count
            InvariantViolation: for empty sequences, bad values or word counts
        """
        n = len(self.phonemes)
        lengths = (len(self.durations), len(self.pitch), len(self.energy))
        if any(length != n for length in lengths):
            raise AlignmentError(
                f"{n} phonemes but d/p/e lengths {lengths[0]}/{lengths[1]}/{lengths[2]}")
        if n == 0:
            raise InvariantViolation("utterance has no phonemes")
        for i, phoneme in enumerate(self.phonemes):
            if not isinstance(phoneme, PhonemeSymbol):
                raise InvariantViolation(f"position {i} is not a phoneme symbol: {phoneme!r}")
        for i, d in enumerate(self.durations):
            if d < 1:
                raise InvariantViolation(f"duration {d} at position {i} is below one frame")
        for i, p in enumerate(self.pitch):
            if not math.isfinite(p):
                raise InvariantViolation(f"pitch at position {i} is not finite")
        for i, e in enumerate(self.energy):
            if not math.isfinite(e) or e < 0:
                raise InvariantViolation(f"energy {e} at position {i} is not a non-negative number")
        if self.word_lengths is not None:
            if any(w < 1 for w in self.word_lengths):
                raise InvariantViolation("word lengths must be positive")
            if sum(self.word_lengths) != n:
                raise InvariantViolation(
                    f"word lengths sum to {sum(self.word_lengths)}, expected {n}")
        return self

    def symbols(self):
        """Phonemes as their text tokens."""
        return [str(p) for p in self.phonemes]

    def total_frames(self):
        return sum(self.durations)

    def words(self):
        """
        Split the utterance into per-word utterances using word_lengths.

        Returns:
            list: AlignedUtterance per word (the whole utterance if no word lengths)
        """
        if self.word_lengths is None:
            return [self]
        words, start = [], 0
        for length in self.word_lengths:
            end = start + length
            words.append(AlignedUtterance(
                self.phonemes[start:end], self.durations[start:end],
                self.pitch[start:end], self.energy[start:end]))
            start = end
        return words

    def with_prosody(self, pitch=None, energy=None):
        """Copy with replaced pitch and/or energy vectors."""
        return replace(
            self,
            pitch=self.pitch if pitch is None else tuple(float(p) for p in pitch),
            energy=self.energy if energy is None else tuple(float(e) for e in energy),
        )

    def rounded(self, decimals=DECIMALS):
        """Copy with pitch and energy rounded to the serialization precision."""
        return self.with_prosody(
            [round(p, decimals) for p in self.pitch],
            [round(e, decimals) for e in self.energy],
        )

    def to_dict(self):
        """
        Convert the utterance to a dictionary for serialization.

        Returns:
            dict: Utterance data as a dictionary
        """
        data = {
            "phonemes": self.symbols(),
            "durations": list(self.durations),
            "pitch": list(self.pitch),
            "energy": list(self.energy),
        }
        if self.word_lengths is not None:
            data["word_lengths"] = list(self.word_lengths)
        return data

    @classmethod
    def from_dict(cls, data):
        """
        Create an utterance from dictionary data.

        Args:
            data: Dictionary of utterance data

        Returns:
            AlignedUtterance: New validated utterance
        """
        return cls.build(
            validate_inventory(data["phonemes"]),
            data["durations"], data["pitch"], data["energy"],
            data.get("word_lengths"),
        )


def _numbers(key, text, convert):
    items = text.split(",")
    try:
        return [convert(item.strip()) for item in items]
    except ValueError as e:
        raise SequenceSyntaxError(f"malformed number in field {key!r}: {e}") from e


def _integer(text):
    if not text.lstrip("+-").isdigit():
        raise ValueError(f"{text!r} is not an integer")
    return int(text)


def parse_sequence(line):
    """
    Parse a canonical sequence line.

    Args:
        line: Text such as ``W IH1 L | d:10,7,7 | p:5.3,5.3,5.2 | e:0.8,3.6,3.1``

    Returns:
        AlignedUtterance: The parsed, validated utterance

    Raises:
        UnknownPhoneme: for tokens outside the inventory or with illegal stress
        SequenceSyntaxError: for missing fields or malformed numbers
        AlignmentError: if field lengths disagree with the phoneme count
    """
    if not line or not line.strip():
        raise SequenceSyntaxError("empty sequence line")
    parts = [part.strip() for part in line.strip().split("|")]
    tokens = parts[0].split()
    if not tokens:
        raise SequenceSyntaxError("missing phoneme field")
    phonemes = validate_inventory(tokens)

    values = {}
    for part in parts[1:]:
        key, sep, body = part.partition(":")
        key = key.strip()
        if not sep or key not in FIELD_ORDER:
            raise SequenceSyntaxError(f"unrecognised field {part!r}")
        if key in values:
            raise SequenceSyntaxError(f"duplicate field {key!r}")
        if not body.strip():
            raise SequenceSyntaxError(f"empty field {key!r}")
        convert = float if key in ("p", "e") else _integer
        values[key] = _numbers(key, body, convert)

    missing = [key for key in ("d", "p", "e") if key not in values]
    if missing:
        raise SequenceSyntaxError(f"missing field(s): {', '.join(missing)}")
    return AlignedUtterance.build(phonemes, values["d"], values["p"], values["e"],
                                  values.get("w"))


def _decimal(value, compact):
    text = f"{value:.{DECIMALS}f}"
    if compact and "." in text:
        text = text.rstrip("0")
        if text.endswith("."):
            text += "0"
    return text


def serialize_sequence(utterance, compact=False):
    """
    Render the canonical single-line form of an utterance.

    The compact form used in prompts drops trailing zeros of the rounded
    values (5.3000 becomes 5.3); it parses to the same utterance.

    Args:
        utterance: AlignedUtterance to serialize
        compact: Trim trailing fractional zeros

    Returns:
        str: The canonical line

    Raises:
        InvariantViolation: if the utterance is malformed
    """
    utterance.validate()
    fields = [
        " ".join(utterance.symbols()),
        "d:" + ",".join(str(d) for d in utterance.durations),
        "p:" + ",".join(_decimal(p, compact) for p in utterance.pitch),
        "e:" + ",".join(_decimal(e, compact) for e in utterance.energy),
    ]
    if utterance.word_lengths is not None:
        fields.append("w:" + ",".join(str(w) for w in utterance.word_lengths))
    return " | ".join(fields)


def iter_sequence_lines(path):
    """
    Yield the unparsed records of a sequence file.

    Each non-comment line is either a bare sequence line or
    ``utt_id<TAB>sequence``. Lines starting with ``#`` and blank lines are skipped.

    Yields:
        tuple: (line number, utt_id or None, sequence text)
    """
    with open(path, "r", encoding="utf-8") as f:
        for number, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            utt_id, sep, body = line.partition("\t")
            if not sep:
                utt_id, body = None, line
            yield number, utt_id, body


def read_utterance_file(path):
    """
    Read a file of sequence lines, failing on the first bad one.

    Args:
        path: Path to the UTF-8 file

    Returns:
        list: (utt_id or None, AlignedUtterance) tuples in file order

    Raises:
        SequenceSyntaxError: naming the line of the first record that does not parse
    """
    records = []
    for number, utt_id, body in iter_sequence_lines(path):
        try:
            records.append((utt_id, parse_sequence(body)))
        except AccentCraftError as e:
            raise SequenceSyntaxError(f"{path} line {number}: {e}") from e
    return records


def write_utterance_file(path, records):
    """
    Write (utt_id, utterance) records as canonical lines.

    Args:
        path: Destination path
        records: Iterable of (utt_id or None, AlignedUtterance)
    """
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for utt_id, utterance in records:
            line = serialize_sequence(utterance)
            f.write(line + "\n" if utt_id is None else f"{utt_id}\t{line}\n")
