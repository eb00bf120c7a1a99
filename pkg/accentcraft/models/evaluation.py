"""
Evaluation data types plus readers and writers for evaluation inputs and
score tables.
"""

import csv
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from accentcraft.errors import DimensionMismatch, InvariantViolation, MalformedRecord

SCORE_COLUMNS = ("condition", "speaker", "metric", "mean", "std", "n_runs")


@dataclass(frozen=True)
class Transcript:
    """Normalized word tokens."""

    words: Tuple[str, ...]

    def __post_init__(self):
        for word in self.words:
            if not word or any(c.isspace() for c in word):
                raise InvariantViolation(f"invalid transcript token {word!r}")

    def __len__(self):
        return len(self.words)


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    values: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise InvariantViolation("an embedding must be a non-empty vector")
        object.__setattr__(self, "values", values)

    @property
    def dimension(self):
        return self.values.size


@dataclass(frozen=True)
class RunAggregate:
    """Population mean and standard deviation over runs."""

    mean: float
    std: float
    n_runs: int

    def __post_init__(self):
        if self.n_runs < 1 or self.std < 0:
            raise InvariantViolation("aggregates need n_runs >= 1 and std >= 0")

    def to_dict(self):
        return {"mean": self.mean, "std": self.std, "n_runs": self.n_runs}


@dataclass(frozen=True)
class ScoreRow:
    condition: str
    speaker: str
    metric: str
    aggregate: RunAggregate

    def to_row(self):
        return [self.condition, self.speaker, self.metric,
                f"{self.aggregate.mean:.6f}", f"{self.aggregate.std:.6f}",
                str(self.aggregate.n_runs)]


def read_embeddings(path):
    """
    Read ``utt_id v1 v2 ...`` lines.

    The dimension is taken from the first line; later lines must match.

    Returns:
        list: EmbeddingVector per line, in file order

    Raises:
        DimensionMismatch: if a line has a different dimension
        MalformedRecord: for unparsable values
    """
    embeddings, dimension = [], None
    with open(path, "r", encoding="utf-8") as f:
        for number, raw in enumerate(f, start=1):
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            try:
                values = [float(v) for v in parts[1:]]
            except ValueError as e:
                raise MalformedRecord(f"{path}: {e}", number) from e
            if not values:
                raise MalformedRecord(f"{path}: {parts[0]} has no values", number)
            if dimension is None:
                dimension = len(values)
            elif len(values) != dimension:
                raise DimensionMismatch(f"{path}:{number}: {parts[0]} has dimension "
                                        f"{len(values)}, expected {dimension}")
            embeddings.append(EmbeddingVector(values, parts[0]))
    return embeddings


def read_transcripts(path):
    """
    Read ``utt_id<TAB>raw text`` lines.

    Returns:
        dict: utt_id -> raw text, in file order
    """
    transcripts = {}
    with open(path, "r", encoding="utf-8") as f:
        for number, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            utt_id, sep, text = line.partition("\t")
            if not sep:
                raise MalformedRecord(f"{path}: expected utt_id<TAB>text", number)
            if utt_id in transcripts:
                raise MalformedRecord(f"{path}: duplicate utterance {utt_id}", number)
            transcripts[utt_id] = text
    return transcripts


def write_score_csv(path, rows):
    """
    Write aggregated scores with columns condition, speaker, metric, mean, std, n_runs.

    Args:
        path: Destination path
        rows: Iterable of ScoreRow
    """
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SCORE_COLUMNS)
        for row in rows:
            writer.writerow(row.to_row())
