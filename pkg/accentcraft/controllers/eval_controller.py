"""
Evaluation metrics: word error rate, embedding-centroid accent similarity
and run-level aggregation.
"""

import logging
import re

import numpy as np

from accentcraft.controllers.alignment import edit_distance, error_counts
from accentcraft.errors import (DimensionMismatch, EmptyInput, EmptyReference,
                                ZeroNormEmbedding)
from accentcraft.models.evaluation import RunAggregate, Transcript

logger = logging.getLogger(__name__)

_STRIP_PATTERN = re.compile(r"[^a-z0-9'\s]")


def normalize_text(raw):
    """
    Normalize raw text for scoring.

    Lowercases, drops everything except a-z, 0-9, apostrophes and
    whitespace, and splits on whitespace.

    Returns:
        Transcript: The normalized tokens (possibly empty)
    """
    return Transcript(tuple(_STRIP_PATTERN.sub("", raw.lower()).split()))


def _words(transcript):
    return list(transcript.words) if isinstance(transcript, Transcript) else list(transcript)


def wer(reference, hypothesis):
    """
    Word error rate (S + D + I) / len(reference).

    Args:
        reference: Transcript or token list
        hypothesis: Transcript or token list

    Returns:
        float: The error rate; may exceed 1

    Raises:
        EmptyReference: if the reference has no words
    """
    ref, hyp = _words(reference), _words(hypothesis)
    if not ref:
        raise EmptyReference("WER is undefined for an empty reference")
    return edit_distance(ref, hyp) / len(ref)


def corpus_wer(pairs):
    """
    Total word errors over total reference words.

    Args:
        pairs: Iterable of (reference, hypothesis)

    Returns:
        float: The corpus-level error rate
    """
    errors = words = 0
    for reference, hypothesis in pairs:
        ref = _words(reference)
        if not ref:
            raise EmptyReference("WER is undefined for an empty reference")
        errors += sum(error_counts(ref, _words(hypothesis)))
        words += len(ref)
    if words == 0:
        raise EmptyInput("no transcript pairs")
    return errors / words


def _unit_rows(embeddings, dimension):
    rows = []
    for embedding in embeddings:
        if embedding.dimension != dimension:
            raise DimensionMismatch(f"{embedding.source_id or 'embedding'} has dimension "
                                    f"{embedding.dimension}, expected {dimension}")
        norm = np.linalg.norm(embedding.values)
        if norm == 0.0:
            raise ZeroNormEmbedding(f"{embedding.source_id or 'embedding'} has zero norm")
        rows.append(embedding.values / norm)
    return np.vstack(rows)


def speaker_centroids(real_by_speaker, dimension=None):
    """
    Mean of each speaker's unit-normalized embeddings.

    Returns:
        dict: speaker -> centroid vector, in sorted speaker order
    """
    if not real_by_speaker:
        raise EmptyInput("no real speakers")
    if dimension is None:
        first = next(iter(real_by_speaker.values()))
        if not first:
            raise EmptyInput("speaker without embeddings")
        dimension = first[0].dimension
    centroids = {}
    for speaker in sorted(real_by_speaker):
        embeddings = real_by_speaker[speaker]
        if not embeddings:
            raise EmptyInput(f"speaker {speaker} has no embeddings")
        centroids[speaker] = _unit_rows(embeddings, dimension).mean(axis=0)
    return centroids


def accent_similarity(synth, real_by_speaker):
    """
    Mean cosine similarity of synthesized embeddings to real speaker centroids.

    Centroids average each speaker's unit-normalized embeddings; every
    synthesized embedding is scored by its mean cosine similarity to all
    centroids, uniformly weighted, and the scores are averaged.

    Args:
        synth: List of EmbeddingVector
        real_by_speaker: dict speaker -> list of EmbeddingVector

    Returns:
        float: Similarity in [-1, 1]

    Raises:
        DimensionMismatch: if dimensions differ
        ZeroNormEmbedding: for a zero vector
    """
    if not synth:
        raise EmptyInput("no synthesized embeddings")
    dimension = synth[0].dimension
    centroids = np.vstack(list(speaker_centroids(real_by_speaker, dimension).values()))
    norms = np.linalg.norm(centroids, axis=1)
    if np.any(norms == 0.0):
        raise ZeroNormEmbedding("a speaker centroid has zero norm")
    centroids = centroids / norms[:, None]
    cosines = _unit_rows(synth, dimension) @ centroids.T
    return float(np.clip(cosines.mean(axis=1).mean(), -1.0, 1.0))


def aggregate_runs(values):
    """
    Population mean and std of per-run values.

    Raises:
        EmptyInput: for no values
    """
    data = np.asarray(list(values), dtype=np.float64)
    if data.size == 0:
        raise EmptyInput("cannot aggregate zero runs")
    return RunAggregate(float(data.mean()), float(data.std()), int(data.size))
