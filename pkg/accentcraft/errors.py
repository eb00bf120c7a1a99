"""
Exception hierarchy for AccentCraft.
All errors raised by the package derive from AccentCraftError.
"""


class AccentCraftError(Exception):
    """Base class for all AccentCraft errors."""


# Sequence model

class UnknownPhoneme(AccentCraftError):
    """A token is not an ARPAbet symbol or carries an illegal stress mark."""

    def __init__(self, token, index=None, reason=""):
        self.token = token
        self.index = index
        self.reason = reason
        where = f" at position {index}" if index is not None else ""
        detail = f" ({reason})" if reason else ""
        super().__init__(f"unknown phoneme {token!r}{where}{detail}")


class InvariantViolation(AccentCraftError):
    """A value breaks a model invariant."""


class AlignmentError(InvariantViolation):
    """Duration, pitch and energy vectors disagree with the phoneme count."""


class SequenceSyntaxError(AccentCraftError):
    """A sequence line is missing a field or holds a malformed number."""


# Configuration and audio

class ConfigError(AccentCraftError):
    """Invalid configuration value or unknown configuration key."""


class CoverageError(AccentCraftError):
    """An alignment interval extends beyond the available frames."""


class EmptyPool(AccentCraftError):
    """Not enough utterances to sample speaker statistics from."""


class AlignmentFileError(AccentCraftError):
    """An alignment file could not be read."""


# Editing

class EditIndexError(AccentCraftError, IndexError):
    """An edit operation refers to a position outside the sequence."""


class InsufficientCandidates(AccentCraftError):
    """Fewer in-context candidates than requested."""


class BackendError(AccentCraftError):
    """The editor backend failed at the transport or authentication level."""


# Evaluation

class EmptyReference(AccentCraftError):
    """WER is undefined for an empty reference transcript."""


class DimensionMismatch(AccentCraftError):
    """Embeddings of different dimensions were mixed."""


class ZeroNormEmbedding(AccentCraftError):
    """An embedding vector has zero norm."""


class EmptyInput(AccentCraftError):
    """An aggregate was requested over no values."""


# Harness

class ManifestError(AccentCraftError):
    """A manifest entry is malformed or breaks a manifest invariant."""


class PoolTooSmall(AccentCraftError):
    """The reference pool holds fewer utterances than requested."""


class InsufficientData(AccentCraftError):
    """The manifest lacks the utterances a sweep needs."""


class PlanFileError(AccentCraftError):
    """A plan file is unreadable or has the wrong signature."""


class MalformedRecord(AccentCraftError):
    """A score record could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class UnknownJob(MalformedRecord):
    """A score record names a job that is not in the plan."""


class DuplicateRecord(MalformedRecord):
    """A (job_id, metric) pair was already ingested."""
