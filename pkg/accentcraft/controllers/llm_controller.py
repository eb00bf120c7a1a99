"""
LLM edit controller.

Validates editor responses against the alignment-preserving edit rules,
re-asks with failure feedback and falls back to the unmodified source once
the retry budget is spent.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Tuple

from accentcraft.config import MAX_RETRIES, WORKERS
from accentcraft.controllers.edit_controller import apply_script, script_readings
from accentcraft.controllers.prompt_builder import TARGET_TAG, build_prompt
from accentcraft.errors import (AccentCraftError, AlignmentError, InvariantViolation,
                                SequenceSyntaxError, UnknownPhoneme)
from accentcraft.models.edit_script import (Delete, EditScript, Insert, Merge,
                                            Split, Substitute)
from accentcraft.models.utterance import DECIMALS, AlignedUtterance, parse_sequence

logger = logging.getLogger(__name__)

PROSODY_TOLERANCE = 1e-6
# Structural positions hold derived values the editor can only write rounded
STRUCTURAL_TOLERANCE = PROSODY_TOLERANCE + 0.5 * 10 ** -DECIMALS

PARSE_FAIL = "ParseFail"
INVENTORY_FAIL = "InventoryFail"
ALIGNMENT_FAIL = "AlignmentFail"
PROSODY_TAMPER_FAIL = "ProsodyTamperFail"
STRUCTURAL_RULE_FAIL = "StructuralRuleFail"
FAILURE_KINDS = (PARSE_FAIL, INVENTORY_FAIL, ALIGNMENT_FAIL,
                 PROSODY_TAMPER_FAIL, STRUCTURAL_RULE_FAIL)


@dataclass(frozen=True)
class ValidationFailure:
    """First violated check of a rejected response."""

    kind: str
    index: Optional[int]
    message: str

    def __post_init__(self):
        if self.kind not in FAILURE_KINDS:
            raise ValueError(f"unknown validation failure kind {self.kind!r}")

    def describe(self):
        where = f" at position {self.index}" if self.index is not None else ""
        return f"{self.kind}{where}: {self.message}"


@dataclass(frozen=True)
class EditResponse:
    edited: AlignedUtterance
    rationale_lines: Tuple[str, ...]
    attempts_used: int
    fallback: bool
    script: EditScript = EditScript()


@dataclass(frozen=True)
class BatchOutcome:
    """Result of one utterance in a batch: a response or the error that stopped it."""

    response: Optional[EditResponse]
    error: Optional[Exception] = None

    @property
    def ok(self):
        return self.error is None


def _split_response(text):
    target, rationale = None, []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            rationale.append(line)
        elif line.startswith(TARGET_TAG):
            if target is not None:
                return ValidationFailure(PARSE_FAIL, None, "more than one TARGET line")
            target = line[len(TARGET_TAG):].strip()
        else:
            return ValidationFailure(PARSE_FAIL, None,
                                     f"line {number} is neither TARGET nor a '#' rationale")
    if target is None:
        return ValidationFailure(PARSE_FAIL, None, "no TARGET line")
    return target, tuple(rationale)


def _position_origins(length, script):
    """Mark each output position as copied (True) or structurally derived (False)."""
    copied = [True] * length
    for op in script.ops:
        i = op.index
        if isinstance(op, Delete):
            del copied[i]
        elif isinstance(op, Insert):
            copied.insert(i, False)
        elif isinstance(op, Split):
            copied[i:i + 1] = [False, False]
        elif isinstance(op, Merge):
            copied[i:i + 2] = [False]
        elif not isinstance(op, Substitute):
            raise InvariantViolation(f"unknown edit operation {op!r}")
    return copied


def _position_failure(target, expected, i, kind, tolerance):
    if target.durations[i] != expected.durations[i]:
        return ValidationFailure(kind, i, f"duration {target.durations[i]} "
                                          f"should be {expected.durations[i]}")
    for name, actual, wanted in (("pitch", target.pitch[i], expected.pitch[i]),
                                 ("energy", target.energy[i], expected.energy[i])):
        if abs(actual - wanted) > tolerance:
            return ValidationFailure(kind, i, f"{name} {actual} should be {wanted:.{DECIMALS}f}")
    return None


def _check_prosody(target, expected, copied):
    # copied positions are checked before any derived one
    for i in (i for i, is_copy in enumerate(copied) if is_copy):
        failure = _position_failure(target, expected, i, PROSODY_TAMPER_FAIL,
                                    PROSODY_TOLERANCE)
        if failure is not None:
            return failure
    for i in (i for i, is_copy in enumerate(copied) if not is_copy):
        failure = _position_failure(target, expected, i, STRUCTURAL_RULE_FAIL,
                                    STRUCTURAL_TOLERANCE)
        if failure is not None:
            return failure
    return None


def _check_reading(source, target, script):
    try:
        expected = apply_script(source.rounded(), script)
        copied = _position_origins(len(source), script)
    except (AccentCraftError, IndexError) as e:
        return ValidationFailure(STRUCTURAL_RULE_FAIL, None, str(e))
    return _check_prosody(target, expected, copied)


def validate_response(source, response_text):
    """
    Check an editor response against the source utterance.

    The TARGET line must parse, use only inventory symbols and keep the
    alignment invariant. Its phonemes are diffed against the source into an
    edit script; positions kept or substituted must carry the source d/p/e,
    and positions produced by insert, split or merge must follow the
    apply_script prosody rules. Copied positions are checked before derived
    ones. When the minimal script fails, alternate readings that express a
    kept symbol next to a deletion as a Merge, or next to an insertion as a
    Split, are tried; the first reading that passes is accepted. Prosody is
    compared with the source as rendered in the prompt (rounded to the
    serialization precision).

    Args:
        source: Valid AlignedUtterance that was edited
        response_text: Raw editor reply

    Returns:
        EditResponse or ValidationFailure: the accepted edit (with exact source
        prosody carried through the recovered script) or the first violation
        of the minimal script
    """
    split = _split_response(response_text)
    if isinstance(split, ValidationFailure):
        return split
    target_line, rationale = split

    try:
        target = parse_sequence(target_line)
    except UnknownPhoneme as e:
        return ValidationFailure(INVENTORY_FAIL, e.index, str(e))
    except SequenceSyntaxError as e:
        return ValidationFailure(PARSE_FAIL, None, str(e))
    except (AlignmentError, InvariantViolation) as e:
        return ValidationFailure(ALIGNMENT_FAIL, None, str(e))

    first_failure = None
    for script in script_readings(source, target.phonemes, "llm"):
        failure = _check_reading(source, target, script)
        if failure is None:
            return EditResponse(apply_script(source, script), rationale, 1, False, script)
        if first_failure is None:
            first_failure = failure
    return first_failure


def feedback_prompt(prompt, failure):
    """Prompt for a retry: the original prompt plus why the last reply was rejected."""
    return (f"{prompt}\nYour previous reply was rejected ({failure.describe()}). "
            f"Correct it and reply again in the required format.\n")


def edit_with_llm(source, spec, backend, max_retries=MAX_RETRIES):
    """
    Edit one utterance with the backend, retrying on invalid replies.

    Args:
        source: Valid AlignedUtterance (the query of spec)
        spec: PromptSpec
        backend: Object with complete(prompt) -> str
        max_retries: Extra attempts after the first invalid reply

    Returns:
        EditResponse: the validated edit, or the unmodified source with
        fallback=True once max_retries + 1 attempts have failed

    Raises:
        BackendError: if the backend fails at the transport level
    """
    if max_retries < 0:
        raise ValueError(f"max_retries must be >= 0, got {max_retries}")
    source.validate()
    base = build_prompt(spec)
    prompt = base
    attempts = max_retries + 1
    for attempt in range(1, attempts + 1):
        result = validate_response(source, backend.complete(prompt))
        if isinstance(result, EditResponse):
            return EditResponse(result.edited, result.rationale_lines, attempt, False, result.script)
        logger.warning("attempt %d/%d rejected: %s", attempt, attempts, result.describe())
        prompt = feedback_prompt(base, result)
    logger.warning("falling back to the unmodified source after %d attempts", attempts)
    return EditResponse(source, (), attempts, True, EditScript((), "llm"))


def edit_batch(sources, spec_factory, backend, max_retries=MAX_RETRIES, workers=WORKERS):
    """
    Run edit_with_llm over many utterances with a bounded thread pool.

    Args:
        sources: List of AlignedUtterance
        spec_factory: Callable building the PromptSpec for one source
        backend: Shared editor backend
        max_retries: Retry budget per utterance
        workers: Maximum concurrent backend calls

    Returns:
        list: BatchOutcome per source, in input order
    """
    def edit_one(item):
        index, source = item
        try:
            return BatchOutcome(edit_with_llm(source, spec_factory(source), backend, max_retries))
        except AccentCraftError as e:
            logger.error("utterance %d failed: %s", index, e)
            return BatchOutcome(None, e)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(edit_one, enumerate(sources)))
