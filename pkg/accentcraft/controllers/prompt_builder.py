"""
In-context example ranking and editing prompt rendering.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from accentcraft.controllers.edit_controller import change_rate
from accentcraft.errors import InsufficientCandidates, SequenceSyntaxError
from accentcraft.models.utterance import AlignedUtterance, parse_sequence, serialize_sequence

logger = logging.getLogger(__name__)

SOURCE_TAG = "SOURCE:"
TARGET_TAG = "TARGET:"

OPERATIONS_TEXT = """\
You edit ARPAbet phoneme sequences so that they reflect how a {accent} English speaker
would pronounce them. Each sequence line has the form

    PHONEMES | d:DURATIONS | p:PITCH | e:ENERGY

with exactly one duration (frames), pitch (log-F0) and energy value per phoneme.

Allowed edit operations:
- substitute one phoneme for another (keep its d, p and e unchanged)
- delete a phoneme (drop its d, p and e)
- insert a phoneme (copy p and e from the phoneme to its left, or to its right at the
  start; its duration is the rounded mean of the neighbouring durations)
- split one phoneme into two (halve its duration, floor then ceiling, and copy its p and e
  to both halves)
- merge two adjacent phonemes into one (sum the durations and take duration-weighted
  means of p and e)

Constraints:
- use only ARPAbet symbols; vowels carry a stress digit 0, 1 or 2, consonants carry none
- the d, p and e fields must have exactly one value per phoneme
- durations are whole frames of at least 1
- do not change the prosody of phonemes you do not edit; do not reshape the prosody
  toward the accent"""

REASONING_TEXT = """\
Reason explicitly about each phoneme-level change you propose: for every change, write one
rationale line starting with "#" that names the position, the original and the new phoneme,
and the accent feature it reflects."""

RATE_TEXT = """\
Target change rate {rate:.4f}: about {rate:.0%} of the source phonemes change in the
examples (0 when there are none). Approximately match this level of phoneme substitution.
You are free to deviate when required to satisfy alignment and validity constraints."""

REQUEST_TEXT = """\
Reply with exactly one line starting with "TARGET:" holding the edited sequence in the
same format, followed by your "#" rationale lines. Do not write anything else."""


@dataclass(frozen=True)
class IclExample:
    """A source utterance paired with its target-accent realization."""

    source: AlignedUtterance
    target: AlignedUtterance
    pitch_ratio: float

    @classmethod
    def from_pair(cls, source, target):
        """
        Build an example and compute its pitch variability ratio.

        The ratio is the population std of the target's phoneme-level pitch
        over that of the source. A flat source contour yields ratio 0.

        Args:
            source: Source AlignedUtterance
            target: Target-accent AlignedUtterance

        Returns:
            IclExample: The example
        """
        source.validate()
        target.validate()
        source_std = float(np.std(source.pitch))
        if source_std == 0.0:
            logger.warning("source pitch has zero variance; ranking example last (ratio 0)")
            return cls(source, target, 0.0)
        return cls(source, target, float(np.std(target.pitch)) / source_std)

    def change_rate(self):
        return change_rate(self.source, self.target)


@dataclass(frozen=True)
class PromptSpec:
    examples: Tuple[IclExample, ...]
    query: AlignedUtterance
    target_change_rate: float
    accent_label: str
    instructions: str


def select_icl_examples(candidates, k):
    """
    Pick the k examples whose targets show the most pitch variability.

    Candidates are ordered by pitch_ratio descending; equal ratios keep
    their original order.

    Args:
        candidates: List of IclExample
        k: Number of examples (0 allowed)

    Returns:
        list: The selected examples in rank order

    Raises:
        InsufficientCandidates: if k exceeds the number of candidates
    """
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if k > len(candidates):
        raise InsufficientCandidates(f"requested {k} examples but only {len(candidates)} exist")
    ranked = sorted(range(len(candidates)), key=lambda i: (-candidates[i].pitch_ratio, i))
    return [candidates[i] for i in ranked[:k]]


def render_instructions(accent_label, target_change_rate):
    return "\n\n".join([OPERATIONS_TEXT.format(accent=accent_label), REASONING_TEXT,
                        RATE_TEXT.format(rate=target_change_rate)])


def make_prompt_spec(examples, query, accent_label):
    """
    Assemble a prompt specification.

    The target change rate is the mean change rate of the examples, 0 when
    there are none.

    Args:
        examples: Ordered IclExample list
        query: AlignedUtterance to edit
        accent_label: Accent name used in the instructions

    Returns:
        PromptSpec: The specification
    """
    examples = tuple(examples)
    rate = float(np.mean([ex.change_rate() for ex in examples])) if examples else 0.0
    return PromptSpec(examples, query.validate(), rate, accent_label,
                      render_instructions(accent_label, rate))


def build_prompt(spec):
    """
    Render the editing prompt.

    Args:
        spec: PromptSpec

    Returns:
        str: Prompt text; identical specs render identically
    """
    lines = [spec.instructions, ""]
    for number, example in enumerate(spec.examples, start=1):
        lines.append(f"EXAMPLE {number}")
        lines.append(f"{SOURCE_TAG} {serialize_sequence(example.source, compact=True)}")
        lines.append(f"{TARGET_TAG} {serialize_sequence(example.target, compact=True)}")
        lines.append("")
    lines.append("QUERY")
    lines.append(f"{SOURCE_TAG} {serialize_sequence(spec.query, compact=True)}")
    lines.append("")
    lines.append(REQUEST_TEXT)
    return "\n".join(lines) + "\n"


def query_line(prompt):
    """The serialized query sequence of a rendered prompt (its last SOURCE line)."""
    sources = [line[len(SOURCE_TAG):].strip() for line in prompt.splitlines()
               if line.startswith(SOURCE_TAG)]
    if not sources:
        raise SequenceSyntaxError("prompt holds no SOURCE line")
    return sources[-1]


def read_icl_examples(path):
    """
    Read example pairs from a file of alternating SOURCE/TARGET lines.

    Args:
        path: Path to the example file; blank and ``#`` lines are ignored

    Returns:
        list: IclExample per pair, in file order
    """
    examples, pending = [], None
    with open(path, "r", encoding="utf-8") as f:
        for number, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith(SOURCE_TAG) and pending is None:
                pending = parse_sequence(line[len(SOURCE_TAG):])
            elif line.startswith(TARGET_TAG) and pending is not None:
                examples.append(IclExample.from_pair(pending, parse_sequence(line[len(TARGET_TAG):])))
                pending = None
            else:
                raise SequenceSyntaxError(f"{path}:{number}: expected a "
                                          f"{TARGET_TAG if pending else SOURCE_TAG} line")
    if pending is not None:
        raise SequenceSyntaxError(f"{path}: SOURCE line without TARGET at end of file")
    return examples
