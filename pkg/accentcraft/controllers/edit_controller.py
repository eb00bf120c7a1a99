"""
Constrained edit algebra on aligned utterances.

Applies edit scripts while keeping duration, pitch and energy aligned with
the phoneme sequence, measures phoneme change rates, builds the matched-rate
random substitution baseline and converts target phoneme sequences into
alignment-preserving scripts.
"""

import logging
import math
from itertools import combinations

import numpy as np

from accentcraft.controllers.alignment import edit_distance
from accentcraft.errors import EditIndexError, InvariantViolation
from accentcraft.models.edit_script import (Delete, EditScript, Insert, Merge,
                                            Split, Substitute)
from accentcraft.models.phonemes import INVENTORY
from accentcraft.models.utterance import AlignedUtterance

logger = logging.getLogger(__name__)

# Resampling attempts before giving up on an exact matched rate
MAX_RATE_ATTEMPTS = 1000
# Alternative structural readings tried per diff
MAX_READINGS = 64


def round_half_up(value):
    """Round to the nearest integer, halves upward (0.5 -> 1, 2.5 -> 3)."""
    return int(math.floor(value + 0.5))


def matched_count(rate, length):
    """
    Number of positions the random baseline substitutes.

    rate * length is rounded half up, not to even: a rate of 0.25 over 10
    phonemes substitutes 3 positions, 0.5 over 5 substitutes 3.
    """
    return round_half_up(rate * length)


def apply_script(source, script):
    """
    Apply an edit script to an utterance.

    Substitutions keep d/p/e; deletions drop them; an inserted phoneme copies
    p/e from its left neighbour (right neighbour at position 0) and takes the
    rounded mean of the adjacent durations; a split halves the duration
    (floor/ceil, each at least one frame) and copies p/e; a merge sums the
    durations and takes duration-weighted means of p/e.

    Args:
        source: Valid AlignedUtterance
        script: EditScript applied left to right with live indices

    Returns:
        AlignedUtterance: The edited, validated utterance

    Raises:
        EditIndexError: if an operation index is out of range
        InvariantViolation: if an operation cannot apply (merge at the end)
            or the result is invalid
    """
    source.validate()
    phonemes = list(source.phonemes)
    durations = list(source.durations)
    pitch = list(source.pitch)
    energy = list(source.energy)
    if source.word_lengths is None:
        words = None
    else:
        words = [w for w, length in enumerate(source.word_lengths) for _ in range(length)]

    for step, op in enumerate(script.ops):
        n = len(phonemes)
        i = op.index
        limit = n + 1 if isinstance(op, Insert) else n
        if not 0 <= i < limit:
            raise EditIndexError(f"step {step}: {op.to_text()} out of range for length {n}")

        if isinstance(op, Substitute):
            phonemes[i] = op.new
        elif isinstance(op, Delete):
            for vector in (phonemes, durations, pitch, energy):
                del vector[i]
            if words is not None:
                del words[i]
        elif isinstance(op, Insert):
            if n == 0:
                raise InvariantViolation(f"step {step}: cannot insert into an empty sequence")
            donor = i - 1 if i > 0 else i
            neighbours = [durations[k] for k in (i - 1, i) if 0 <= k < n]
            duration = max(1, round_half_up(sum(neighbours) / len(neighbours)))
            phonemes.insert(i, op.new)
            durations.insert(i, duration)
            pitch.insert(i, pitch[donor])
            energy.insert(i, energy[donor])
            if words is not None:
                words.insert(i, words[donor])
        elif isinstance(op, Split):
            d = durations[i]
            first, second = max(1, d // 2), max(1, d - d // 2)
            phonemes[i:i + 1] = [op.first, op.second]
            durations[i:i + 1] = [first, second]
            pitch[i:i + 1] = [pitch[i], pitch[i]]
            energy[i:i + 1] = [energy[i], energy[i]]
            if words is not None:
                words[i:i + 1] = [words[i], words[i]]
        elif isinstance(op, Merge):
            if i == n - 1:
                raise InvariantViolation(f"step {step}: MERGE at the last position {i}")
            d1, d2 = durations[i], durations[i + 1]
            total = d1 + d2
            phonemes[i:i + 2] = [op.new]
            pitch[i:i + 2] = [(d1 * pitch[i] + d2 * pitch[i + 1]) / total]
            energy[i:i + 2] = [(d1 * energy[i] + d2 * energy[i + 1]) / total]
            durations[i:i + 2] = [total]
            if words is not None:
                words[i:i + 2] = [words[i]]
        else:
            raise InvariantViolation(f"step {step}: unknown edit operation {op!r}")

    word_lengths = None
    if words is not None:
        word_lengths = [sum(1 for w in words if w == word) for word in sorted(set(words))]
    return AlignedUtterance.build(phonemes, durations, pitch, energy, word_lengths)


def change_rate(source, target):
    """
    Phoneme change rate between two utterances.

    Args:
        source: Source AlignedUtterance (non-empty)
        target: Target AlignedUtterance or phoneme list

    Returns:
        float: Levenshtein distance over the source length
    """
    target_phonemes = target.phonemes if isinstance(target, AlignedUtterance) else target
    if len(source.phonemes) == 0:
        raise InvariantViolation("change rate is undefined for an empty source")
    return edit_distance(source.phonemes, target_phonemes) / len(source.phonemes)


def corpus_change_rate(pairs):
    """
    Mean per-utterance change rate over (source, target) pairs.

    Returns:
        float: The mean rate, 0.0 for no pairs
    """
    rates = [change_rate(source, target) for source, target in pairs]
    return float(np.mean(rates)) if rates else 0.0


def random_matched_rate(source, rate, seed):
    """
    Substitute uniformly sampled positions with uniformly sampled phonemes.

    Exactly matched_count(rate, len(source)) distinct positions (rate times
    length rounded half up) are replaced by a
    different base symbol. Vowel replacements inherit the stress of a vowel
    original, else take stress 0. Prosody is untouched.

    Args:
        source: Non-empty AlignedUtterance
        rate: Target change rate in [0, 1]
        seed: Integer seed

    Returns:
        tuple: (edited AlignedUtterance, EditScript with provenance "random")
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"rate {rate} outside [0, 1]")
    source.validate()
    length = len(source)
    n = matched_count(rate, length)
    rng = np.random.default_rng(seed)
    positions = sorted(int(p) for p in rng.choice(length, size=n, replace=False))

    for attempt in range(MAX_RATE_ATTEMPTS):
        ops = []
        for position in positions:
            original = source.phonemes[position]
            choices = [base for base in INVENTORY if base != original.base]
            base = choices[int(rng.integers(len(choices)))]
            ops.append(Substitute(position, original.with_base(base, default_stress=0)))
        script = EditScript(tuple(ops), "random")
        edited = apply_script(source, script)
        # a shifted run can make the Levenshtein distance smaller than n
        if edit_distance(source.phonemes, edited.phonemes) == n:
            if attempt:
                logger.debug("matched-rate draw needed %d resamples", attempt)
            return edited, script
    raise InvariantViolation(f"could not realise {n} substitutions exactly "
                             f"after {MAX_RATE_ATTEMPTS} attempts")


# Alignment step costs for diff_to_script, doubled to stay integral.
# Split and merge beat a substitution plus an insertion/deletion but lose
# to a match plus an insertion/deletion.
_MATCH, _SUB, _MERGE, _SPLIT, _DEL, _INS = range(6)
_STEP_COST = {_MATCH: 0, _SUB: 2, _MERGE: 3, _SPLIT: 3, _DEL: 2, _INS: 2}
# (step, source items consumed, target items consumed), in tie-break order
_STEPS = ((_MATCH, 1, 1), (_SUB, 1, 1), (_MERGE, 2, 1), (_SPLIT, 1, 2),
          (_DEL, 1, 0), (_INS, 0, 1))


def _align(source, target):
    n, m = len(source), len(target)
    inf = float("inf")
    cost = [[inf] * (m + 1) for _ in range(n + 1)]
    back = [[None] * (m + 1) for _ in range(n + 1)]
    cost[0][0] = 0
    for i in range(n + 1):
        for j in range(m + 1):
            if i == 0 and j == 0:
                continue
            best, best_step = inf, None
            for step, di, dj in _STEPS:
                if i < di or j < dj:
                    continue
                if step == _MATCH and source[i - 1] != target[j - 1]:
                    continue
                if step == _SUB and source[i - 1] == target[j - 1]:
                    continue
                candidate = cost[i - di][j - dj] + _STEP_COST[step]
                if candidate < best:
                    best, best_step = candidate, (step, di, dj)
            cost[i][j], back[i][j] = best, best_step

    steps = []
    i, j = n, m
    while i > 0 or j > 0:
        step, di, dj = back[i][j]
        steps.append((step, i - di, j - dj))
        i, j = i - di, j - dj
    steps.reverse()
    return steps


def _collapse_delete_insert(steps):
    collapsed = []
    for entry in steps:
        if collapsed and entry[0] == _INS and collapsed[-1][0] == _DEL:
            _, i, _ = collapsed.pop()
            collapsed.append((_SUB, i, entry[2]))
        else:
            collapsed.append(entry)
    return collapsed


def diff_to_script(source, target_phonemes, provenance="oracle-alignment"):
    """
    Derive an alignment-preserving script from source to target phonemes.

    Uses a minimal-cost alignment with unit substitution, deletion and
    insertion; 1-to-2 and 2-to-1 alignments become Split and Merge when
    cheaper than the unit alternative. Ties prefer match, substitute,
    merge/split, delete, insert in that order.

    Args:
        source: Non-empty AlignedUtterance
        target_phonemes: Non-empty list of PhonemeSymbol
        provenance: Provenance tag for the returned script

    Returns:
        EditScript: Script whose application yields exactly target_phonemes
    """
    return next(script_readings(source, target_phonemes, provenance, limit=1))


def _steps_to_script(steps, target, provenance):
    ops, position = [], 0
    for step, _, j in steps:
        if step == _MATCH:
            position += 1
        elif step == _SUB:
            ops.append(Substitute(position, target[j]))
            position += 1
        elif step == _DEL:
            ops.append(Delete(position))
        elif step == _INS:
            ops.append(Insert(position, target[j]))
            position += 1
        elif step == _SPLIT:
            ops.append(Split(position, target[j], target[j + 1]))
            position += 2
        else:
            ops.append(Merge(position, target[j]))
            position += 1
    return EditScript(tuple(ops), provenance)


def _structural_sites(steps):
    """Adjacent step pairs that a single Merge or Split can also express."""
    sites = []
    for k in range(len(steps) - 1):
        (first, i, j), (second, _, _) = steps[k], steps[k + 1]
        if {first, second} == {_MATCH, _DEL}:
            sites.append((k, (_MERGE, i, j)))
        elif {first, second} == {_MATCH, _INS}:
            sites.append((k, (_SPLIT, i, j)))
    return sites


def script_readings(source, target_phonemes, provenance="oracle-alignment",
                    limit=MAX_READINGS):
    """
    Yield every script reading of a source-to-target diff, minimal one first.

    A match next to a deletion is also a Merge into the kept symbol, and a
    match next to an insertion is also a Split of the kept symbol. Each
    combination of such re-readings yields the same phonemes with different
    prosody; combinations with fewer structural ops come first.

    Args:
        source: Non-empty AlignedUtterance
        target_phonemes: Non-empty list of PhonemeSymbol
        provenance: Provenance tag for the scripts
        limit: Maximum number of readings to yield

    Yields:
        EditScript: scripts whose application yields exactly target_phonemes
    """
    target = list(target_phonemes)
    if not source.phonemes or not target:
        raise InvariantViolation("a script needs non-empty source and target")
    steps = _collapse_delete_insert(_align(list(source.phonemes), target))
    sites = _structural_sites(steps)
    produced = 0
    for size in range(len(sites) + 1):
        for chosen in combinations(sites, size):
            starts = [k for k, _ in chosen]
            if any(b - a < 2 for a, b in zip(starts, starts[1:])):
                continue
            replaced = dict(chosen)
            reading, k = [], 0
            while k < len(steps):
                if k in replaced:
                    reading.append(replaced[k])
                    k += 2
                else:
                    reading.append(steps[k])
                    k += 1
            yield _steps_to_script(reading, target, provenance)
            produced += 1
            if produced >= limit:
                return


def oracle_script(source, pcl_phonemes):
    """
    Script for ground-truth phonemes with aligned source prosody.

    Returns:
        tuple: (edited AlignedUtterance, EditScript with provenance "oracle-alignment")
    """
    script = diff_to_script(source, pcl_phonemes, "oracle-alignment")
    return apply_script(source, script), script
