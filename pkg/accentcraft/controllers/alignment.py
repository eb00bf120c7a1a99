"""
Sequence alignment helpers shared by the editing and scoring controllers.
"""

from rapidfuzz.distance import Levenshtein


def _encode(a, b):
    # integer codes keep == semantics for any item type
    codes = {}
    encoded = [[codes.setdefault(item, len(codes)) for item in seq] for seq in (a, b)]
    return encoded[0], encoded[1]


def edit_distance(a, b):
    """
    Unit-cost Levenshtein distance between two sequences.

    Items are compared with ``==``, so phoneme stress and word case matter.

    Args:
        a: First sequence
        b: Second sequence

    Returns:
        int: Minimum number of substitutions, deletions and insertions
    """
    return int(Levenshtein.distance(*_encode(a, b)))


def error_counts(reference, hypothesis):
    """
    Substitution, deletion and insertion counts of one minimal alignment.

    Args:
        reference: Reference sequence
        hypothesis: Hypothesis sequence

    Returns:
        tuple: (substitutions, deletions, insertions)
    """
    counts = {"replace": 0, "delete": 0, "insert": 0}
    for tag, _, _ in Levenshtein.editops(*_encode(reference, hypothesis)).as_list():
        counts[tag] += 1
    return counts["replace"], counts["delete"], counts["insert"]
