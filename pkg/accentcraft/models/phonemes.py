"""
ARPAbet phoneme inventory for the AccentCraft toolkit.
Defines the 39-symbol inventory and the stress-marked phoneme symbol.
"""

from dataclasses import dataclass
from typing import List, Optional

from accentcraft.errors import UnknownPhoneme

VOWELS = (
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER",
    "EY", "IH", "IY", "OW", "OY", "UH", "UW",
)
CONSONANTS = (
    "B", "CH", "D", "DH", "F", "G", "HH", "JH", "K", "L", "M", "N",
    "NG", "P", "R", "S", "SH", "T", "TH", "V", "W", "Y", "Z", "ZH",
)
INVENTORY = VOWELS + CONSONANTS
STRESS_MARKS = (0, 1, 2)

_VOWEL_SET = frozenset(VOWELS)
_INVENTORY_SET = frozenset(INVENTORY)


@dataclass(frozen=True, order=True)
class PhonemeSymbol:
    """
    A single ARPAbet phoneme.

    Vowels always carry a stress digit and consonants never do. Stress is
    part of identity: IH0 and IH1 are different symbols.
    """

    base: str
    stress: Optional[int] = None

    def __post_init__(self):
        if self.base not in _INVENTORY_SET:
            raise UnknownPhoneme(str(self), reason="not in the ARPAbet inventory")
        if self.is_vowel and self.stress not in STRESS_MARKS:
            raise UnknownPhoneme(str(self), reason="vowel without stress digit")
        if not self.is_vowel and self.stress is not None:
            raise UnknownPhoneme(str(self), reason="stress on a consonant")

    @property
    def is_vowel(self):
        return self.base in _VOWEL_SET

    def with_base(self, base, default_stress=0):
        """
        Return a symbol with a new base, carrying stress across vowels.

        Args:
            base: The replacement base symbol
            default_stress: Stress used when a consonant becomes a vowel

        Returns:
            PhonemeSymbol: The replacement symbol
        """
        if base not in _VOWEL_SET:
            return PhonemeSymbol(base)
        stress = self.stress if self.is_vowel else default_stress
        return PhonemeSymbol(base, stress)

    def __str__(self):
        return self.base if self.stress is None else f"{self.base}{self.stress}"


def parse_phoneme(token, index=None):
    """
    Parse one ARPAbet token such as ``IH1`` or ``W``.

    Args:
        token: The token text
        index: Position of the token, reported on failure

    Returns:
        PhonemeSymbol: The parsed symbol

    Raises:
        UnknownPhoneme: if the token is not in the inventory or has illegal stress
    """
    if token and token[-1].isdigit():
        base, digit = token[:-1], int(token[-1])
        if base in _VOWEL_SET and digit in STRESS_MARKS:
            return PhonemeSymbol(base, digit)
        if base in _INVENTORY_SET:
            raise UnknownPhoneme(token, index, "stress on a consonant"
                                 if base not in _VOWEL_SET else "invalid stress digit")
        raise UnknownPhoneme(token, index, "not in the ARPAbet inventory")
    if token in _VOWEL_SET:
        raise UnknownPhoneme(token, index, "vowel without stress digit")
    if token in _INVENTORY_SET:
        return PhonemeSymbol(token)
    raise UnknownPhoneme(token, index, "not in the ARPAbet inventory")


def validate_inventory(tokens) -> List[PhonemeSymbol]:
    """
    Map tokens to phoneme symbols, failing on the first offending token.

    Args:
        tokens: Iterable of token strings

    Returns:
        list: PhonemeSymbol per token

    Raises:
        UnknownPhoneme: naming the first bad token and its index
    """
    return [parse_phoneme(token, i) for i, token in enumerate(tokens)]


def all_symbols():
    """Every symbol the inventory can produce, stress variants included."""
    symbols = []
    for base in INVENTORY:
        if base in _VOWEL_SET:
            symbols.extend(PhonemeSymbol(base, s) for s in STRESS_MARKS)
        else:
            symbols.append(PhonemeSymbol(base))
    return symbols
