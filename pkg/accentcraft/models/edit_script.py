"""
Edit operation models for the AccentCraft toolkit.

An EditScript is an ordered list of operations applied left to right with
live indices. Text form, one operation per line:

    SUB 0 V
    DEL 3
    INS 1 N
    SPLIT 2 T R
    MERGE 4 IH1
"""

from dataclasses import dataclass
from typing import Tuple, Union

from accentcraft.errors import SequenceSyntaxError
from accentcraft.models.phonemes import PhonemeSymbol, parse_phoneme

PROVENANCES = ("llm", "random", "oracle-alignment")


@dataclass(frozen=True)
class Substitute:
    index: int
    new: PhonemeSymbol

    def to_text(self):
        return f"SUB {self.index} {self.new}"


@dataclass(frozen=True)
class Delete:
    index: int

    def to_text(self):
        return f"DEL {self.index}"


@dataclass(frozen=True)
class Insert:
    index: int
    new: PhonemeSymbol

    def to_text(self):
        return f"INS {self.index} {self.new}"


@dataclass(frozen=True)
class Split:
    index: int
    first: PhonemeSymbol
    second: PhonemeSymbol

    def to_text(self):
        return f"SPLIT {self.index} {self.first} {self.second}"


@dataclass(frozen=True)
class Merge:
    """Merge positions index and index + 1 into one phoneme."""

    index: int
    new: PhonemeSymbol

    def to_text(self):
        return f"MERGE {self.index} {self.new}"


EditOp = Union[Substitute, Delete, Insert, Split, Merge]

# opcode -> (class, number of phoneme arguments)
_OPCODES = {
    "SUB": (Substitute, 1),
    "DEL": (Delete, 0),
    "INS": (Insert, 1),
    "SPLIT": (Split, 2),
    "MERGE": (Merge, 1),
}


@dataclass(frozen=True)
class EditScript:
    """Ordered edit operations plus where they came from."""

    ops: Tuple[EditOp, ...] = ()
    provenance: str = "llm"

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def __len__(self):
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def counts(self):
        """Number of operations per operation type name."""
        counts = {}
        for op in self.ops:
            name = type(op).__name__
            counts[name] = counts.get(name, 0) + 1
        return counts

    def length_delta(self):
        """Change in sequence length the script causes."""
        delta = 0
        for op in self.ops:
            if isinstance(op, (Insert, Split)):
                delta += 1
            elif isinstance(op, (Delete, Merge)):
                delta -= 1
        return delta

    def to_text(self):
        """
        Render the script in its line form.

        Returns:
            str: One operation per line, newline terminated (empty for no ops)
        """
        return "".join(op.to_text() + "\n" for op in self.ops)

    @classmethod
    def from_text(cls, text, provenance="llm"):
        """
        Parse the line form of a script.

        Args:
            text: Script text; ``#`` comments and blank lines are ignored
            provenance: Provenance tag for the parsed script

        Returns:
            EditScript: The parsed script

        Raises:
            SequenceSyntaxError: for unknown opcodes or wrong argument counts
            UnknownPhoneme: for phoneme arguments outside the inventory
        """
        ops = []
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            opcode = parts[0].upper()
            if opcode not in _OPCODES:
                raise SequenceSyntaxError(f"line {number}: unknown edit operation {parts[0]!r}")
            op_cls, n_symbols = _OPCODES[opcode]
            if len(parts) != 2 + n_symbols:
                raise SequenceSyntaxError(
                    f"line {number}: {opcode} takes an index and {n_symbols} phoneme(s)")
            try:
                index = int(parts[1])
            except ValueError as e:
                raise SequenceSyntaxError(f"line {number}: bad index {parts[1]!r}") from e
            symbols = [parse_phoneme(token) for token in parts[2:]]
            ops.append(op_cls(index, *symbols))
        return cls(tuple(ops), provenance)

