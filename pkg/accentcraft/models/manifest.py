"""
Dataset manifest model.

A manifest is a JSON Lines file with one utterance entry per line:

    {"utterance_id": "tni_0001", "speaker_id": "TNI", "accent_label": "indian",
     "role": "reference_pool", "paths": {"wav": "wav/tni_0001.wav"}, "pool_rank": 1}
"""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Dict, Optional

from accentcraft.errors import ManifestError

logger = logging.getLogger(__name__)

ROLES = ("reference_pool", "adaptation_train", "eval", "synthetic")
PATH_KEYS = ("wav", "transcript", "alignment", "pcl_phonemes", "embedding")
ENTRY_KEYS = ("utterance_id", "speaker_id", "accent_label", "role", "paths",
              "pool_rank", "text", "condition")


@dataclass(frozen=True)
class ManifestEntry:
    """
    One utterance of the corpus.

    text holds the transcript inline; condition names the system that
    produced a synthetic utterance.
    """

    utterance_id: str
    speaker_id: str
    accent_label: str
    role: str
    paths: Dict[str, str] = field(default_factory=dict)
    pool_rank: Optional[int] = None
    text: Optional[str] = None
    condition: Optional[str] = None

    def __post_init__(self):
        if not self.utterance_id or not self.speaker_id:
            raise ManifestError("entries need an utterance_id and a speaker_id")
        if self.role not in ROLES:
            raise ManifestError(f"{self.utterance_id}: unknown role {self.role!r}")
        unknown = sorted(set(self.paths) - set(PATH_KEYS))
        if unknown:
            raise ManifestError(f"{self.utterance_id}: unknown path keys {', '.join(unknown)}")
        if self.pool_rank is not None and self.pool_rank < 1:
            raise ManifestError(f"{self.utterance_id}: pool_rank must be >= 1")

    @property
    def has_pcl(self):
        return "pcl_phonemes" in self.paths

    def transcript_text(self, base_dir=""):
        """Inline text, else the content of the transcript file, else None."""
        if self.text is not None:
            return self.text
        path = self.paths.get("transcript")
        if path is None:
            return None
        with open(os.path.join(base_dir, path), "r", encoding="utf-8") as f:
            return f.read().strip()

    def to_dict(self):
        data = {
            "utterance_id": self.utterance_id,
            "speaker_id": self.speaker_id,
            "accent_label": self.accent_label,
            "role": self.role,
            "paths": dict(sorted(self.paths.items())),
        }
        for key in ("pool_rank", "text", "condition"):
            value = getattr(self, key)
            if value is not None:
                data[key] = value
        return data

    @classmethod
    def from_dict(cls, data):
        unknown = sorted(set(data) - set(ENTRY_KEYS))
        if unknown:
            raise ManifestError(f"unknown entry keys {', '.join(unknown)}")
        try:
            return cls(
                str(data["utterance_id"]), str(data["speaker_id"]),
                str(data["accent_label"]), data["role"],
                dict(data.get("paths") or {}),
                None if data.get("pool_rank") is None else int(data["pool_rank"]),
                data.get("text"), data.get("condition"),
            )
        except KeyError as e:
            raise ManifestError(f"entry lacks {e.args[0]!r}") from e


class Manifest:
    """
    Ordered collection of manifest entries.

    An utterance id may appear under several roles (the disjointness check
    reports such overlaps) but only once per role, and always with the same
    speaker.
    """

    def __init__(self, entries=(), base_dir=""):
        self.entries = list(entries)
        self.base_dir = base_dir
        seen, speakers = set(), {}
        for entry in self.entries:
            key = (entry.utterance_id, entry.role)
            if key in seen:
                raise ManifestError(f"duplicate utterance {entry.utterance_id} in role {entry.role}")
            seen.add(key)
            speaker = speakers.setdefault(entry.utterance_id, entry.speaker_id)
            if speaker != entry.speaker_id:
                raise ManifestError(f"utterance {entry.utterance_id} listed for speakers "
                                    f"{speaker} and {entry.speaker_id}")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def select(self, role=None, speaker=None, accent=None):
        """Entries matching every given filter, in manifest order."""
        return [
            e for e in self.entries
            if (role is None or e.role == role)
            and (speaker is None or e.speaker_id == speaker)
            and (accent is None or e.accent_label == accent)
        ]

    def speakers(self, accent=None, role=None):
        return sorted({e.speaker_id for e in self.select(role=role, accent=accent)})

    def get(self, utterance_id, role=None):
        for entry in self.entries:
            if entry.utterance_id == utterance_id and (role is None or entry.role == role):
                return entry
        return None

    @classmethod
    def read(cls, path):
        """
        Read a JSON Lines manifest.

        Relative paths inside entries resolve against the manifest's directory.

        Raises:
            ManifestError: naming the offending line
        """
        entries = []
        with open(path, "r", encoding="utf-8") as f:
            for number, raw in enumerate(f, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    data = json.loads(line)
                    if not isinstance(data, dict):
                        raise ManifestError("entry must be a JSON object")
                    entries.append(ManifestEntry.from_dict(data))
                except (json.JSONDecodeError, ManifestError) as e:
                    raise ManifestError(f"{path}:{number}: {e}") from e
        return cls(entries, os.path.dirname(os.path.abspath(str(path))))

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for entry in self.entries:
                f.write(json.dumps(entry.to_dict(), sort_keys=True) + "\n")
