"""Shared fixtures for the AccentCraft test suite."""

import json

import pytest

from accentcraft.models.utterance import parse_sequence
from tests.helpers import V_WILL_LINE, WILL_LINE


@pytest.fixture
def will():
    return parse_sequence(WILL_LINE)


@pytest.fixture
def v_will():
    return parse_sequence(V_WILL_LINE)


@pytest.fixture
def write_manifest(tmp_path):
    """Write manifest entries (dicts) as JSON Lines and return the path."""

    def write(entries, name="manifest.jsonl"):
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as f:
            for data in entries:
                f.write(json.dumps(data) + "\n")
        return path

    return write
