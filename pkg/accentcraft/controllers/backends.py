"""
Editor backends: a chat-completion HTTP client and a deterministic offline mock.
"""

import logging
import math
import os
import time
from typing import Protocol

import requests

from accentcraft.config import BackendConfig
from accentcraft.controllers.prompt_builder import TARGET_TAG, query_line
from accentcraft.errors import BackendError, ConfigError
from accentcraft.models.phonemes import INVENTORY
from accentcraft.models.utterance import AlignedUtterance, parse_sequence, serialize_sequence

logger = logging.getLogger(__name__)

RETRY_STATUS = frozenset({429, 500, 502, 503, 504})
AUTH_STATUS = frozenset({401, 403})


class EditorBackend(Protocol):
    def complete(self, prompt: str) -> str:
        ...


class MockBackend:
    """
    Rule-based stand-in for a language model.

    Applies (from, to) base substitutions left to right to the query of the
    prompt, keeping vowel stress, and stops before the change rate would
    exceed cap_rate. The first rule whose source base matches a phoneme wins.
    """

    def __init__(self, rules, cap_rate=1.0):
        for source, target in rules:
            if source not in INVENTORY or target not in INVENTORY:
                raise ConfigError(f"mock rule {source}->{target} leaves the inventory")
        if not 0.0 <= cap_rate <= 1.0:
            raise ConfigError(f"cap_rate {cap_rate} outside [0, 1]")
        self.rules = list(rules)
        self.cap_rate = cap_rate

    def _replacement(self, symbol):
        for source, target in self.rules:
            if symbol.base == source:
                return symbol.with_base(target, default_stress=0)
        return None

    def complete(self, prompt):
        query = parse_sequence(query_line(prompt))
        # changes allowed so that changes / length stays within the cap
        budget = int(math.floor(self.cap_rate * len(query) + 1e-9))
        phonemes = list(query.phonemes)
        rationale = []
        for i, symbol in enumerate(query.phonemes):
            replacement = self._replacement(symbol)
            if replacement is None:
                continue
            if len(rationale) + 1 > budget:
                break
            phonemes[i] = replacement
            rationale.append(f"# position {i}: {symbol} -> {replacement} (rule substitution)")
        edited = AlignedUtterance(tuple(phonemes), query.durations, query.pitch,
                                  query.energy, query.word_lengths)
        lines = [f"{TARGET_TAG} {serialize_sequence(edited, compact=True)}"] + rationale
        return "\n".join(lines) + "\n"


class ChatCompletionBackend:
    """Chat-completion HTTP endpoint with bearer-token authentication."""

    def __init__(self, config=BackendConfig(), backoff=1.0):
        self.config = config
        self.backoff = backoff

    def _token(self):
        token = os.environ.get(self.config.token_env)
        if not token:
            raise BackendError(f"environment variable {self.config.token_env} is not set")
        return token

    def complete(self, prompt):
        """
        Send the prompt as a single user message.

        Connection errors, timeouts, 429 and 5xx responses are retried up to
        transport_retries times with exponential backoff.

        Returns:
            str: The assistant message content

        Raises:
            BackendError: on authentication failure, exhausted retries or a
                malformed response body
        """
        headers = {
            "Content-Type": "application/json",
            "Authorization": f"Bearer {self._token()}",
        }
        payload = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
        }
        attempts = self.config.transport_retries + 1
        last_error = None
        for attempt in range(1, attempts + 1):
            try:
                response = requests.post(self.config.url, json=payload, headers=headers,
                                         timeout=self.config.timeout)
            except (requests.exceptions.ConnectionError, requests.exceptions.Timeout) as e:
                last_error = str(e)
            else:
                if response.status_code in AUTH_STATUS:
                    raise BackendError(f"authentication failed ({response.status_code})")
                if response.status_code not in RETRY_STATUS:
                    return self._content(response)
                last_error = f"HTTP {response.status_code}"
            if attempt < attempts:
                delay = self.backoff * 2 ** (attempt - 1)
                logger.warning("backend attempt %d/%d failed (%s); retrying in %.1fs",
                               attempt, attempts, last_error, delay)
                time.sleep(delay)
        raise BackendError(f"backend unreachable after {attempts} attempts: {last_error}")

    @staticmethod
    def _content(response):
        try:
            response.raise_for_status()
            return response.json()["choices"][0]["message"]["content"]
        except requests.exceptions.HTTPError as e:
            raise BackendError(str(e)) from e
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise BackendError(f"malformed backend response: {e}") from e


def parse_rules(specs):
    """
    Parse ``FROM:TO`` rule strings such as ``W:V``.

    Returns:
        list: (from_base, to_base) tuples in the given order
    """
    rules = []
    for spec in specs:
        source, sep, target = spec.partition(":")
        if not sep:
            raise ConfigError(f"mock rule {spec!r} must look like FROM:TO")
        source, target = source.strip().upper(), target.strip().upper()
        for base in (source, target):
            if base not in INVENTORY:
                raise ConfigError(f"mock rule {spec!r}: {base!r} is not a base phoneme")
        rules.append((source, target))
    return rules


def make_backend(config, rules=None, cap_rate=1.0):
    """
    Create the backend named by config.kind.

    Args:
        config: BackendConfig
        rules: Mock substitution rules (mock backend only)
        cap_rate: Mock change-rate cap

    Returns:
        EditorBackend: MockBackend or ChatCompletionBackend
    """
    if config.kind == "mock":
        return MockBackend(rules or [], cap_rate)
    if config.kind == "remote":
        return ChatCompletionBackend(config)
    raise ConfigError(f"unknown backend kind {config.kind!r}")
