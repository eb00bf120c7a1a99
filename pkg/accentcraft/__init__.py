"""AccentCraft - few-shot accented speech data pipeline."""

__version__ = "0.1.0"
