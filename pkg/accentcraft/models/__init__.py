"""Data models for AccentCraft: phoneme sequences, edit scripts, manifests and plans."""
