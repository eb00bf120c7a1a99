"""Controllers for AccentCraft: editing, prompting, evaluation and experiment planning."""
