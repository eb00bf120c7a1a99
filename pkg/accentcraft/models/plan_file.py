"""
Sweep specifications, job plans and the plan file format.

Plan files are JSON documents carrying a signature and format version, the
sweep specification and the planned jobs. They are written with sorted keys
and fixed indentation so the same plan always produces the same bytes.
"""

import json
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from accentcraft.config import K_VALUES, K_VALUES_PROMPTING, MASTER_SEED, SWEEP_RUNS, SYNTH_BUDGET
from accentcraft.errors import ConfigError, PlanFileError

logger = logging.getLogger(__name__)

SWEEP_KINDS = ("k_sweep", "n_scaling", "cross_speaker", "oracle")
COMPONENTS = ("icl", "speaker_emb", "style_emb", "decoder_ft")
VARIED_COMPONENTS = COMPONENTS + ("joint",)
CONDITIONS = ("american_tts", "adapt_only", "adapt_llm", "adapt_random", "adapt_gt",
              "adapt_gt_prosody", "real", "real_plus_synth")
MAX_N = 500


@dataclass(frozen=True)
class SweepSpec:
    """Parameters of one experiment sweep."""

    kind: str = "n_scaling"
    k_values: Tuple[int, ...] = tuple(K_VALUES)
    n_values: Tuple[int, ...] = (1, 3, 5, 10, 25, 100)
    runs: int = SWEEP_RUNS
    synth_budget: int = SYNTH_BUDGET
    master_seed: int = MASTER_SEED
    varied_component: str = "icl"
    accent: Optional[str] = None
    speaker: Optional[str] = None

    @classmethod
    def for_component(cls, varied_component, **kwargs):
        """K-sweep spec with the default K grid for the component (K=0 only for icl)."""
        k_values = K_VALUES_PROMPTING if varied_component == "icl" else K_VALUES
        return cls(kind="k_sweep", k_values=tuple(k_values),
                   varied_component=varied_component, **kwargs).validate()

    def validate(self):
        """
        Check the sweep invariants.

        Raises:
            ConfigError: for unknown kinds or components, non-positive counts,
                unsorted value lists or K=0 outside the icl sweep
        """
        if self.kind not in SWEEP_KINDS:
            raise ConfigError(f"unknown sweep kind {self.kind!r}")
        if self.varied_component not in VARIED_COMPONENTS:
            raise ConfigError(f"unknown component {self.varied_component!r}")
        if self.runs < 1 or self.synth_budget < 1:
            raise ConfigError("runs and synth_budget must be positive")
        for name, values in (("k_values", self.k_values), ("n_values", self.n_values)):
            if list(values) != sorted(set(values)):
                raise ConfigError(f"{name} must be strictly ascending")
        if any(not 1 <= n <= MAX_N for n in self.n_values):
            raise ConfigError(f"n_values must lie in [1, {MAX_N}]")
        if any(k < 0 for k in self.k_values):
            raise ConfigError("k_values must be non-negative")
        if 0 in self.k_values and self.varied_component != "icl":
            raise ConfigError("K=0 is only defined for the icl component")
        return self

    def to_dict(self):
        return {
            "kind": self.kind,
            "k_values": list(self.k_values),
            "n_values": list(self.n_values),
            "runs": self.runs,
            "synth_budget": self.synth_budget,
            "master_seed": self.master_seed,
            "varied_component": self.varied_component,
            "accent": self.accent,
            "speaker": self.speaker,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            data["kind"], tuple(data["k_values"]), tuple(data["n_values"]),
            int(data["runs"]), int(data["synth_budget"]), int(data["master_seed"]),
            data["varied_component"], data.get("accent"), data.get("speaker"),
        ).validate()


@dataclass(frozen=True)
class JobPlan:
    """
    One external training/evaluation job.

    x is the swept value (N or K); components maps each pipeline component
    to the reference utterances it receives in K-sweeps.
    """

    job_id: str
    condition: str
    train_real: Tuple[str, ...] = ()
    train_synth: Tuple[str, ...] = ()
    seed: int = 0
    x: Optional[int] = None
    run: int = 0
    speaker: Optional[str] = None
    eval_speakers: Tuple[str, ...] = ()
    components: Dict[str, Tuple[str, ...]] = field(default_factory=dict)
    expected_outputs: Tuple[str, ...] = ("wer",)

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ConfigError(f"{self.job_id}: unknown condition {self.condition!r}")

    def training_ids(self):
        return self.train_real + self.train_synth

    def to_dict(self):
        return {
            "job_id": self.job_id,
            "condition": self.condition,
            "train_real": list(self.train_real),
            "train_synth": list(self.train_synth),
            "seed": self.seed,
            "x": self.x,
            "run": self.run,
            "speaker": self.speaker,
            "eval_speakers": list(self.eval_speakers),
            "components": {name: list(ids) for name, ids in sorted(self.components.items())},
            "expected_outputs": list(self.expected_outputs),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            data["job_id"], data["condition"],
            tuple(data.get("train_real", ())), tuple(data.get("train_synth", ())),
            int(data.get("seed", 0)), data.get("x"), int(data.get("run", 0)),
            data.get("speaker"), tuple(data.get("eval_speakers", ())),
            {name: tuple(ids) for name, ids in data.get("components", {}).items()},
            tuple(data.get("expected_outputs", ("wer",))),
        )


@dataclass(frozen=True)
class RunRecord:
    job_id: str
    metric: str
    value: float
    provenance: str = "external"
    speaker: Optional[str] = None


class PlanFile:
    """Reads and writes plan files (.plan.json)."""

    FORMAT_VERSION = "1.0"
    FILE_SIGNATURE = "ACCENTCRAFT_PLAN"

    @staticmethod
    def dumps(spec, jobs):
        document = {
            "signature": PlanFile.FILE_SIGNATURE,
            "format_version": PlanFile.FORMAT_VERSION,
            "sweep": spec.to_dict(),
            "jobs": [job.to_dict() for job in jobs],
        }
        return json.dumps(document, indent=2, sort_keys=True) + "\n"

    @staticmethod
    def save(file_path, spec, jobs):
        """
        Save a plan.

        Args:
            file_path: Path to save to
            spec: SweepSpec the jobs were planned from
            jobs: List of JobPlan
        """
        with open(file_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(PlanFile.dumps(spec, jobs))
        logger.info("wrote %d jobs to %s", len(jobs), file_path)

    @staticmethod
    def load(file_path):
        """
        Load a plan.

        Returns:
            tuple: (SweepSpec, list of JobPlan)

        Raises:
            PlanFileError: if the file is unreadable or not a plan file
        """
        try:
            with open(file_path, "r", encoding="utf-8") as f:
                document = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise PlanFileError(f"cannot read plan {file_path}: {e}") from e
        if not isinstance(document, dict) or document.get("signature") != PlanFile.FILE_SIGNATURE:
            raise PlanFileError(f"{file_path} is not a plan file")
        if document.get("format_version") != PlanFile.FORMAT_VERSION:
            raise PlanFileError(f"{file_path}: unsupported format version "
                                f"{document.get('format_version')!r}")
        try:
            spec = SweepSpec.from_dict(document["sweep"])
            jobs = [JobPlan.from_dict(job) for job in document["jobs"]]
        except (KeyError, TypeError, ValueError, ConfigError) as e:
            raise PlanFileError(f"{file_path}: malformed plan: {e}") from e
        return spec, jobs
