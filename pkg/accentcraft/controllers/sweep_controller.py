"""
Experiment planning.

Turns a sweep specification and a manifest into deterministic job plans for
the scaling, few-shot (K), cross-speaker and oracle-subset experiments, and
checks the manifest for reference/evaluation leakage.
"""

import hashlib
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from accentcraft.config import K_FIXED
from accentcraft.controllers.eval_controller import normalize_text
from accentcraft.errors import InsufficientData, PoolTooSmall
from accentcraft.models.plan_file import COMPONENTS, JobPlan

logger = logging.getLogger(__name__)

JOINT_COMPONENTS = ("decoder_ft", "speaker_emb", "style_emb")
CROSS_SPEAKER_CONDITIONS = ("adapt_only", "adapt_llm", "real")
ORACLE_CONDITIONS = ("adapt_random", "adapt_gt", "adapt_gt_prosody")
TRAIN_ROLES = ("adaptation_train",)


def stable_seed(*parts):
    """63-bit seed from a SHA-256 of the given values; independent of process hash salt."""
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def _sample(ids, size, seed):
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(ids), size=size, replace=False)
    return tuple(sorted(ids[int(i)] for i in chosen))


def select_references(pool, k):
    """
    The k best-ranked entries of a reference pool.

    Args:
        pool: Manifest entries carrying pool_rank
        k: Number of references

    Returns:
        list: utterance ids in rank order (ties by utterance id)

    Raises:
        PoolTooSmall: if k exceeds the pool size
    """
    if k > len(pool):
        raise PoolTooSmall(f"requested {k} references from a pool of {len(pool)}")
    unranked = [e.utterance_id for e in pool if e.pool_rank is None]
    if unranked:
        raise PoolTooSmall(f"pool entries without pool_rank: {', '.join(unranked)}")
    ranked = sorted(pool, key=lambda e: (e.pool_rank, e.utterance_id))
    return [e.utterance_id for e in ranked[:k]]


def _real_pool(spec, manifest):
    # utterances with PCL annotations form the oracle subset, not the main pool
    entries = [e for role in TRAIN_ROLES
               for e in manifest.select(role=role, speaker=spec.speaker, accent=spec.accent)
               if not e.has_pcl]
    return sorted(e.utterance_id for e in entries)


def _synthetic_ids(manifest, spec, condition):
    entries = manifest.select(role="synthetic", speaker=spec.speaker, accent=spec.accent)
    return sorted(e.utterance_id for e in entries if e.condition in (None, condition))


def _fixed_synthetic_set(spec, manifest, condition="adapt_llm"):
    ids = _synthetic_ids(manifest, spec, condition)
    if len(ids) < spec.synth_budget:
        raise InsufficientData(f"{len(ids)} synthetic utterances for a budget of "
                               f"{spec.synth_budget}")
    if len(ids) == spec.synth_budget:
        return tuple(ids)
    return _sample(ids, spec.synth_budget, stable_seed(spec.master_seed, "synth", condition))


def plan_scaling(spec, manifest, synth_conditions=()):
    """
    Plan the fine-tuning budget sweep.

    For every N and run: a ``real`` job with N real utterances sampled
    without replacement and a ``real_plus_synth`` job with the same N plus
    the fixed synthetic set. Each condition in synth_conditions adds a job
    trained on N of that condition's synthetic utterances.

    Args:
        spec: SweepSpec
        manifest: Manifest
        synth_conditions: Synthetic-only conditions to include (e.g. adapt_llm)

    Returns:
        list: JobPlan in (N, run, condition) order

    Raises:
        InsufficientData: if the pools are smaller than the sweep needs or
            a real utterance id also appears among the synthetic ones
    """
    spec.validate()
    pool = _real_pool(spec, manifest)
    largest = max(spec.n_values)
    if len(pool) < largest:
        raise InsufficientData(f"{len(pool)} real adaptation utterances, need {largest}")
    synth_set = _fixed_synthetic_set(spec, manifest)
    synth_pools = {}
    for condition in synth_conditions:
        synth_pools[condition] = _synthetic_ids(manifest, spec, condition)
        if len(synth_pools[condition]) < largest:
            raise InsufficientData(f"{len(synth_pools[condition])} {condition} utterances, "
                                   f"need {largest}")
    shared = set(pool) & set(synth_set).union(*synth_pools.values())
    if shared:
        raise InsufficientData(f"utterances used as both real and synthetic training data: "
                               f"{', '.join(sorted(shared))}")

    jobs = []
    for n in spec.n_values:
        for run in range(spec.runs):
            seed = stable_seed(spec.master_seed, n, run)
            real = _sample(pool, n, seed)
            common = dict(seed=seed, x=n, run=run, speaker=spec.speaker)
            jobs.append(JobPlan(f"n_scaling-real-n{n}-r{run}", "real", train_real=real, **common))
            jobs.append(JobPlan(f"n_scaling-real_plus_synth-n{n}-r{run}", "real_plus_synth",
                                train_real=real, train_synth=synth_set, **common))
            for condition in synth_conditions:
                synth_seed = stable_seed(spec.master_seed, condition, n, run)
                jobs.append(JobPlan(
                    f"n_scaling-{condition}-n{n}-r{run}", condition,
                    train_synth=_sample(synth_pools[condition], n, synth_seed),
                    seed=synth_seed, x=n, run=run, speaker=spec.speaker))
    logger.info("planned %d scaling jobs", len(jobs))
    return jobs


def plan_k_sweep(spec, manifest):
    """
    Plan the few-shot reference sweep for one component.

    Each K yields one job: the varied component receives the top-K
    references, every other component the top K_FIXED. ``joint`` varies
    decoder fine-tuning and both embeddings together.

    Raises:
        PoolTooSmall: if the reference pool holds fewer than K_FIXED ranked entries
    """
    spec.validate()
    pool = manifest.select(role="reference_pool", speaker=spec.speaker, accent=spec.accent)
    references = select_references(pool, K_FIXED)
    varied = JOINT_COMPONENTS if spec.varied_component == "joint" else (spec.varied_component,)

    jobs = []
    for k in spec.k_values:
        if k > K_FIXED:
            raise PoolTooSmall(f"K={k} exceeds the fixed pool size {K_FIXED}")
        components = {name: tuple(references[:k] if name in varied else references)
                      for name in COMPONENTS}
        jobs.append(JobPlan(
            f"k_sweep-{spec.varied_component}-k{k}", "adapt_llm",
            seed=stable_seed(spec.master_seed, spec.varied_component, k),
            x=k, speaker=spec.speaker, components=components))
    return jobs


def plan_cross_speaker(spec, manifest, conditions=CROSS_SPEAKER_CONDITIONS):
    """
    Plan cross-speaker evaluation.

    Per run and condition, one model is trained on synth_budget utterances
    of the adaptation speaker (synthetic for adapt_* conditions, real for
    ``real``) and evaluated on every speaker of the accent.

    Raises:
        InsufficientData: if the speaker lacks training data or the accent lacks eval speakers
    """
    spec.validate()
    if spec.speaker is None:
        raise InsufficientData("cross-speaker plans need the adaptation speaker")
    accent = spec.accent or next(
        (e.accent_label for e in manifest.select(speaker=spec.speaker)), None)
    eval_speakers = tuple(manifest.speakers(accent=accent, role="eval"))
    if not eval_speakers:
        raise InsufficientData(f"no evaluation speakers for accent {accent!r}")

    jobs = []
    for run in range(spec.runs):
        for condition in conditions:
            seed = stable_seed(spec.master_seed, "cross", condition, run)
            pool = _real_pool(spec, manifest) if condition == "real" else \
                _synthetic_ids(manifest, spec, condition)
            if len(pool) < spec.synth_budget:
                raise InsufficientData(f"{len(pool)} {condition} utterances for "
                                       f"{spec.speaker}, need {spec.synth_budget}")
            sampled = _sample(pool, spec.synth_budget, seed)
            jobs.append(JobPlan(
                f"cross_speaker-{condition}-r{run}", condition,
                train_real=sampled if condition == "real" else (),
                train_synth=() if condition == "real" else sampled,
                seed=seed, run=run, speaker=spec.speaker, eval_speakers=eval_speakers))
    return jobs


def plan_oracle_subset(spec, manifest, conditions=ORACLE_CONDITIONS):
    """
    Plan the oracle comparison on utterances that carry PCL phonemes.

    For each N up to the subset size and each run, the same N source
    utterances are rendered under every condition: random phonemes,
    ground-truth phonemes with aligned source prosody and ground-truth
    phonemes with ground-truth prosody.

    Raises:
        InsufficientData: if the subset is smaller than the largest N
    """
    spec.validate()
    subset = sorted(e.utterance_id for role in TRAIN_ROLES
                    for e in manifest.select(role=role, speaker=spec.speaker, accent=spec.accent)
                    if e.has_pcl)
    if len(subset) < max(spec.n_values):
        raise InsufficientData(f"oracle subset holds {len(subset)} utterances, "
                               f"need {max(spec.n_values)}")
    jobs = []
    for n in spec.n_values:
        for run in range(spec.runs):
            seed = stable_seed(spec.master_seed, "oracle", n, run)
            sampled = _sample(subset, n, seed)
            for condition in conditions:
                jobs.append(JobPlan(f"oracle-{condition}-n{n}-r{run}", condition,
                                    train_synth=sampled, seed=seed, x=n, run=run,
                                    speaker=spec.speaker))
    return jobs


@dataclass(frozen=True)
class Violation:
    kind: str
    speaker: Optional[str]
    utterance_ids: Tuple[str, ...]
    detail: str

    def describe(self):
        return f"{self.kind} [{self.speaker or '*'}] {', '.join(self.utterance_ids)}: {self.detail}"


def check_disjointness(manifest):
    """
    Report reference/eval and train/eval leakage.

    Reference-pool ids must not appear among the same speaker's eval ids,
    and no adaptation-training transcript may equal an eval transcript after
    normalize_text; an utterance is never compared with itself.

    Returns:
        list: Violation per finding; empty when the manifest is clean
    """
    violations = []
    for speaker in sorted({e.speaker_id for e in manifest}):
        reference = {e.utterance_id for e in manifest.select(role="reference_pool", speaker=speaker)}
        evaluation = {e.utterance_id for e in manifest.select(role="eval", speaker=speaker)}
        for utterance_id in sorted(reference & evaluation):
            violations.append(Violation("id_overlap", speaker, (utterance_id,),
                                        "reference utterance also used for evaluation"))

    eval_texts = {}
    for entry in manifest.select(role="eval"):
        text = entry.transcript_text(manifest.base_dir)
        if text is not None:
            eval_texts.setdefault(normalize_text(text).words, []).append(entry)
    for role in TRAIN_ROLES:
        for entry in manifest.select(role=role):
            text = entry.transcript_text(manifest.base_dir)
            if text is None:
                continue
            words = normalize_text(text).words
            if not words:
                continue
            for other in eval_texts.get(words, []):
                if other.utterance_id == entry.utterance_id:
                    continue
                violations.append(Violation(
                    "text_overlap", entry.speaker_id, (entry.utterance_id, other.utterance_id),
                    f"training and evaluation share the text {' '.join(words)!r}"))
    for violation in violations:
        logger.warning("disjointness: %s", violation.describe())
    return violations
