"""
Application class for AccentCraft.
Runs the pipeline stages behind the command-line subcommands.
"""

import glob
import json
import logging
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from accentcraft.audio.aggregation import extract_utterance
from accentcraft.audio.alignment_io import read_alignment
from accentcraft.audio.features import extract_track
from accentcraft.audio.speaker_stats import sample_speaker_stats, write_stats_cache
from accentcraft.audio.wave_io import read_wav
from accentcraft.config import MATCHED_RATES, PipelineConfig
from accentcraft.controllers.backends import make_backend, parse_rules
from accentcraft.controllers.edit_controller import (change_rate, corpus_change_rate,
                                                     oracle_script, random_matched_rate)
from accentcraft.controllers.eval_controller import (accent_similarity, aggregate_runs,
                                                     normalize_text, wer)
from accentcraft.controllers.llm_controller import edit_batch
from accentcraft.controllers.prompt_builder import (make_prompt_spec, read_icl_examples,
                                                    select_icl_examples)
from accentcraft.controllers.report_export import save_chart, save_pdf_report
from accentcraft.controllers.results_controller import (ingest_results, report,
                                                        write_plot_data, write_report_csv)
from accentcraft.controllers.sweep_controller import (check_disjointness, plan_cross_speaker,
                                                      plan_k_sweep, plan_oracle_subset,
                                                      plan_scaling, stable_seed)
from accentcraft.errors import AccentCraftError, ConfigError, EmptyReference
from accentcraft.models.edit_script import EditScript
from accentcraft.models.evaluation import (ScoreRow, read_embeddings, read_transcripts,
                                           write_score_csv)
from accentcraft.models.manifest import Manifest
from accentcraft.models.phonemes import validate_inventory
from accentcraft.models.plan_file import PlanFile
from accentcraft.models.utterance import (AlignedUtterance, iter_sequence_lines,
                                          parse_sequence, read_utterance_file,
                                          write_utterance_file)

logger = logging.getLogger(__name__)

ALIGNMENT_EXTENSIONS = (".TextGrid", ".textgrid", ".tsv", ".txt")
EDIT_MODES = ("llm", "random", "oracle")


@dataclass
class BatchReport:
    """Outcome of a batch stage: processed item count and per-item failures."""

    total: int = 0
    failures: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def succeeded(self):
        return self.total - len(self.failures)

    @property
    def all_failed(self):
        return self.total > 0 and self.succeeded == 0

    def fail(self, item, error):
        logger.error("%s: %s", item, error)
        self.failures.append((item, str(error)))

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for item, message in self.failures:
                f.write(f"{item}\t{message}\n")


def _utterance_key(index, utt_id):
    return utt_id if utt_id is not None else f"line{index + 1}"


@dataclass(frozen=True)
class EditedItem:
    key: str
    utt_id: Optional[str]
    source: AlignedUtterance
    edited: AlignedUtterance
    script: EditScript
    fallback: bool = False


class Application:
    """
    Main application class for AccentCraft.
    Holds the configuration and runs the pipeline stages.
    """

    def __init__(self, config=None, workers=None, seed=None):
        """
        Initialize the Application.

        Args:
            config: PipelineConfig (defaults when None)
            workers: Override for the worker count
            seed: Override for the master seed
        """
        self.config = config or PipelineConfig()
        self.workers = workers or self.config.workers
        self.seed = self.config.master_seed if seed is None else seed

    def _map(self, function, items):
        with ThreadPoolExecutor(max_workers=max(1, self.workers)) as pool:
            return list(pool.map(function, items))

    # extract

    def run_extract(self, wav_dir, alignment_dir, out_file):
        """
        Extract one canonical sequence line per paired wav/alignment file.

        Args:
            wav_dir: Directory of <utt_id>.wav files
            alignment_dir: Directory of <utt_id>.TextGrid (or .tsv/.txt) files
            out_file: Output utterance file

        Returns:
            BatchReport: processed count and failures
        """
        wavs = sorted(glob.glob(os.path.join(wav_dir, "*.wav")))
        batch = BatchReport(total=len(wavs))
        if not wavs:
            logger.warning("no WAV files in %s", wav_dir)

        def extract_one(wav_path):
            utt_id = os.path.splitext(os.path.basename(wav_path))[0]
            candidates = [os.path.join(alignment_dir, utt_id + ext) for ext in ALIGNMENT_EXTENSIONS]
            alignment = next((p for p in candidates if os.path.exists(p)), None)
            if alignment is None:
                return utt_id, None, "no matching alignment file"
            try:
                wave = read_wav(wav_path, self.config.mel.sample_rate)
                utterance = extract_utterance(wave, read_alignment(alignment),
                                              self.config.mel, self.config.tracker)
                return utt_id, utterance, None
            except (AccentCraftError, OSError, RuntimeError) as e:
                return utt_id, None, e

        records = []
        for utt_id, utterance, error in self._map(extract_one, wavs):
            if error is not None:
                batch.fail(utt_id, error)
            else:
                records.append((utt_id, utterance))
        write_utterance_file(out_file, records)
        logger.info("extracted %d of %d utterances into %s", len(records), batch.total, out_file)
        return batch

    # edit

    def run_edit(self, source_file, mode, out_file, script_file=None, stats_file=None,
                 rate=None, match_llm=None, examples_file=None, k=None, accent="target",
                 rules=None, cap_rate=1.0, pcl_file=None):
        """
        Edit every utterance of a source file.

        Args:
            source_file: Utterance file to edit
            mode: llm, random or oracle
            out_file: Edited utterance file
            script_file: Edit script output (one ``# utt_id`` block per utterance)
            stats_file: JSON stats output
            rate: Random-mode change rate
            match_llm: Edited LLM output file to derive the random rate from
            examples_file: LLM-mode in-context example file
            k: Number of in-context examples (all when None)
            accent: Accent label for the prompt; in random mode it selects the matched rate
                when neither rate nor match_llm is given
            rules: Mock backend rules
            cap_rate: Mock backend change-rate cap
            pcl_file: Oracle-mode target phoneme file

        Returns:
            tuple: (stats dict, BatchReport)
        """
        if mode not in EDIT_MODES:
            raise ConfigError(f"unknown edit mode {mode!r}")
        sources, batch = read_sources(source_file)
        if mode == "random":
            rate = self._matched_rate(sources, rate, match_llm, accent)
            results = self._edit_random(sources, rate, batch)
        elif mode == "oracle":
            results = self._edit_oracle(sources, pcl_file, batch)
        else:
            results = self._edit_llm(sources, examples_file, k, accent, rules, cap_rate, batch)

        write_utterance_file(out_file, [(item.utt_id, item.edited) for item in results])
        if script_file:
            with open(script_file, "w", encoding="utf-8", newline="\n") as f:
                for item in results:
                    f.write(f"# {item.key}\n{item.script.to_text()}")
        rates = [change_rate(item.source, item.edited) for item in results]
        stats = {
            "mode": mode,
            "n_utterances": batch.total,
            "n_edited": len(results),
            "mean_change_rate": sum(rates) / len(rates) if rates else 0.0,
            "fallback_count": sum(1 for item in results if item.fallback),
            "failures": len(batch.failures),
        }
        if mode == "random":
            stats["target_rate"] = rate
        if stats_file:
            with open(stats_file, "w", encoding="utf-8", newline="\n") as f:
                json.dump(stats, f, indent=2, sort_keys=True)
                f.write("\n")
        logger.info("edit %s: %d utterances, mean change rate %.4f, %d fallbacks",
                    mode, len(results), stats["mean_change_rate"], stats["fallback_count"])
        return stats, batch

    @staticmethod
    def _matched_rate(sources, rate, match_llm, accent):
        if rate is None and match_llm is None:
            if accent not in MATCHED_RATES:
                raise ConfigError("random mode needs --rate, --match-llm or a known --accent")
            rate = MATCHED_RATES[accent]
        if rate is None:
            edited = read_utterance_file(match_llm)
            if edited and all(utt_id is not None for utt_id, _ in edited):
                by_id = {utt_id: source for _, utt_id, source in sources}
                pairs = [(by_id[utt_id], e) for utt_id, e in edited if utt_id in by_id]
            elif len(edited) == len(sources):
                pairs = [(s, e) for (_, _, s), (_, e) in zip(sources, edited)]
            else:
                raise ConfigError(f"{match_llm} holds {len(edited)} utterances, "
                                  f"source holds {len(sources)}")
            if sources and not pairs:
                raise ConfigError(f"{match_llm} shares no utterance with the source file")
            rate = corpus_change_rate(pairs)
            logger.info("matched rate from %s: %.4f", match_llm, rate)
        if not 0.0 <= rate <= 1.0:
            raise ConfigError(f"change rate {rate} outside [0, 1]")
        return rate

    def _edit_random(self, sources, rate, batch):
        results = []
        for key, utt_id, source in sources:
            try:
                edited, script = random_matched_rate(source, rate, stable_seed(self.seed, key))
                results.append(EditedItem(key, utt_id, source, edited, script))
            except AccentCraftError as e:
                batch.fail(key, e)
        return results

    def _edit_oracle(self, sources, pcl_file, batch):
        if pcl_file is None:
            raise ConfigError("oracle mode needs a PCL phoneme file")
        targets = read_phoneme_file(pcl_file)
        results = []
        for key, utt_id, source in sources:
            target = targets.get(key)
            if target is None:
                batch.fail(key, "no PCL phonemes")
                continue
            try:
                edited, script = oracle_script(source, target)
                results.append(EditedItem(key, utt_id, source, edited, script))
            except AccentCraftError as e:
                batch.fail(key, e)
        return results

    def _edit_llm(self, sources, examples_file, k, accent, rules, cap_rate, batch):
        candidates = read_icl_examples(examples_file) if examples_file else []
        examples = select_icl_examples(candidates, len(candidates) if k is None else k)
        backend = make_backend(self.config.backend, parse_rules(rules or ()), cap_rate)
        outcomes = edit_batch([source for _, _, source in sources],
                              lambda source: make_prompt_spec(examples, source, accent),
                              backend, self.config.max_retries, self.workers)
        results = []
        for (key, utt_id, source), outcome in zip(sources, outcomes):
            if outcome.ok:
                response = outcome.response
                results.append(EditedItem(key, utt_id, source, response.edited,
                                          response.script, response.fallback))
            else:
                batch.fail(key, outcome.error)
        return results

    # eval

    def run_eval(self, kind, out_file, condition="system", reference=None, hypotheses=(),
                 synth=(), real=None, manifest=None):
        """
        Score runs and write the aggregate CSV.

        Each hypothesis (wer) or synthetic embedding file (accsim) is one run;
        rows aggregate the per-run values per speaker.

        Args:
            kind: wer or accsim
            out_file: Score CSV path
            condition: Condition label for the rows
            reference: Reference transcript file (wer)
            hypotheses: Hypothesis transcript files, one per run (wer)
            synth: Synthetic embedding files, one per run (accsim)
            real: dict speaker -> real embedding file (accsim)
            manifest: Optional Manifest mapping utterances to speakers (wer)

        Returns:
            list: ScoreRow written
        """
        if kind == "wer":
            rows = self._eval_wer(condition, reference, hypotheses, manifest)
        elif kind == "accsim":
            real_by_speaker = {speaker: read_embeddings(path)
                               for speaker, path in sorted((real or {}).items())}
            values = [accent_similarity(read_embeddings(path), real_by_speaker) for path in synth]
            rows = [ScoreRow(condition, "all", "accsim", aggregate_runs(values))]
        else:
            raise ConfigError(f"unknown evaluation kind {kind!r}")
        write_score_csv(out_file, rows)
        return rows

    def _eval_wer(self, condition, reference, hypotheses, manifest):
        references = read_transcripts(reference)
        speaker_of = {}
        if manifest is not None:
            speaker_of = {e.utterance_id: e.speaker_id for e in manifest}
        per_speaker = defaultdict(list)
        for path in hypotheses:
            hyp = read_transcripts(path)
            scores = defaultdict(list)
            for utt_id, text in references.items():
                if utt_id not in hyp:
                    logger.warning("%s: no hypothesis for %s", path, utt_id)
                    continue
                try:
                    scores[speaker_of.get(utt_id, "all")].append(
                        wer(normalize_text(text), normalize_text(hyp[utt_id])))
                except EmptyReference:
                    logger.warning("%s: empty reference, skipped", utt_id)
            for speaker, values in scores.items():
                per_speaker[speaker].append(sum(values) / len(values))
        return [ScoreRow(condition, speaker, "wer", aggregate_runs(values))
                for speaker, values in sorted(per_speaker.items())]

    # sweep

    def run_sweep(self, spec, manifest, out_dir, scores=None, pdf=False, synth_conditions=()):
        """
        Plan a sweep and, given a score file, report it.

        Writes ``<kind>.plan.json`` and ``disjointness.txt``; with scores also
        ``report.csv``, ``plot_data.csv``, ``chart.png`` and optionally ``report.pdf``.

        Returns:
            dict: name -> written path
        """
        planners = {
            "n_scaling": lambda: plan_scaling(spec, manifest, synth_conditions),
            "k_sweep": lambda: plan_k_sweep(spec, manifest),
            "cross_speaker": lambda: plan_cross_speaker(spec, manifest),
            "oracle": lambda: plan_oracle_subset(spec, manifest),
        }
        if spec.kind not in planners:
            raise ConfigError(f"unknown sweep kind {spec.kind!r}")
        jobs = planners[spec.kind]()
        os.makedirs(out_dir, exist_ok=True)
        written = {"plan": os.path.join(out_dir, f"{spec.kind}.plan.json"),
                   "disjointness": os.path.join(out_dir, "disjointness.txt")}
        PlanFile.save(written["plan"], spec, jobs)
        violations = check_disjointness(manifest)
        with open(written["disjointness"], "w", encoding="utf-8", newline="\n") as f:
            for violation in violations:
                f.write(violation.describe() + "\n")

        if scores:
            result = report(ingest_results(scores, jobs), jobs)
            written["report"] = os.path.join(out_dir, "report.csv")
            written["plot_data"] = os.path.join(out_dir, "plot_data.csv")
            written["chart"] = os.path.join(out_dir, "chart.png")
            write_report_csv(written["report"], result)
            write_plot_data(written["plot_data"], result)
            save_chart(written["chart"], result, spec.kind)
            if pdf:
                written["pdf"] = os.path.join(out_dir, "report.pdf")
                save_pdf_report(written["pdf"], result, f"{spec.kind} report",
                                [v.describe() for v in violations])
        return written

    # stats

    def run_stats(self, manifest, m, out_file, role="reference_pool"):
        """
        Sample per-speaker prosody statistics from manifest audio and cache them.

        Returns:
            tuple: (dict speaker -> SpeakerStats, BatchReport)
        """
        by_speaker = defaultdict(list)
        for entry in manifest.select(role=role):
            if "wav" in entry.paths:
                by_speaker[entry.speaker_id].append(os.path.join(manifest.base_dir, entry.paths["wav"]))
        batch = BatchReport(total=len(by_speaker))
        stats = {}
        for speaker in sorted(by_speaker):
            try:
                tracks = self._map(
                    lambda path: extract_track(read_wav(path, self.config.mel.sample_rate),
                                               self.config.mel, self.config.tracker),
                    by_speaker[speaker])
                stats[speaker] = sample_speaker_stats(tracks, min(m, len(tracks)),
                                                      stable_seed(self.seed, speaker))
            except (AccentCraftError, OSError, RuntimeError) as e:
                batch.fail(speaker, e)
        write_stats_cache(out_file, stats)
        return stats, batch


def read_phoneme_file(path):
    """
    Read target phoneme sequences: ``utt_id<TAB>P1 P2 ...`` or bare lines.

    Returns:
        dict: utterance key -> list of PhonemeSymbol (bare lines keyed line1, line2, ...)
    """
    targets = {}
    for index, (_, utt_id, body) in enumerate(iter_sequence_lines(path)):
        targets[_utterance_key(index, utt_id)] = validate_inventory(body.split())
    return targets


def read_sources(path):
    """
    Parse a source file record by record.

    A record that does not parse is reported as a failure under its key
    (utt_id, else line<n> counting records) and the rest are kept.

    Returns:
        tuple: ([(key, utt_id, AlignedUtterance)], BatchReport counting every record)
    """
    sources, batch = [], BatchReport()
    for index, (number, utt_id, body) in enumerate(iter_sequence_lines(path)):
        key = _utterance_key(index, utt_id)
        batch.total += 1
        try:
            sources.append((key, utt_id, parse_sequence(body)))
        except AccentCraftError as e:
            batch.fail(key, f"line {number}: {e}")
    return sources, batch
