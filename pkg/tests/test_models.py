"""Tests for the sequence, edit-script, manifest, plan and evaluation-file models."""

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accentcraft.config import PipelineConfig, load_config
from accentcraft.errors import (AlignmentError, ConfigError, DimensionMismatch,
                                InvariantViolation, MalformedRecord, ManifestError,
                                PlanFileError, SequenceSyntaxError, UnknownPhoneme)
from accentcraft.models.edit_script import (Delete, EditScript, Insert, Merge, Split,
                                            Substitute)
from accentcraft.models.evaluation import read_embeddings, read_transcripts
from accentcraft.models.manifest import Manifest, ManifestEntry
from accentcraft.models.phonemes import (INVENTORY, PhonemeSymbol, all_symbols,
                                         parse_phoneme, validate_inventory)
from accentcraft.models.plan_file import JobPlan, PlanFile, SweepSpec
from accentcraft.models.utterance import (AlignedUtterance, parse_sequence,
                                          read_utterance_file, serialize_sequence,
                                          write_utterance_file)
from tests.helpers import WILL_LINE, entry


class TestPhonemes:
    def test_inventory_has_39_bases(self):
        assert len(INVENTORY) == 39
        assert len(set(INVENTORY)) == 39

    def test_valid_tokens(self):
        symbols = validate_inventory(["V", "IH1", "L"])
        assert symbols == [PhonemeSymbol("V"), PhonemeSymbol("IH", 1), PhonemeSymbol("L")]
        assert [str(s) for s in symbols] == ["V", "IH1", "L"]

    def test_vowel_without_stress(self):
        with pytest.raises(UnknownPhoneme) as info:
            validate_inventory(["IH"])
        assert info.value.index == 0

    def test_consonant_with_stress(self):
        with pytest.raises(UnknownPhoneme):
            validate_inventory(["B1"])

    def test_reports_first_bad_index(self):
        with pytest.raises(UnknownPhoneme) as info:
            validate_inventory(["W", "IH1", "XX", "Q"])
        assert info.value.index == 2
        assert info.value.token == "XX"

    def test_stress_is_identity(self):
        assert parse_phoneme("IH0") != parse_phoneme("IH1")

    def test_with_base_keeps_vowel_stress(self):
        assert PhonemeSymbol("IH", 2).with_base("IY") == PhonemeSymbol("IY", 2)
        assert PhonemeSymbol("W").with_base("AH") == PhonemeSymbol("AH", 0)
        assert PhonemeSymbol("IH", 1).with_base("V") == PhonemeSymbol("V")

    def test_all_symbols(self):
        assert len(all_symbols()) == 15 * 3 + 24


class TestSequenceLine:
    def test_parse_worked_example(self, will):
        assert will.symbols() == ["W", "IH1", "L"]
        assert will.durations == (10, 7, 7)
        assert will.pitch == (5.3, 5.3, 5.2)
        assert will.energy == (0.8, 3.6, 3.1)
        assert will.word_lengths is None

    def test_single_phoneme(self):
        utterance = parse_sequence("AH0 | d:5 | p:4.8 | e:1.0")
        assert len(utterance) == 1

    def test_length_mismatch(self):
        with pytest.raises(AlignmentError):
            parse_sequence("W IH1 L | d:10,7 | p:5.3,5.3,5.2 | e:0.8,3.6,3.1")

    def test_missing_field(self):
        with pytest.raises(SequenceSyntaxError):
            parse_sequence("W IH1 L | d:10,7,7 | p:5.3,5.3,5.2")

    def test_malformed_number(self):
        with pytest.raises(SequenceSyntaxError):
            parse_sequence("W IH1 L | d:10,7,x | p:5.3,5.3,5.2 | e:0.8,3.6,3.1")

    def test_fractional_duration_rejected(self):
        with pytest.raises(SequenceSyntaxError):
            parse_sequence("W | d:1.5 | p:5.0 | e:1.0")

    def test_zero_duration_rejected(self):
        with pytest.raises(InvariantViolation):
            parse_sequence("W | d:0 | p:5.0 | e:1.0")

    def test_negative_energy_rejected(self):
        with pytest.raises(InvariantViolation):
            parse_sequence("W | d:1 | p:5.0 | e:-1.0")

    def test_serialize_canonical(self, will):
        assert serialize_sequence(will) == (
            "W IH1 L | d:10,7,7 | p:5.3000,5.3000,5.2000 | e:0.8000,3.6000,3.1000")

    def test_serialize_compact(self, will):
        assert serialize_sequence(will, compact=True) == WILL_LINE

    def test_word_lengths(self):
        utterance = parse_sequence("W IH1 L AH0 | d:1,1,1,1 | p:1,1,1,1 | e:1,1,1,1 | w:3,1")
        assert utterance.word_lengths == (3, 1)
        assert [len(word) for word in utterance.words()] == [3, 1]
        assert serialize_sequence(utterance).endswith("| w:3,1")

    def test_total_frames(self, will):
        assert will.total_frames() == 24
        assert sum(word.total_frames() for word in will.words()) == 24

    def test_word_lengths_must_sum(self):
        with pytest.raises(InvariantViolation):
            AlignedUtterance.build(validate_inventory(["W", "IH1"]), [1, 1], [5, 5], [1, 1], [1])

    def test_dict_round_trip(self, will):
        assert AlignedUtterance.from_dict(will.to_dict()) == will

    def test_utterance_file(self, tmp_path, will):
        path = tmp_path / "utts.txt"
        write_utterance_file(path, [("u1", will), (None, will)])
        text = path.read_text(encoding="utf-8")
        assert text.splitlines()[0].startswith("u1\tW IH1 L | d:10,7,7")
        assert read_utterance_file(path) == [("u1", will), (None, will)]

    def test_utterance_file_names_bad_line(self, tmp_path):
        path = tmp_path / "utts.txt"
        path.write_text(f"# header\n{WILL_LINE}\nW IH1 L | d:10,7\n", encoding="utf-8")
        with pytest.raises(SequenceSyntaxError, match="line 3"):
            read_utterance_file(path)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.tuples(st.sampled_from(all_symbols()),
                              st.integers(1, 60),
                              st.integers(-100000, 100000),
                              st.integers(0, 100000)),
                    min_size=1, max_size=12))
    def test_parse_inverts_serialize(self, items):
        utterance = AlignedUtterance.build(
            [symbol for symbol, *_ in items],
            [d for _, d, _, _ in items],
            [p / 10000 for _, _, p, _ in items],
            [e / 10000 for _, _, _, e in items],
        )
        assert parse_sequence(serialize_sequence(utterance)) == utterance
        assert parse_sequence(serialize_sequence(utterance, compact=True)) == utterance

    def test_round_trip_on_random_utterances(self):
        rng = random.Random(2024)
        symbols = all_symbols()
        for _ in range(1000):
            n = rng.randint(1, 20)
            utterance = AlignedUtterance.build(
                rng.choices(symbols, k=n),
                [rng.randint(1, 60) for _ in range(n)],
                [rng.randint(-100000, 100000) / 10000 for _ in range(n)],
                [rng.randint(0, 100000) / 10000 for _ in range(n)],
            )
            assert parse_sequence(serialize_sequence(utterance)) == utterance


class TestEditScript:
    def test_text_form(self):
        script = EditScript((Substitute(0, PhonemeSymbol("V")), Delete(3),
                             Insert(1, PhonemeSymbol("N")),
                             Split(2, PhonemeSymbol("T"), PhonemeSymbol("R")),
                             Merge(4, PhonemeSymbol("IH", 1))))
        text = script.to_text()
        assert text == "SUB 0 V\nDEL 3\nINS 1 N\nSPLIT 2 T R\nMERGE 4 IH1\n"
        assert EditScript.from_text(text) == script

    def test_comments_ignored(self):
        script = EditScript.from_text("# utt1\nSUB 0 V  # w to v\n\n", "random")
        assert script.ops == (Substitute(0, PhonemeSymbol("V")),)
        assert script.provenance == "random"

    def test_unknown_opcode(self):
        with pytest.raises(SequenceSyntaxError):
            EditScript.from_text("SWAP 0 1")

    def test_wrong_arity(self):
        with pytest.raises(SequenceSyntaxError):
            EditScript.from_text("SPLIT 0 T")

    def test_unknown_provenance(self):
        with pytest.raises(ValueError):
            EditScript((), "human")

    def test_length_delta_and_counts(self):
        script = EditScript((Insert(0, PhonemeSymbol("N")), Delete(1), Delete(1)))
        assert script.length_delta() == -1
        assert script.counts() == {"Insert": 1, "Delete": 2}


class TestManifest:
    def test_read_and_select(self, write_manifest):
        path = write_manifest([
            entry("a1", "reference_pool", pool_rank=1),
            entry("a2", "eval", text="hello there"),
            entry("b1", "eval", speaker="KOR", accent="korean"),
        ])
        manifest = Manifest.read(path)
        assert len(manifest) == 3
        assert [e.utterance_id for e in manifest.select(role="eval")] == ["a2", "b1"]
        assert manifest.speakers() == ["KOR", "TNI"]
        assert manifest.speakers(accent="korean") == ["KOR"]
        assert manifest.get("a1").pool_rank == 1

    def test_bad_line_is_named(self, write_manifest, tmp_path):
        path = write_manifest([entry("a1", "eval")])
        with open(path, "a", encoding="utf-8") as f:
            f.write("{not json\n")
        with pytest.raises(ManifestError, match=":2:"):
            Manifest.read(path)

    def test_unknown_role(self):
        with pytest.raises(ManifestError):
            ManifestEntry.from_dict(entry("a1", "holdout"))

    def test_duplicate_within_role(self):
        with pytest.raises(ManifestError):
            Manifest([ManifestEntry.from_dict(entry("a1", "eval")),
                      ManifestEntry.from_dict(entry("a1", "eval"))])

    def test_same_id_in_two_roles_is_allowed(self):
        manifest = Manifest([ManifestEntry.from_dict(entry("a1", "eval")),
                             ManifestEntry.from_dict(entry("a1", "reference_pool", pool_rank=1))])
        assert len(manifest) == 2

    def test_speaker_must_agree(self):
        with pytest.raises(ManifestError):
            Manifest([ManifestEntry.from_dict(entry("a1", "eval")),
                      ManifestEntry.from_dict(entry("a1", "reference_pool", speaker="KOR"))])

    def test_write_round_trip(self, write_manifest, tmp_path):
        manifest = Manifest.read(write_manifest([entry("a1", "eval", paths={"wav": "a1.wav"})]))
        out = tmp_path / "copy.jsonl"
        manifest.write(out)
        assert [e.to_dict() for e in Manifest.read(out)] == [e.to_dict() for e in manifest]

    def test_transcript_file(self, tmp_path):
        (tmp_path / "a1.txt").write_text("Hello there\n", encoding="utf-8")
        item = ManifestEntry.from_dict(entry("a1", "eval", paths={"transcript": "a1.txt"}))
        assert item.transcript_text(str(tmp_path)) == "Hello there"


class TestPlanFile:
    def test_save_load(self, tmp_path):
        spec = SweepSpec(n_values=(1, 3), runs=2, synth_budget=10, speaker="TNI")
        jobs = [JobPlan("n_scaling-real-n1-r0", "real", train_real=("a",), seed=5, x=1,
                        speaker="TNI")]
        path = tmp_path / "plan.json"
        PlanFile.save(path, spec, jobs)
        loaded_spec, loaded_jobs = PlanFile.load(path)
        assert loaded_spec == spec
        assert loaded_jobs == jobs
        assert json.loads(path.read_text())["signature"] == PlanFile.FILE_SIGNATURE

    def test_dumps_is_stable(self):
        spec = SweepSpec()
        assert PlanFile.dumps(spec, []) == PlanFile.dumps(SweepSpec(), [])

    def test_wrong_signature(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text(json.dumps({"signature": "SOMETHING_ELSE"}))
        with pytest.raises(PlanFileError):
            PlanFile.load(path)

    def test_k_zero_only_for_icl(self):
        assert 0 in SweepSpec.for_component("icl").k_values
        assert 0 not in SweepSpec.for_component("decoder_ft").k_values
        with pytest.raises(ConfigError):
            SweepSpec(kind="k_sweep", k_values=(0, 1), varied_component="style_emb").validate()

    def test_n_range(self):
        with pytest.raises(ConfigError):
            SweepSpec(n_values=(0, 3)).validate()
        with pytest.raises(ConfigError):
            SweepSpec(n_values=(3, 1)).validate()

    def test_unknown_condition(self):
        with pytest.raises(ConfigError):
            JobPlan("j", "tts_only")


class TestEvaluationFiles:
    def test_embeddings(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("u1 1 0 0\nu2 0 1 0\n", encoding="utf-8")
        embeddings = read_embeddings(path)
        assert [e.source_id for e in embeddings] == ["u1", "u2"]
        assert embeddings[0].dimension == 3

    def test_embedding_dimension_mismatch(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("u1 1 0 0\nu2 0 1\n", encoding="utf-8")
        with pytest.raises(DimensionMismatch):
            read_embeddings(path)

    def test_transcripts(self, tmp_path):
        path = tmp_path / "ref.tsv"
        path.write_text("u1\tThe cat sat\nu2\t\n", encoding="utf-8")
        assert read_transcripts(path) == {"u1": "The cat sat", "u2": ""}

    def test_transcript_without_tab(self, tmp_path):
        path = tmp_path / "ref.tsv"
        path.write_text("u1 the cat\n", encoding="utf-8")
        with pytest.raises(MalformedRecord) as info:
            read_transcripts(path)
        assert info.value.line == 1


class TestConfig:
    def test_defaults(self):
        config = load_config()
        assert config == PipelineConfig()
        assert config.mel.sample_rate == 22050
        assert config.mel.n_mels == 80
        assert config.mel.fft_size == 1024
        assert config.mel.hop == 256
        assert config.mel.fmax == 8000.0

    def test_partial_override(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"workers": 2, "backend": {"kind": "remote"}}))
        config = load_config(path)
        assert config.workers == 2
        assert config.backend.kind == "remote"
        assert config.mel.hop == 256

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"mel": {"hop_size": 128}}))
        with pytest.raises(ConfigError):
            load_config(path)

    def test_fmax_above_nyquist(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"mel": {"sample_rate": 8000}}))
        with pytest.raises(ConfigError):
            load_config(path)
