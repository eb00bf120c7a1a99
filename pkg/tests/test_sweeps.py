"""Tests for experiment planning, leakage checks, score ingestion and reports."""

import csv

import pytest

from accentcraft.config import K_FIXED
from accentcraft.controllers.report_export import render_chart, save_chart, save_pdf_report
from accentcraft.controllers.results_controller import (find_crossover, ingest_results,
                                                        pool_acoustic, report,
                                                        write_plot_data, write_report_csv)
from accentcraft.controllers.sweep_controller import (check_disjointness, plan_cross_speaker,
                                                      plan_k_sweep, plan_oracle_subset,
                                                      plan_scaling, select_references,
                                                      stable_seed)
from accentcraft.errors import (DuplicateRecord, InsufficientData, MalformedRecord,
                                PoolTooSmall, UnknownJob)
from accentcraft.models.manifest import Manifest, ManifestEntry
from accentcraft.models.plan_file import JobPlan, PlanFile, RunRecord, SweepSpec
from tests.helpers import corpus_entries, entry


def manifest_of(entries):
    return Manifest([ManifestEntry.from_dict(data) for data in entries])


def scaling_spec(**kwargs):
    values = dict(kind="n_scaling", n_values=(3,), runs=7, speaker="TNI")
    values.update(kwargs)
    return SweepSpec(**values).validate()


def write_scores(path, rows, header=True):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        if header:
            writer.writerow(("job_id", "metric", "value"))
        writer.writerows(rows)
    return path


@pytest.fixture
def corpus():
    return manifest_of(corpus_entries())


class TestStableSeed:
    def test_repeatable(self):
        assert stable_seed(0, 3, 1) == stable_seed(0, 3, 1)
        assert stable_seed(0, 3, 1) != stable_seed(0, 3, 2)

    def test_range(self):
        assert 0 <= stable_seed("x") < 2 ** 63


class TestScaling:
    def test_jobs(self, corpus):
        jobs = plan_scaling(scaling_spec(), corpus)
        assert len(jobs) == 14
        real = [j for j in jobs if j.condition == "real"]
        mixed = [j for j in jobs if j.condition == "real_plus_synth"]
        assert {len(j.training_ids()) for j in real} == {3}
        assert {len(j.training_ids()) for j in mixed} == {503}
        for a, b in zip(real, mixed):
            assert a.train_real == b.train_real
            assert a.seed == b.seed
        assert len({j.train_synth for j in mixed}) == 1
        assert len({j.train_real for j in real}) > 1
        assert all(i.startswith("tni_train") for j in real for i in j.train_real)

    def test_deterministic(self, corpus):
        spec = scaling_spec(n_values=(1, 3, 5))
        assert PlanFile.dumps(spec, plan_scaling(spec, corpus)) == \
            PlanFile.dumps(spec, plan_scaling(spec, corpus))

    def test_full_grid(self, corpus):
        spec = scaling_spec(n_values=(1, 3, 5, 10, 25, 100), synth_budget=500)
        jobs = plan_scaling(spec, corpus)
        assert len(jobs) == 6 * 7 * 2
        assert PlanFile.dumps(spec, jobs) == PlanFile.dumps(spec, plan_scaling(spec, corpus))
        for job in jobs:
            if job.condition == "real_plus_synth":
                assert len(set(job.training_ids())) == job.x + 500

    def test_seed_changes_plan(self, corpus):
        first = plan_scaling(scaling_spec(), corpus)
        second = plan_scaling(scaling_spec(master_seed=1), corpus)
        assert [j.train_real for j in first] != [j.train_real for j in second]

    def test_synthetic_only_condition(self, corpus):
        jobs = plan_scaling(scaling_spec(runs=2), corpus, synth_conditions=("adapt_llm",))
        llm = [j for j in jobs if j.condition == "adapt_llm"]
        assert len(jobs) == 6
        assert [len(j.train_synth) for j in llm] == [3, 3]
        assert all(not j.train_real for j in llm)

    def test_annotated_utterances_excluded(self):
        jobs = plan_scaling(scaling_spec(n_values=(100,), runs=3),
                            manifest_of(corpus_entries(n_pcl=20)))
        assert not any("pcl" in i for j in jobs for i in j.train_real)

    def test_real_pool_too_small(self, corpus):
        with pytest.raises(InsufficientData):
            plan_scaling(scaling_spec(n_values=(200,)), corpus)

    def test_synthetic_pool_too_small(self):
        with pytest.raises(InsufficientData):
            plan_scaling(scaling_spec(), manifest_of(corpus_entries(n_synth=499)))

    def test_real_id_reused_as_synthetic(self):
        entries = [entry(f"u{i}", "adaptation_train", text=f"sentence {i}") for i in range(3)]
        entries += [entry(f"u{i}", "synthetic") for i in range(3)]
        with pytest.raises(InsufficientData, match="u0, u1, u2"):
            plan_scaling(scaling_spec(runs=1, synth_budget=3), manifest_of(entries))

    def test_real_id_reused_in_synthetic_only_pool(self):
        entries = [entry(f"u{i}", "adaptation_train", text=f"sentence {i}") for i in range(3)]
        entries += [entry(f"s{i}", "synthetic") for i in range(3)]
        entries += [entry("u1", "synthetic", condition="adapt_llm")]
        with pytest.raises(InsufficientData, match="u1"):
            plan_scaling(scaling_spec(runs=1, synth_budget=3), manifest_of(entries),
                         synth_conditions=("adapt_llm",))


class TestKSweep:
    def test_icl(self, corpus):
        jobs = plan_k_sweep(SweepSpec.for_component("icl", speaker="TNI"), corpus)
        assert [j.x for j in jobs] == [0, 1, 3, 5, 10, 15]
        assert jobs[0].components["icl"] == ()
        assert jobs[2].components["icl"] == ("tni_ref000", "tni_ref001", "tni_ref002")
        for job in jobs:
            for name in ("speaker_emb", "style_emb", "decoder_ft"):
                assert len(job.components[name]) == K_FIXED

    def test_joint(self, corpus):
        jobs = plan_k_sweep(SweepSpec.for_component("joint", speaker="TNI"), corpus)
        assert [j.x for j in jobs] == [1, 3, 5, 10, 15]
        k3 = jobs[1]
        for name in ("speaker_emb", "style_emb", "decoder_ft"):
            assert len(k3.components[name]) == 3
        assert len(k3.components["icl"]) == K_FIXED

    def test_small_pool(self):
        manifest = manifest_of(corpus_entries(n_reference=10))
        with pytest.raises(PoolTooSmall):
            plan_k_sweep(SweepSpec.for_component("icl", speaker="TNI"), manifest)


class TestSelectReferences:
    def test_rank_order(self):
        pool = [ManifestEntry.from_dict(entry(i, "reference_pool", pool_rank=r))
                for i, r in (("c", 2), ("a", 3), ("b", 1), ("d", 2))]
        assert select_references(pool, 3) == ["b", "c", "d"]

    def test_too_large(self):
        pool = [ManifestEntry.from_dict(entry("a", "reference_pool", pool_rank=1))]
        with pytest.raises(PoolTooSmall):
            select_references(pool, 2)

    def test_unranked(self):
        pool = [ManifestEntry.from_dict(entry("a", "reference_pool"))]
        with pytest.raises(PoolTooSmall):
            select_references(pool, 1)


class TestCrossSpeakerAndOracle:
    def test_cross_speaker(self):
        manifest = manifest_of(corpus_entries() + corpus_entries(
            "ASI", n_reference=0, n_train=0, n_synth=0, n_eval=3))
        spec = SweepSpec(kind="cross_speaker", runs=2, synth_budget=100, speaker="TNI").validate()
        jobs = plan_cross_speaker(spec, manifest)
        assert len(jobs) == 6
        assert {j.eval_speakers for j in jobs} == {("ASI", "TNI")}
        real = [j for j in jobs if j.condition == "real"]
        assert all(len(j.train_real) == 100 and not j.train_synth for j in real)

    def test_cross_speaker_needs_speaker(self, corpus):
        with pytest.raises(InsufficientData):
            plan_cross_speaker(SweepSpec(kind="cross_speaker").validate(), corpus)

    def test_oracle_shares_sources(self):
        manifest = manifest_of(corpus_entries(n_pcl=12))
        spec = SweepSpec(kind="oracle", n_values=(5, 10), runs=2, speaker="TNI").validate()
        jobs = plan_oracle_subset(spec, manifest)
        assert len(jobs) == 12
        for n in (5, 10):
            for run in range(2):
                group = [j for j in jobs if (j.x, j.run) == (n, run)]
                assert {j.condition for j in group} == {"adapt_random", "adapt_gt",
                                                        "adapt_gt_prosody"}
                assert len({j.train_synth for j in group}) == 1
                assert all(i.startswith("tni_pcl") for i in group[0].train_synth)

    def test_oracle_subset_too_small(self):
        spec = SweepSpec(kind="oracle", n_values=(5,), speaker="TNI").validate()
        with pytest.raises(InsufficientData):
            plan_oracle_subset(spec, manifest_of(corpus_entries(n_pcl=4)))


class TestDisjointness:
    def test_clean(self, corpus):
        assert check_disjointness(corpus) == []

    def test_planted_leaks(self):
        entries = corpus_entries()
        entries.append(entry("tni_ref000", "eval"))
        entries.append(entry("leak1", "adaptation_train", text="Evaluation sentence, TNI 0!"))
        entries.append(entry("leak2", "adaptation_train", text="evaluation  sentence tni 1"))
        violations = check_disjointness(manifest_of(entries))
        assert sorted(v.kind for v in violations) == ["id_overlap", "text_overlap",
                                                      "text_overlap"]
        overlap = next(v for v in violations if v.kind == "id_overlap")
        assert overlap.utterance_ids == ("tni_ref000",)
        assert "tni_ref000" in overlap.describe()

    def test_reference_text_is_not_compared(self):
        entries = [entry("u1", "reference_pool", pool_rank=1, text="the same words"),
                   entry("u2", "eval", text="The same words."),
                   entry("u3", "adaptation_train", text="other words")]
        assert check_disjointness(manifest_of(entries)) == []


class TestResults:
    @pytest.fixture
    def jobs(self, corpus):
        return plan_scaling(scaling_spec(), corpus)

    def real_rows(self, jobs, value=16.81):
        return [(j.job_id, "wer", value) for j in jobs if j.condition == "real"]

    def test_ingest(self, tmp_path, jobs):
        records = ingest_results(write_scores(tmp_path / "s.csv", self.real_rows(jobs)), jobs)
        assert len(records) == 7
        assert all(r.provenance == "external" for r in records)

    def test_unknown_job(self, tmp_path, jobs):
        rows = self.real_rows(jobs) + [("n_scaling-real-n4-r0", "wer", 1.0)]
        with pytest.raises(UnknownJob) as e:
            ingest_results(write_scores(tmp_path / "s.csv", rows), jobs)
        assert e.value.line == 9

    def test_duplicate(self, tmp_path, jobs):
        rows = self.real_rows(jobs) + self.real_rows(jobs)[:1]
        with pytest.raises(DuplicateRecord):
            ingest_results(write_scores(tmp_path / "s.csv", rows), jobs)

    def test_bad_value(self, tmp_path, jobs):
        with pytest.raises(MalformedRecord):
            ingest_results(write_scores(tmp_path / "s.csv", [(jobs[0].job_id, "wer", "n/a")]),
                           jobs)

    def test_speaker_column(self, tmp_path, jobs):
        path = write_scores(tmp_path / "s.csv", [(jobs[0].job_id, "wer", 3.0, "ASI"),
                                                 (jobs[0].job_id, "wer", 4.0, "TNI")],
                            header=False)
        assert [r.speaker for r in ingest_results(path, jobs)] == ["ASI", "TNI"]

    def test_report_constant_runs(self, tmp_path, jobs):
        records = ingest_results(write_scores(tmp_path / "s.csv", self.real_rows(jobs)), jobs)
        row = report(records, jobs).row("real", 3, "TNI")
        assert row.aggregate.mean == pytest.approx(16.81)
        assert row.aggregate.std == pytest.approx(0.0, abs=1e-9)
        assert (row.aggregate.n_runs, row.n_planned) == (7, 7)
        assert not row.missing_runs

    def test_report_missing_runs(self, jobs):
        records = [RunRecord(j.job_id, "wer", 10.0) for j in jobs
                   if j.condition == "real"][:3]
        assert report(records, jobs).row("real", 3, "TNI").missing_runs

    def test_gap_series(self):
        jobs = [JobPlan(f"{c}-{x}", c, x=x) for c in ("adapt_random", "adapt_llm")
                for x in (5, 10)]
        values = {"adapt_random-5": 20.0, "adapt_llm-5": 18.0,
                  "adapt_random-10": 15.0, "adapt_llm-10": 15.0}
        result = report([RunRecord(k, "wer", v) for k, v in values.items()], jobs)
        assert result.series["gap/all/wer"] == [(5, 2.0, 0.0), (10, 0.0, 0.0)]
        assert result.series["adapt_llm/all/wer"] == [(5, 18.0, 0.0), (10, 15.0, 0.0)]

    def test_crossover(self):
        synth = [(1, 30.0, 0.0), (3, 25.0, 0.0), (5, 19.0, 0.0)]
        real = [(1, 20.0, 0.0), (3, 20.0, 0.0), (5, 20.0, 0.0)]
        assert find_crossover(synth, real) == 5
        assert find_crossover(real[:1], synth) == 1
        assert find_crossover(synth[:2], real) is None

    def test_pool_acoustic(self):
        jobs = [JobPlan("a", "adapt_llm"), JobPlan("b", "adapt_llm"), JobPlan("c", "real")]
        records = [RunRecord("a", "mcd", 6.0, speaker="X"), RunRecord("b", "mcd", 8.0),
                   RunRecord("c", "mcd", 5.0)]
        pooled = pool_acoustic(records, jobs)
        assert pooled[("adapt_llm", "mcd")].mean == pytest.approx(7.0)
        assert pooled[("real", "mcd")].n_runs == 1

    def test_tables_and_charts(self, tmp_path, jobs):
        records = [RunRecord(j.job_id, "wer", 10.0 + j.run) for j in jobs]
        result = report(records, jobs)
        write_report_csv(tmp_path / "report.csv", result)
        write_plot_data(tmp_path / "plot.csv", result)
        lines = (tmp_path / "report.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "condition,x,speaker,metric,mean,std,n_runs,n_planned"
        assert lines[1] == "real,3,TNI,wer,13.000000,2.000000,7,7"
        plot = (tmp_path / "plot.csv").read_text(encoding="utf-8").splitlines()
        assert plot[0] == "series,x,mean,std"
        assert render_chart(result).startswith(b"\x89PNG")
        save_chart(tmp_path / "chart.png", result, "scaling")
        save_pdf_report(tmp_path / "report.pdf", result, notes=["no leakage found"])
        assert (tmp_path / "report.pdf").read_bytes().startswith(b"%PDF")

    def test_empty_chart(self):
        assert render_chart(report([], [])).startswith(b"\x89PNG")
