"""
Score ingestion and aggregate reporting.
"""

import csv
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from accentcraft.controllers.eval_controller import aggregate_runs
from accentcraft.errors import DuplicateRecord, MalformedRecord, UnknownJob
from accentcraft.models.evaluation import RunAggregate
from accentcraft.models.plan_file import RunRecord

logger = logging.getLogger(__name__)

SCORE_HEADER = ("job_id", "metric", "value")
REPORT_COLUMNS = ("condition", "x", "speaker", "metric", "mean", "std", "n_runs", "n_planned")
GAP_SERIES = ("adapt_random", "adapt_llm")
ALL_SPEAKERS = "all"


def ingest_results(path, jobs):
    """
    Read an external score file and validate it against the plan.

    The file is CSV with columns job_id, metric, value and an optional
    fourth column speaker (for jobs evaluated on several speakers).

    Args:
        path: Score file
        jobs: Planned JobPlan list

    Returns:
        list: RunRecord per row, in file order

    Raises:
        UnknownJob: for a job_id that is not planned
        DuplicateRecord: for a repeated (job_id, metric, speaker)
        MalformedRecord: for unparsable rows
    """
    planned = {job.job_id for job in jobs}
    records, seen = [], set()
    with open(path, "r", encoding="utf-8", newline="") as f:
        for number, row in enumerate(csv.reader(f), start=1):
            if not row or not "".join(row).strip() or row[0].startswith("#"):
                continue
            if number == 1 and tuple(cell.strip() for cell in row[:3]) == SCORE_HEADER:
                continue
            if len(row) not in (3, 4):
                raise MalformedRecord(f"expected 3 or 4 columns, got {len(row)}", number)
            job_id, metric = row[0].strip(), row[1].strip()
            speaker = row[3].strip() if len(row) == 4 and row[3].strip() else None
            try:
                value = float(row[2])
            except ValueError as e:
                raise MalformedRecord(f"bad value {row[2]!r}", number) from e
            if not math.isfinite(value) or not metric:
                raise MalformedRecord("metric must be named and value finite", number)
            if job_id not in planned:
                raise UnknownJob(f"job {job_id!r} is not in the plan", number)
            key = (job_id, metric, speaker)
            if key in seen:
                raise DuplicateRecord(f"duplicate record for {job_id}/{metric}", number)
            seen.add(key)
            records.append(RunRecord(job_id, metric, value, "external", speaker))
    logger.info("ingested %d records from %s", len(records), path)
    return records


@dataclass(frozen=True)
class ReportRow:
    condition: str
    x: Optional[int]
    speaker: str
    metric: str
    aggregate: RunAggregate
    n_planned: int

    @property
    def missing_runs(self):
        return self.aggregate.n_runs < self.n_planned


@dataclass(frozen=True)
class Report:
    rows: Tuple[ReportRow, ...]
    # series name -> [(x, mean, std)]
    series: Dict[str, List[Tuple[int, float, float]]]

    def row(self, condition, x=None, speaker=ALL_SPEAKERS, metric="wer"):
        for row in self.rows:
            if (row.condition, row.x, row.speaker, row.metric) == (condition, x, speaker, metric):
                return row
        return None


def _sort_key(key):
    condition, x, speaker, metric = key
    return (condition, -1 if x is None else x, speaker, metric)


def report(records, jobs, metric=None):
    """
    Aggregate run records per condition, swept value and speaker.

    Groups with fewer records than planned jobs are aggregated over the
    available runs and logged. Series hold (x, mean, std) per condition,
    speaker and metric; the ``gap`` series is adapt_random minus adapt_llm
    wherever both exist.

    Args:
        records: RunRecord list
        jobs: JobPlan list the records belong to
        metric: Restrict to one metric name

    Returns:
        Report: rows and plot series

    Raises:
        UnknownJob: if a record names an unplanned job
    """
    by_id = {job.job_id: job for job in jobs}
    planned = defaultdict(int)
    for job in jobs:
        speakers = job.eval_speakers or (job.speaker or ALL_SPEAKERS,)
        for speaker in speakers:
            planned[(job.condition, job.x, speaker)] += 1

    groups = defaultdict(list)
    for record in records:
        if metric is not None and record.metric != metric:
            continue
        job = by_id.get(record.job_id)
        if job is None:
            raise UnknownJob(f"record names unplanned job {record.job_id!r}")
        speaker = record.speaker or job.speaker or ALL_SPEAKERS
        groups[(job.condition, job.x, speaker, record.metric)].append(record.value)

    rows = []
    for key in sorted(groups, key=_sort_key):
        condition, x, speaker, name = key
        n_planned = planned.get((condition, x, speaker), len(groups[key]))
        row = ReportRow(condition, x, speaker, name, aggregate_runs(groups[key]), n_planned)
        if row.missing_runs:
            logger.warning("%s x=%s speaker=%s %s: %d of %d runs available",
                           condition, x, speaker, name, row.aggregate.n_runs, n_planned)
        rows.append(row)

    series = defaultdict(list)
    for row in rows:
        if row.x is not None:
            series[f"{row.condition}/{row.speaker}/{row.metric}"].append(
                (row.x, row.aggregate.mean, row.aggregate.std))
    _add_gap_series(rows, series)
    return Report(tuple(rows), dict(series))


def _add_gap_series(rows, series):
    high, low = GAP_SERIES
    means = {(r.condition, r.x, r.speaker, r.metric): r.aggregate.mean for r in rows}
    for (condition, x, speaker, name), mean in sorted(means.items(), key=lambda i: _sort_key(i[0])):
        if condition != high or x is None:
            continue
        other = means.get((low, x, speaker, name))
        if other is not None:
            series.setdefault(f"gap/{speaker}/{name}", []).append((x, mean - other, 0.0))


def pool_acoustic(records, jobs):
    """
    Pool each metric across speakers and runs per condition (acoustic table).

    Returns:
        dict: (condition, metric) -> RunAggregate over every record of that condition
    """
    by_id = {job.job_id: job for job in jobs}
    pooled = defaultdict(list)
    for record in records:
        job = by_id.get(record.job_id)
        if job is None:
            raise UnknownJob(f"record names unplanned job {record.job_id!r}")
        pooled[(job.condition, record.metric)].append(record.value)
    return {key: aggregate_runs(values) for key, values in sorted(pooled.items())}


def find_crossover(series_a, series_b):
    """
    First x at which series_a's mean drops below series_b's.

    Args:
        series_a: [(x, mean, std)] sorted by x
        series_b: [(x, mean, std)]

    Returns:
        int or None: the crossover x, None if series_a never drops below
    """
    means_b = {x: mean for x, mean, _ in series_b}
    for x, mean, _ in sorted(series_a):
        if x in means_b and mean < means_b[x]:
            return x
    return None


def write_report_csv(path, result):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in result.rows:
            writer.writerow([row.condition, "" if row.x is None else row.x, row.speaker,
                             row.metric, f"{row.aggregate.mean:.6f}",
                             f"{row.aggregate.std:.6f}", row.aggregate.n_runs, row.n_planned])


def write_plot_data(path, result):
    """Write the plot series as CSV rows of series, x, mean, std."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("series", "x", "mean", "std"))
        for name in sorted(result.series):
            for x, mean, std in result.series[name]:
                writer.writerow([name, x, f"{mean:.6f}", f"{std:.6f}"])
