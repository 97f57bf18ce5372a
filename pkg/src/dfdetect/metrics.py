"""Evaluation metrics and the dataset-manifest harness.

Balanced accuracy (mean per-class recall, reported as a percentage) and
ROC AUC (tie-aware Mann-Whitney statistic) over labeled prediction sets,
plus a harness that drives the full pipeline over a CSV manifest and
breaks results down per manipulation tag.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import MetricUndefinedError, ValidationProblem
from .types import ScoreReport

logger = logging.getLogger(__name__)

REAL = "real"
FAKE = "fake"


@dataclass(frozen=True)
class EvalRecord:
    media_id: str
    label: str
    score: float

    def __post_init__(self) -> None:
        if self.label not in (REAL, FAKE):
            raise ValidationProblem(f"label must be 'real' or 'fake', got {self.label!r}")
        if not (np.isfinite(self.score) and 0.0 <= self.score <= 1.0):
            raise ValidationProblem(f"score must be finite in [0, 1], got {self.score}")


@dataclass(frozen=True)
class DatasetManifest:
    """Labeled media list; ``manipulation`` tags enable per-method breakdowns."""

    name: str
    entries: tuple[tuple[str, str, Optional[str]], ...]  # (media, label, manipulation)

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValidationProblem("manifest must not be empty")
        for media, label, _ in self.entries:
            if label not in (REAL, FAKE):
                raise ValidationProblem(f"bad label {label!r} for {media}")


def balanced_accuracy(records: Sequence[EvalRecord], threshold: float = 0.5) -> float:
    """Mean of per-class recall, in percent. score >= threshold predicts fake."""
    if not 0.0 < threshold < 1.0:
        raise ValidationProblem("threshold must lie in (0, 1)")
    n_real = sum(1 for r in records if r.label == REAL)
    n_fake = sum(1 for r in records if r.label == FAKE)
    if n_real == 0 or n_fake == 0:
        raise MetricUndefinedError(
            f"balanced accuracy needs both classes (real={n_real}, fake={n_fake})")
    tp = sum(1 for r in records if r.label == FAKE and r.score >= threshold)
    tn = sum(1 for r in records if r.label == REAL and r.score < threshold)
    recall_fake = tp / n_fake
    recall_real = tn / n_real
    return 100.0 * (recall_real + recall_fake) / 2.0


def auc(records: Sequence[EvalRecord]) -> float:
    """Area under the ROC curve via average ranks (ties count half).

    Equivalent to the fraction of (real, fake) pairs where the fake
    scores higher, with ties worth 1/2.
    """
    scores = np.asarray([r.score for r in records], dtype=np.float64)
    is_fake = np.asarray([r.label == FAKE for r in records], dtype=bool)
    n_fake = int(is_fake.sum())
    n_real = len(records) - n_fake
    if n_fake == 0 or n_real == 0:
        raise MetricUndefinedError(
            f"AUC needs both classes (real={n_real}, fake={n_fake})")
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(len(scores), dtype=np.float64)
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0  # average 1-based rank
        i = j + 1
    rank_sum_fake = float(ranks[is_fake].sum())
    u = rank_sum_fake - n_fake * (n_fake + 1) / 2.0
    return u / (n_fake * n_real)


@dataclass(frozen=True)
class MetricsRow:
    scope: str
    n_real: int
    n_fake: int
    n_failed: int
    balanced_accuracy: Optional[float]
    auc: Optional[float]


MetricsTable = list[MetricsRow]


def metrics_table_to_csv(table: MetricsTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["scope", "n_real", "n_fake", "n_failed", "balanced_accuracy", "auc"])
    for row in table:
        writer.writerow([
            row.scope, row.n_real, row.n_fake, row.n_failed,
            "" if row.balanced_accuracy is None else f"{row.balanced_accuracy:.4f}",
            "" if row.auc is None else f"{row.auc:.6f}",
        ])
    return buf.getvalue()


def format_metrics_table(table: MetricsTable) -> str:
    header = f"{'scope':<20} {'real':>6} {'fake':>6} {'failed':>6} {'BA':>9} {'AUC':>8}"
    lines = [header, "-" * len(header)]
    for row in table:
        ba = "--" if row.balanced_accuracy is None else f"{row.balanced_accuracy:.2f}%"
        a = "--" if row.auc is None else f"{row.auc:.4f}"
        lines.append(f"{row.scope:<20} {row.n_real:>6} {row.n_fake:>6} "
                     f"{row.n_failed:>6} {ba:>9} {a:>8}")
    return "\n".join(lines)


def load_manifest(path: str, name: Optional[str] = None) -> DatasetManifest:
    """Read a CSV manifest with header ``media,label[,manipulation]``."""
    entries = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "media" not in reader.fieldnames \
                or "label" not in reader.fieldnames:
            raise ValidationProblem(
                f"manifest {path} must have a 'media,label[,manipulation]' header")
        has_tag = "manipulation" in reader.fieldnames
        for row in reader:
            tag = row.get("manipulation") if has_tag else None
            entries.append((row["media"].strip(), row["label"].strip(),
                            tag.strip() if tag else None))
    return DatasetManifest(name=name or path, entries=tuple(entries))


def evaluate_manifest(
    manifest: DatasetManifest,
    analyze: Callable[[str], ScoreReport],
    threshold: float = 0.5,
) -> MetricsTable:
    """Run the pipeline per manifest entry and tabulate BA/AUC.

    A null overall score counts as 0 ("real") with a warning; failed
    entries are excluded from the metrics but reported in the counts.
    One row covers the whole manifest, then one per manipulation tag.
    """
    collected: list[tuple[EvalRecord, Optional[str]]] = []
    failures: dict[Optional[str], int] = {}
    for media, label, tag in manifest.entries:
        try:
            report = analyze(media)
        except Exception as exc:
            logger.warning("evaluation of %s failed: %s", media, exc)
            failures[tag] = failures.get(tag, 0) + 1
            continue
        score = report.overall
        if score is None:
            logger.warning("no faces detected in %s; scoring as 0 (real)", media)
            score = 0.0
        collected.append((EvalRecord(media_id=media, label=label, score=score), tag))

    def counts(records: list[EvalRecord]) -> tuple[int, int]:
        n_real = sum(1 for r in records if r.label == REAL)
        return n_real, len(records) - n_real

    all_records = [rec for rec, _ in collected]
    n_real, n_fake = counts(all_records)
    if n_real == 0 or n_fake == 0:
        raise MetricUndefinedError(
            f"manifest needs both classes (real={n_real}, fake={n_fake})")
    table = [MetricsRow(
        scope="all", n_real=n_real, n_fake=n_fake, n_failed=sum(failures.values()),
        balanced_accuracy=balanced_accuracy(all_records, threshold),
        auc=auc(all_records),
    )]

    tags = sorted({tag for _, tag in collected if tag is not None}
                  | {tag for tag in failures if tag is not None})
    shared_real = [rec for rec in all_records if rec.label == REAL]
    for tag in tags:
        # per-tag rows compare the tag's fakes against the shared real set,
        # mirroring per-manipulation evaluation over one pool of real media
        tag_fake = [rec for rec, t in collected if t == tag and rec.label == FAKE]
        tag_records = shared_real + tag_fake
        r, f = counts(tag_records)
        if r == 0 or f == 0:
            table.append(MetricsRow(scope=tag, n_real=r, n_fake=f,
                                    n_failed=failures.get(tag, 0),
                                    balanced_accuracy=None, auc=None))
            continue
        table.append(MetricsRow(
            scope=tag, n_real=r, n_fake=f, n_failed=failures.get(tag, 0),
            balanced_accuracy=balanced_accuracy(tag_records, threshold),
            auc=auc(tag_records),
        ))
    return table
