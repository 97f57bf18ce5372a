"""Hierarchical score aggregation and report assembly.

Cluster scores are the mean of their face scores, shot scores the max of
their cluster scores, and the overall score the max of the non-null shot
scores. Shots whose clusters were all filtered out stay in the report
with a null score for transparency but never contribute to the overall.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import InvariantViolation
from .types import (
    ClusterEntry,
    FaceCluster,
    FaceEntry,
    MediaKind,
    ScoreReport,
    ShotEntry,
)


def aggregate_cluster(face_scores: Sequence[float]) -> float:
    """Arithmetic mean of the cluster's face scores."""
    if not face_scores:
        raise InvariantViolation("cluster aggregation requires at least one face score")
    for s in face_scores:
        if not 0.0 <= s <= 1.0:
            raise InvariantViolation(f"face score out of range: {s}")
    return sum(face_scores) / len(face_scores)


def aggregate_shot(cluster_scores: Sequence[float]) -> Optional[float]:
    """Maximum cluster score; None when the shot has no surviving clusters."""
    if not cluster_scores:
        return None
    return max(cluster_scores)


def aggregate_video(shot_scores: Sequence[Optional[float]]) -> Optional[float]:
    """Maximum over non-null shot scores; None when every shot is null."""
    present = [s for s in shot_scores if s is not None]
    if not present:
        return None
    return max(present)


@dataclass(frozen=True)
class ShotAnalysis:
    """Everything the report needs about one processed shot."""

    index: int
    start: float
    end: float
    sampled_frames: int
    clusters: tuple[FaceCluster, ...]
    gallery_ref: Optional[str] = None


def build_score_report(
    analyses: Sequence[ShotAnalysis],
    pipeline_version: str,
    media_kind: MediaKind,
) -> ScoreReport:
    """Assemble the prediction tree from scored per-shot clusters.

    Every cluster member must already carry a face score; image inputs
    arrive as a single pseudo-shot whose clusters are individual faces.
    """
    shot_entries = []
    for analysis in analyses:
        cluster_entries = []
        for cluster in analysis.clusters:
            scores = []
            faces = []
            for member in cluster.members:
                if member.score is None:
                    raise InvariantViolation(
                        f"unscored face in shot {analysis.index} cluster {cluster.cluster_id}")
                scores.append(member.score)
                faces.append(FaceEntry(timestamp=member.timestamp,
                                       box=member.box, score=member.score))
            cluster_entries.append(ClusterEntry(
                cluster_id=cluster.cluster_id,
                cluster_score=aggregate_cluster(scores),
                faces=tuple(faces),
            ))
        shot_entries.append(ShotEntry(
            index=analysis.index,
            start=analysis.start,
            end=analysis.end,
            sampled_frames=analysis.sampled_frames,
            shot_score=aggregate_shot([c.cluster_score for c in cluster_entries]),
            clusters=tuple(cluster_entries),
            gallery_ref=analysis.gallery_ref,
        ))
    overall = aggregate_video([s.shot_score for s in shot_entries])
    return ScoreReport(
        media_kind=media_kind,
        overall=overall,
        shots=tuple(shot_entries),
        pipeline_version=pipeline_version,
        no_faces_detected=overall is None,
    )


def recompute_report(report: ScoreReport) -> ScoreReport:
    """Rebuild every aggregate from the leaf face scores.

    The result equals the input exactly for any internally consistent
    report; a mismatch pinpoints a corrupted tree.
    """
    shots = []
    for shot in report.shots:
        clusters = tuple(
            ClusterEntry(
                cluster_id=c.cluster_id,
                cluster_score=aggregate_cluster([f.score for f in c.faces]),
                faces=c.faces,
            )
            for c in shot.clusters
        )
        shots.append(ShotEntry(
            index=shot.index,
            start=shot.start,
            end=shot.end,
            sampled_frames=shot.sampled_frames,
            shot_score=aggregate_shot([c.cluster_score for c in clusters]),
            clusters=clusters,
            gallery_ref=shot.gallery_ref,
        ))
    overall = aggregate_video([s.shot_score for s in shots])
    return ScoreReport(
        media_kind=report.media_kind,
        overall=overall,
        shots=tuple(shots),
        pipeline_version=report.pipeline_version,
        no_faces_detected=overall is None,
    )
