"""End-to-end orchestration: media in, ScoreReport out.

Videos are segmented and their shots processed independently (optionally
in parallel); images skip segmentation and clustering, scoring each
detected face as its own singleton cluster. Results are deterministic
regardless of worker count or shot completion order.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence
from urllib.parse import urlsplit

from .aggregation import ShotAnalysis, build_score_report
from .errors import PipelineFailure, ProblemError, ValidationProblem
from .faces import (
    FaceCluster,
    FaceDetector,
    FaceEmbedder,
    MarkerFaceDetector,
    MeanColorEmbedder,
    cluster_faces,
    detect_faces,
    filter_clusters,
    load_image_frame,
    sample_shot_frames,
)
from .gallery import GalleryKeyframe, render_gallery
from .media import MediaResolver, download_media
from .scoring import (
    ColorLookupBackend,
    ConstantBackend,
    RemoteScorerBackend,
    ScorerBackend,
    preprocess_face,
    score_faces,
)
from .segmentation import (
    DistanceSeries,
    GridColorHistogramExtractor,
    RegionDescriptorExtractor,
    segment_video,
)
from .storage import ObjectStore
from .types import IMAGE, VIDEO, FrameSample, MediaResource, PipelineConfig, ScoreReport, Shot
from .version import SERVICE_VERSION

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineComponents:
    """The pluggable stages: region descriptors, detection, embedding, scoring."""

    extractor: RegionDescriptorExtractor
    detector: FaceDetector
    embedder: FaceEmbedder
    backends: tuple[ScorerBackend, ...]


def build_backend(spec: str) -> ScorerBackend:
    """Parse a backend spec: constant:P | lookup:FILE.json | remote:URL."""
    kind, _, arg = spec.partition(":")
    if kind == "constant":
        try:
            return ConstantBackend(float(arg or "0.5"))
        except ValueError as exc:
            raise ValidationProblem(f"bad constant backend spec {spec!r}: {exc}") from exc
    if kind == "lookup":
        if not arg:
            raise ValidationProblem("lookup backend needs a JSON file: lookup:FILE")
        try:
            payload = json.loads(Path(arg).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationProblem(f"cannot read lookup table {arg}: {exc}") from exc
        table = payload.get("lookup", payload) if isinstance(payload, dict) else None
        if not isinstance(table, dict):
            raise ValidationProblem(f"lookup table {arg} must map colors to scores")
        return ColorLookupBackend(table)
    if kind == "remote":
        if not arg:
            raise ValidationProblem("remote backend needs a URL: remote:http://host:port")
        return RemoteScorerBackend(arg)
    raise ValidationProblem(f"unknown backend spec {spec!r}")


def reference_components(
    backends: Sequence[ScorerBackend] = (),
    lookup: Optional[dict[str, float]] = None,
) -> PipelineComponents:
    """The deterministic desk-scale stack used by fixtures and tests."""
    if not backends:
        backends = (ColorLookupBackend(lookup),) if lookup else (ConstantBackend(0.5),)
    return PipelineComponents(
        extractor=GridColorHistogramExtractor(),
        detector=MarkerFaceDetector(),
        embedder=MeanColorEmbedder(),
        backends=tuple(backends),
    )


def gallery_key(report_id: str, shot_index: int) -> str:
    return f"galleries/{report_id}/{shot_index}.png"


def gallery_ref(report_id: str, shot_index: int) -> str:
    return f"/v3/galleries/{report_id}/{shot_index}.png"


def _score_clusters(clusters: Sequence[FaceCluster], config: PipelineConfig,
                    backends: Sequence[ScorerBackend]) -> list[FaceCluster]:
    members = [m for c in clusters for m in c.members]
    if not members:
        return list(clusters)
    tensors = [preprocess_face(m.crop_ref, config.input_side,
                               config.imagenet_mean, config.imagenet_std)
               for m in members]
    scores = score_faces(tensors, backends)
    scored = iter(scores)
    out = []
    for cluster in clusters:
        out.append(FaceCluster(
            cluster_id=cluster.cluster_id,
            members=tuple(m.with_score(next(scored)) for m in cluster.members),
        ))
    return out


def _shot_gallery(frames: Sequence[FrameSample],
                  clusters: Sequence[FaceCluster]) -> bytes:
    by_timestamp: dict[float, list] = {}
    for cluster in clusters:
        for member in cluster.members:
            by_timestamp.setdefault(member.timestamp, []).append(
                (member.box, member.score))
    keyframes = [
        GalleryKeyframe(
            pixels=frame.pixels,
            faces=tuple(sorted(by_timestamp.get(frame.timestamp, ()),
                               key=lambda bs: (bs[0].x0, bs[0].y0))),
        )
        for frame in frames
    ]
    return render_gallery(keyframes)


def _process_video_shot(media: MediaResource, shot: Shot, config: PipelineConfig,
                        components: PipelineComponents,
                        report_id: Optional[str],
                        gallery_store: Optional[ObjectStore]) -> ShotAnalysis:
    try:
        frames = sample_shot_frames(media, shot, config.max_frames_per_shot)
        observations = detect_faces(frames, components.detector, config, shot.index)
        clusters = cluster_faces(observations, components.embedder,
                                 config.cluster_sim_threshold)
        kept = filter_clusters(clusters, len(frames), config.cluster_min_frac)
        scored = _score_clusters(kept, config, components.backends)
    except ProblemError:
        raise
    except Exception as exc:
        raise PipelineFailure(str(exc), stage=f"shot-{shot.index}") from exc

    ref = None
    if report_id is not None:
        ref = gallery_ref(report_id, shot.index)
        if gallery_store is not None:
            png = _shot_gallery(frames, scored)
            gallery_store.put(gallery_key(report_id, shot.index), png)
    return ShotAnalysis(
        index=shot.index,
        start=shot.start,
        end=shot.end,
        sampled_frames=len(frames),
        clusters=tuple(scored),
        gallery_ref=ref,
    )


def _process_image(media: MediaResource, config: PipelineConfig,
                   components: PipelineComponents,
                   report_id: Optional[str],
                   gallery_store: Optional[ObjectStore]) -> ShotAnalysis:
    frame = load_image_frame(media)
    observations = detect_faces([frame], components.detector, config, shot_index=0)
    observations.sort(key=lambda o: o.sort_key())
    singletons = [
        FaceCluster(cluster_id=k, members=(obs,))
        for k, obs in enumerate(observations)
    ]
    scored = _score_clusters(singletons, config, components.backends)

    ref = None
    if report_id is not None:
        ref = gallery_ref(report_id, 0)
        if gallery_store is not None:
            gallery_store.put(gallery_key(report_id, 0), _shot_gallery([frame], scored))
    return ShotAnalysis(
        index=0, start=0.0, end=0.0, sampled_frames=1,
        clusters=tuple(scored), gallery_ref=ref,
    )


def analyze_media(
    media: MediaResource,
    config: PipelineConfig,
    components: PipelineComponents,
    *,
    pipeline_version: str = str(SERVICE_VERSION),
    shot_workers: int = 1,
    report_id: Optional[str] = None,
    gallery_store: Optional[ObjectStore] = None,
    on_series: Optional[Callable[[DistanceSeries], None]] = None,
) -> ScoreReport:
    """Run the full pipeline over decoded media.

    ``report_id`` fixes the gallery reference namespace; PNGs are only
    written when ``gallery_store`` is provided. Worker count never
    changes the output.
    """
    if media.kind == IMAGE:
        analyses = [_process_image(media, config, components, report_id, gallery_store)]
        return build_score_report(analyses, pipeline_version, IMAGE)

    try:
        shots = segment_video(media, components.extractor, config, on_series=on_series)
    except ProblemError:
        raise
    except Exception as exc:
        raise PipelineFailure(str(exc), stage="segmentation") from exc

    if shot_workers <= 1 or len(shots) == 1:
        analyses = [
            _process_video_shot(media, shot, config, components, report_id, gallery_store)
            for shot in shots
        ]
    else:
        with ThreadPoolExecutor(max_workers=shot_workers) as pool:
            analyses = list(pool.map(
                lambda shot: _process_video_shot(
                    media, shot, config, components, report_id, gallery_store),
                shots,
            ))
    analyses.sort(key=lambda a: a.index)
    return build_score_report(analyses, pipeline_version, VIDEO)


def to_url(source: str) -> str:
    """Canonicalize a CLI source argument to a URL (paths become file URIs)."""
    if urlsplit(source).scheme in ("http", "https", "file"):
        return source
    return Path(source).resolve().as_uri()


def analyze_source(
    source: str,
    config: PipelineConfig,
    components: PipelineComponents,
    *,
    resolvers: Optional[list[MediaResolver]] = None,
    proxy: Optional[str] = None,
    max_bytes: Optional[int] = None,
    **kwargs,
) -> tuple[ScoreReport, MediaResource]:
    """Download (or open) a source URL/path and analyze it."""
    url = to_url(source)
    download_kwargs = {}
    if max_bytes is not None:
        download_kwargs["max_bytes"] = max_bytes
    media = download_media(url, resolvers=resolvers, proxy=proxy, **download_kwargs)
    return analyze_media(media, config, components, **kwargs), media
