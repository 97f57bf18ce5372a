"""Per-shot face extraction and clustering.

Samples at most a fixed number of unique frames per shot, runs a
pluggable detector, enlarges boxes to squares with a margin, embeds the
crops, and groups faces into similarity-graph connected components.
Small clusters (relative to the shot's sampled frame count) are dropped
as detector noise.
"""

from __future__ import annotations

import logging
import math
from typing import Optional, Protocol, Sequence

import cv2
import numpy as np

from .errors import ValidationProblem
from .media import VideoReader, read_image
from .types import (
    IMAGE,
    BoundingBox,
    FaceCluster,
    FaceObservation,
    FrameSample,
    MediaResource,
    PipelineConfig,
    Shot,
)

logger = logging.getLogger(__name__)


class FaceDetector(Protocol):
    """Finds faces in one frame: list of (box, confidence in [0, 1])."""

    def detect(self, frame: FrameSample) -> list[tuple[BoundingBox, float]]: ...


class FaceEmbedder(Protocol):
    """Maps a face crop raster to an L2-normalized vector of fixed dimension."""

    @property
    def embedding_dimension(self) -> int: ...

    def embed(self, crop: np.ndarray) -> np.ndarray: ...


# Saturated marker colors reserved for fixture generation. Pairwise
# normalized-RGB similarity tops out at 1/sqrt(2) ~ 0.707, below the 0.8
# clustering threshold, so distinct marker colors never merge.
RESERVED_PALETTE: dict[str, tuple[int, int, int]] = {
    "red": (255, 0, 0),
    "green": (0, 255, 0),
    "blue": (0, 0, 255),
    "yellow": (255, 255, 0),
    "magenta": (255, 0, 255),
    "cyan": (0, 255, 255),
}


class MarkerFaceDetector:
    """Reference detector: finds solid rectangles of reserved palette colors.

    Pairs with the fixture generator for deterministic end-to-end runs;
    real face detectors plug in through the same interface.
    """

    def __init__(self, tolerance: int = 32, min_area: int = 64,
                 palette: Optional[dict[str, tuple[int, int, int]]] = None):
        self.tolerance = tolerance
        self.min_area = min_area
        self.palette = RESERVED_PALETTE if palette is None else palette

    def detect(self, frame: FrameSample) -> list[tuple[BoundingBox, float]]:
        pixels = frame.pixels.astype(np.int16)
        found: list[tuple[tuple[int, int, int], BoundingBox]] = []
        for color in self.palette.values():
            target = np.asarray(color, dtype=np.int16)
            mask = (np.abs(pixels - target) <= self.tolerance).all(axis=2)
            if not mask.any():
                continue
            n_labels, _, stats, _ = cv2.connectedComponentsWithStats(
                mask.astype(np.uint8), connectivity=4)
            for label in range(1, n_labels):
                x, y, w, h, area = stats[label]
                if area < self.min_area:
                    continue
                found.append((color, BoundingBox(int(x), int(y), int(x + w), int(y + h))))
        found.sort(key=lambda item: (item[1].y0, item[1].x0, item[0]))
        return [(box, 1.0) for _, box in found]


class MeanColorEmbedder:
    """Reference embedder: L2-normalized mean RGB of the crop.

    Same-color planted faces land on identical embeddings by
    construction, so markers cluster exactly.
    """

    @property
    def embedding_dimension(self) -> int:
        return 3

    def embed(self, crop: np.ndarray) -> np.ndarray:
        mean = crop.reshape(-1, 3).mean(axis=0).astype(np.float64)
        norm = float(np.linalg.norm(mean))
        if norm == 0.0:
            # all-black crop has no direction; pin an arbitrary stable one
            return np.array([1.0, 1.0, 1.0]) / math.sqrt(3.0)
        return mean / norm


def shot_frame_range(shot: Shot, fps: float) -> tuple[int, int]:
    """Source frame indices [first, last] covered by the shot interval."""
    first = int(math.ceil(shot.start * fps - 1e-9))
    last = int(math.ceil(shot.end * fps - 1e-9)) - 1
    if last < first:
        last = first
    return first, last


def sample_frame_indices(first: int, count: int, max_frames: int) -> list[int]:
    """Uniformly spaced unique frame indices across [first, first + count)."""
    if max_frames < 1:
        raise ValidationProblem("max_frames must be >= 1")
    if count <= max_frames:
        return list(range(first, first + count))
    indices = [first + (k * count) // max_frames for k in range(max_frames)]
    return sorted(set(indices))


def sample_shot_frames(media: MediaResource, shot: Shot, max_frames: int) -> list[FrameSample]:
    """Decode at most ``max_frames`` unique frames spanning the shot."""
    assert media.fps is not None
    first, last = shot_frame_range(shot, media.fps)
    last = min(last, media.frame_count - 1)  # type: ignore[operator]
    first = min(first, last)
    indices = sample_frame_indices(first, last - first + 1, max_frames)
    with VideoReader(media.local_ref) as reader:
        decoded = reader.read_frames(indices)
    return [
        FrameSample(index=i, timestamp=i / media.fps, pixels=decoded[i])
        for i in indices
    ]


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


def expand_and_square_box(box: BoundingBox, margin: float,
                          image_w: int, image_h: int) -> BoundingBox:
    """Square the box, scale the side by ``margin`` about the center, clamp.

    Coordinates round half away from zero; clamping at image borders may
    leave the result non-square.
    """
    if margin < 1.0:
        raise ValidationProblem("margin must be >= 1")
    cx = (box.x0 + box.x1) / 2.0
    cy = (box.y0 + box.y1) / 2.0
    half = max(box.width, box.height) * margin / 2.0
    x0 = _round_half_away(cx - half)
    x1 = _round_half_away(cx + half)
    y0 = _round_half_away(cy - half)
    y1 = _round_half_away(cy + half)
    return BoundingBox(
        x0=max(0, x0),
        y0=max(0, y0),
        x1=min(image_w, x1),
        y1=min(image_h, y1),
    )


def detect_faces(
    frames: Sequence[FrameSample],
    detector: FaceDetector,
    config: PipelineConfig,
    shot_index: int,
) -> list[FaceObservation]:
    """Run the detector per frame and extract margin-expanded crops.

    A detector failure on one frame is logged and skips that frame; it
    never fails the whole shot.
    """
    observations: list[FaceObservation] = []
    for frame in frames:
        h, w = frame.pixels.shape[:2]
        try:
            detections = detector.detect(frame)
        except Exception:
            logger.warning("face detector failed on frame %d (t=%.3fs); skipping",
                           frame.index, frame.timestamp, exc_info=True)
            continue
        for box, confidence in detections:
            expanded = expand_and_square_box(box, config.face_margin, w, h)
            crop = frame.pixels[expanded.y0:expanded.y1, expanded.x0:expanded.x1].copy()
            observations.append(FaceObservation(
                shot_index=shot_index,
                timestamp=frame.timestamp,
                box=expanded,
                crop_ref=crop,
                detector_confidence=float(confidence),
            ))
    return observations


def similarity_components(similarity: np.ndarray, threshold: float) -> list[list[int]]:
    """Connected components of the graph with edges where similarity > threshold.

    Accepts any square similarity matrix; only entries strictly above the
    threshold create edges.
    """
    n = similarity.shape[0]
    if similarity.shape != (n, n):
        raise ValidationProblem("similarity matrix must be square")
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        row = similarity[i]
        for j in range(i + 1, n):
            if row[j] > threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [sorted(members) for _, members in sorted(groups.items())]


def cluster_faces(
    observations: Sequence[FaceObservation],
    embedder: FaceEmbedder,
    threshold: float,
) -> list[FaceCluster]:
    """Group faces whose embedding similarity exceeds ``threshold`` (strict).

    Clusters are connected components of the similarity graph. Members
    sort by (timestamp, x0, y0) and clusters by their earliest member, so
    the partition and the numbering are independent of input order.
    """
    if not 0.0 < threshold < 1.0:
        raise ValidationProblem("cluster similarity threshold must lie in (0, 1)")
    if not observations:
        return []
    embedded = [
        obs if obs.embedding is not None else obs.with_embedding(embedder.embed(obs.crop_ref))
        for obs in observations
    ]
    matrix = np.stack([obs.embedding for obs in embedded])  # type: ignore[arg-type]
    components = similarity_components(matrix @ matrix.T, threshold)

    member_groups = [
        sorted((embedded[i] for i in comp), key=FaceObservation.sort_key)
        for comp in components
    ]
    member_groups.sort(key=lambda group: group[0].sort_key())
    return [
        FaceCluster(cluster_id=k, members=tuple(group))
        for k, group in enumerate(member_groups)
    ]


def filter_clusters(
    clusters: Sequence[FaceCluster],
    shot_frame_count: int,
    min_frac: float,
) -> list[FaceCluster]:
    """Drop clusters covering less than ``min_frac`` of the sampled frames.

    The ratio comparison keeps clusters at exactly the threshold.
    Surviving clusters keep their original ids so gaps reveal filtering.
    """
    if shot_frame_count < 1:
        raise ValidationProblem("shot_frame_count must be >= 1")
    return [c for c in clusters if len(c.members) / shot_frame_count >= min_frac]


def load_image_frame(media: MediaResource) -> FrameSample:
    """The single pseudo-frame for image inputs (timestamp 0, index 0)."""
    if media.kind != IMAGE:
        raise ValidationProblem("load_image_frame requires image input")
    return FrameSample(index=0, timestamp=0.0, pixels=read_image(media.local_ref))
