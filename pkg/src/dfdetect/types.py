"""Shared domain types and the pipeline configuration.

All types are immutable values after construction and safe to share
between concurrent tasks. The JSON forms produced by ``to_json_obj`` /
consumed by ``from_json_obj`` are the canonical wire representations;
``canonical_json_bytes`` freezes byte-stable serialization for caching.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Any, Literal, Optional

import numpy as np

MediaKind = Literal["image", "video"]
IMAGE: MediaKind = "image"
VIDEO: MediaKind = "video"

JobState = Literal["queued", "processing", "completed", "failed"]
JOB_STATES: tuple[JobState, ...] = ("queued", "processing", "completed", "failed")

PROBLEM_CONTENT_TYPE = "application/problem+json"

_NORM_TOL = 1e-6


def canonical_json_bytes(obj: Any) -> bytes:
    """Byte-stable JSON: sorted keys, no whitespace, UTF-8."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False).encode("utf-8")


def _require(cond: bool, message: str) -> None:
    if not cond:
        from .errors import InvariantViolation

        raise InvariantViolation(message)


@dataclass(frozen=True)
class MediaResource:
    """A downloaded image or video plus decode metadata."""

    kind: MediaKind
    source_url: str
    local_ref: str
    width: int
    height: int
    fps: Optional[float] = None
    duration: Optional[float] = None
    frame_count: Optional[int] = None

    def __post_init__(self) -> None:
        _require(self.kind in (IMAGE, VIDEO), f"unknown media kind {self.kind!r}")
        _require(self.width > 0 and self.height > 0, "media dimensions must be positive")
        if self.kind == VIDEO:
            _require(self.fps is not None and self.fps > 0, "video requires fps > 0")
            _require(self.duration is not None and self.duration > 0, "video requires duration > 0")
            _require(self.frame_count is not None and self.frame_count > 0,
                     "video requires frame_count > 0")
        else:
            _require(self.frame_count is None, "image must not carry frame_count")


@dataclass(frozen=True)
class FrameSample:
    """One decoded RGB frame: ``pixels`` is (height, width, 3) uint8."""

    index: int
    timestamp: float
    pixels: np.ndarray

    def __post_init__(self) -> None:
        _require(self.index >= 0, "frame index must be non-negative")
        _require(self.timestamp >= 0.0, "frame timestamp must be non-negative")
        _require(
            isinstance(self.pixels, np.ndarray)
            and self.pixels.ndim == 3
            and self.pixels.shape[2] == 3
            and self.pixels.dtype == np.uint8,
            "pixels must be an (H, W, 3) uint8 array",
        )


@dataclass(frozen=True)
class RegionDescriptorSet:
    """L2-normalized region descriptors for one frame, as an (n, d) array."""

    timestamp: float
    descriptors: np.ndarray

    def __post_init__(self) -> None:
        d = self.descriptors
        _require(isinstance(d, np.ndarray) and d.ndim == 2 and d.shape[0] > 0,
                 "descriptors must be a non-empty (n, d) array")
        norms = np.linalg.norm(d, axis=1)
        _require(bool(np.all(np.abs(norms - 1.0) <= _NORM_TOL)),
                 "region descriptors must be L2-normalized")

    @property
    def dimension(self) -> int:
        return int(self.descriptors.shape[1])


@dataclass(frozen=True)
class Shot:
    """A contiguous video interval [start, end); unit of parallel processing."""

    index: int
    start: float
    end: float
    frame_timestamps: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        _require(self.index >= 0, "shot index must be non-negative")
        _require(self.end > self.start, "shot end must exceed start")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class BoundingBox:
    """Half-open pixel box: x0 <= x < x1, y0 <= y < y1."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self) -> None:
        _require(self.x1 > self.x0 and self.y1 > self.y0, "bounding box must have positive area")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    def to_json_obj(self) -> dict:
        return {"x0": self.x0, "y0": self.y0, "x1": self.x1, "y1": self.y1}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "BoundingBox":
        return cls(int(obj["x0"]), int(obj["y0"]), int(obj["x1"]), int(obj["y1"]))


@dataclass(frozen=True)
class FaceObservation:
    """A face crop detected in one frame.

    ``crop_ref`` is an opaque handle to the extracted face raster (an RGB
    array in this in-process implementation). ``embedding`` and ``score``
    stay unset until the embedding/inference stages run; updated copies
    are produced with :meth:`with_embedding` / :meth:`with_score`.
    """

    shot_index: int
    timestamp: float
    box: BoundingBox
    crop_ref: np.ndarray
    embedding: Optional[np.ndarray] = None
    score: Optional[float] = None
    detector_confidence: Optional[float] = None

    def __post_init__(self) -> None:
        if self.embedding is not None:
            norm = float(np.linalg.norm(self.embedding))
            _require(abs(norm - 1.0) <= _NORM_TOL, "face embedding must be L2-normalized")
        if self.score is not None:
            _require(0.0 <= self.score <= 1.0, "face score must lie in [0, 1]")

    def with_embedding(self, embedding: np.ndarray) -> "FaceObservation":
        return replace(self, embedding=embedding)

    def with_score(self, score: float) -> "FaceObservation":
        return replace(self, score=score)

    def sort_key(self) -> tuple[float, int, int]:
        return (self.timestamp, self.box.x0, self.box.y0)


@dataclass(frozen=True)
class FaceCluster:
    """A connected component of similar faces within one shot."""

    cluster_id: int
    members: tuple[FaceObservation, ...]
    cluster_score: Optional[float] = None

    def __post_init__(self) -> None:
        _require(len(self.members) > 0, "face cluster must have members")
        shot_indexes = {m.shot_index for m in self.members}
        _require(len(shot_indexes) == 1, "cluster members must share one shot")
        if self.cluster_score is not None:
            _require(0.0 <= self.cluster_score <= 1.0, "cluster score must lie in [0, 1]")

    @property
    def shot_index(self) -> int:
        return self.members[0].shot_index


# --- score report tree -----------------------------------------------------


@dataclass(frozen=True)
class FaceEntry:
    timestamp: float
    box: BoundingBox
    score: float

    def __post_init__(self) -> None:
        _require(0.0 <= self.score <= 1.0, "face score must lie in [0, 1]")

    def to_json_obj(self) -> dict:
        return {"timestamp": self.timestamp, "box": self.box.to_json_obj(), "score": self.score}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "FaceEntry":
        return cls(float(obj["timestamp"]), BoundingBox.from_json_obj(obj["box"]), float(obj["score"]))


@dataclass(frozen=True)
class ClusterEntry:
    cluster_id: int
    cluster_score: float
    faces: tuple[FaceEntry, ...]

    def __post_init__(self) -> None:
        _require(len(self.faces) > 0, "cluster entry must list faces")
        _require(0.0 <= self.cluster_score <= 1.0, "cluster score must lie in [0, 1]")

    def to_json_obj(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "cluster_score": self.cluster_score,
            "faces": [f.to_json_obj() for f in self.faces],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ClusterEntry":
        return cls(
            int(obj["cluster_id"]),
            float(obj["cluster_score"]),
            tuple(FaceEntry.from_json_obj(f) for f in obj["faces"]),
        )


@dataclass(frozen=True)
class ShotEntry:
    """Per-shot slice of a ScoreReport; images use a single pseudo-shot."""

    index: int
    start: float
    end: float
    sampled_frames: int
    shot_score: Optional[float]
    clusters: tuple[ClusterEntry, ...]
    gallery_ref: Optional[str] = None

    def __post_init__(self) -> None:
        _require(self.sampled_frames >= 0, "sampled_frames must be non-negative")
        if self.shot_score is not None:
            _require(0.0 <= self.shot_score <= 1.0, "shot score must lie in [0, 1]")

    def to_json_obj(self) -> dict:
        return {
            "index": self.index,
            "start": self.start,
            "end": self.end,
            "sampled_frames": self.sampled_frames,
            "shot_score": self.shot_score,
            "clusters": [c.to_json_obj() for c in self.clusters],
            "gallery_ref": self.gallery_ref,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ShotEntry":
        return cls(
            index=int(obj["index"]),
            start=float(obj["start"]),
            end=float(obj["end"]),
            sampled_frames=int(obj["sampled_frames"]),
            shot_score=None if obj["shot_score"] is None else float(obj["shot_score"]),
            clusters=tuple(ClusterEntry.from_json_obj(c) for c in obj["clusters"]),
            gallery_ref=obj.get("gallery_ref"),
        )


@dataclass(frozen=True)
class ScoreReport:
    """The hierarchical prediction tree (face -> cluster -> shot -> overall).

    ``overall`` is null only when no shot has a surviving cluster, in
    which case ``no_faces_detected`` is set.
    """

    media_kind: MediaKind
    overall: Optional[float]
    shots: tuple[ShotEntry, ...]
    pipeline_version: str
    no_faces_detected: bool = False

    def __post_init__(self) -> None:
        if self.overall is not None:
            _require(0.0 <= self.overall <= 1.0, "overall score must lie in [0, 1]")
        _require(self.no_faces_detected == (self.overall is None),
                 "no_faces_detected must mark exactly the null-overall case")

    def to_json_obj(self) -> dict:
        return {
            "media_kind": self.media_kind,
            "overall": self.overall,
            "no_faces_detected": self.no_faces_detected,
            "shots": [s.to_json_obj() for s in self.shots],
            "pipeline_version": self.pipeline_version,
        }

    def to_json_bytes(self) -> bytes:
        return canonical_json_bytes(self.to_json_obj())

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ScoreReport":
        return cls(
            media_kind=obj["media_kind"],
            overall=None if obj["overall"] is None else float(obj["overall"]),
            shots=tuple(ShotEntry.from_json_obj(s) for s in obj["shots"]),
            pipeline_version=str(obj["pipeline_version"]),
            no_faces_detected=bool(obj["no_faces_detected"]),
        )

    @classmethod
    def from_json_bytes(cls, data: bytes) -> "ScoreReport":
        return cls.from_json_obj(json.loads(data.decode("utf-8")))


@dataclass(frozen=True)
class ProblemDetail:
    """Machine-readable HTTP error payload (application/problem+json)."""

    type: str
    title: str
    status: int
    detail: str
    instance: Optional[str] = None

    def __post_init__(self) -> None:
        _require(400 <= self.status <= 599, "problem status must be a 4xx/5xx HTTP code")

    def to_json_obj(self) -> dict:
        return {
            "type": self.type,
            "title": self.title,
            "status": self.status,
            "detail": self.detail,
            "instance": self.instance,
        }

    def to_json_bytes(self) -> bytes:
        return canonical_json_bytes(self.to_json_obj())

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ProblemDetail":
        return cls(
            type=str(obj["type"]),
            title=str(obj["title"]),
            status=int(obj["status"]),
            detail=str(obj["detail"]),
            instance=obj.get("instance"),
        )


@dataclass(frozen=True)
class Job:
    """Asynchronous request lifecycle record."""

    job_id: str
    state: JobState
    submitted_at: str
    url: str
    result_ref: Optional[str] = None
    problem: Optional[ProblemDetail] = None

    def __post_init__(self) -> None:
        _require(self.state in JOB_STATES, f"unknown job state {self.state!r}")
        if self.state == "completed":
            _require(self.result_ref is not None, "completed job requires result_ref")
        if self.state == "failed":
            _require(self.problem is not None, "failed job requires a problem")

    def to_json_obj(self) -> dict:
        return {
            "job_id": self.job_id,
            "state": self.state,
            "submitted_at": self.submitted_at,
            "url": self.url,
            "result_ref": self.result_ref,
            "problem": None if self.problem is None else self.problem.to_json_obj(),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Job":
        return cls(
            job_id=str(obj["job_id"]),
            state=obj["state"],
            submitted_at=str(obj["submitted_at"]),
            url=str(obj["url"]),
            result_ref=obj.get("result_ref"),
            problem=None if obj.get("problem") is None else ProblemDetail.from_json_obj(obj["problem"]),
        )


_ALLOWED_TRANSITIONS: dict[JobState, tuple[JobState, ...]] = {
    "queued": ("processing",),
    "processing": ("completed", "failed"),
    "completed": (),
    "failed": (),
}


def is_valid_transition(old: JobState, new: JobState) -> bool:
    return new in _ALLOWED_TRANSITIONS[old]


@dataclass(frozen=True)
class PipelineConfig:
    """Every numeric constant the processing pipeline depends on.

    ``peak_threshold`` of None selects the adaptive per-video rule
    (see segmentation.default_peak_threshold).
    """

    segmentation_rate: float = 1.0
    min_shot_len: float = 1.5
    face_margin: float = 1.3
    max_frames_per_shot: int = 64
    cluster_sim_threshold: float = 0.8
    cluster_min_frac: float = 0.2
    input_side: int = 300
    peak_threshold: Optional[float] = None
    imagenet_mean: tuple[float, float, float] = (0.485, 0.456, 0.406)
    imagenet_std: tuple[float, float, float] = (0.229, 0.224, 0.225)

    def __post_init__(self) -> None:
        _require(self.segmentation_rate > 0, "segmentation_rate must be positive")
        _require(self.min_shot_len > 0, "min_shot_len must be positive")
        _require(self.face_margin >= 1.0, "face_margin must be >= 1")
        _require(self.max_frames_per_shot >= 1, "max_frames_per_shot must be >= 1")
        _require(0.0 < self.cluster_sim_threshold < 1.0, "cluster_sim_threshold must be in (0, 1)")
        _require(0.0 < self.cluster_min_frac < 1.0, "cluster_min_frac must be in (0, 1)")
        _require(self.input_side > 0, "input_side must be positive")
        if self.peak_threshold is not None:
            _require(self.peak_threshold > 0, "peak_threshold must be positive")
        _require(all(s > 0 for s in self.imagenet_std), "channel stddev must be positive")

    def to_json_obj(self) -> dict:
        return {
            "segmentation_rate": self.segmentation_rate,
            "min_shot_len": self.min_shot_len,
            "face_margin": self.face_margin,
            "max_frames_per_shot": self.max_frames_per_shot,
            "cluster_sim_threshold": self.cluster_sim_threshold,
            "cluster_min_frac": self.cluster_min_frac,
            "input_side": self.input_side,
            "peak_threshold": self.peak_threshold,
            "imagenet_mean": list(self.imagenet_mean),
            "imagenet_std": list(self.imagenet_std),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "PipelineConfig":
        kwargs = dict(obj)
        if "imagenet_mean" in kwargs:
            kwargs["imagenet_mean"] = tuple(kwargs["imagenet_mean"])
        if "imagenet_std" in kwargs:
            kwargs["imagenet_std"] = tuple(kwargs["imagenet_std"])
        return cls(**kwargs)
