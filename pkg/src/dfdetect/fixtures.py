"""Synthetic ground-truth fixtures for desk-scale verification.

Generates deterministic videos with solid-color scenes and planted
marker-face rectangles, together with the exact ScoreReport the pipeline
must produce when run with the reference extractor, marker detector,
mean-color embedder, and color-lookup backend. Expected boundaries and
scores are derived from the spec alone, never by running the pipeline.

Spec validation enforces the constraints that make the expectation
exact: scene boundaries on segmentation-rate ticks, shots no shorter
than the minimum length, backgrounds that quantize away from the marker
palette and from each other, and few enough boundaries that the adaptive
peak threshold stays below the planted distance spikes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import cv2
import numpy as np

from .errors import FixtureSpecError
from .faces import (
    RESERVED_PALETTE,
    expand_and_square_box,
    sample_frame_indices,
)
from .media import probe_media
from .scoring import color_key, parse_color
from .types import (
    IMAGE,
    VIDEO,
    BoundingBox,
    ClusterEntry,
    FaceEntry,
    MediaResource,
    PipelineConfig,
    ScoreReport,
    Shot,
    ShotEntry,
)

MARKER_MIN_AREA = 64
BACKGROUND_PALETTE_CLEARANCE = 96
MAX_NOISE_LEVEL = 16
ADAPTIVE_THRESHOLD_CEILING = 0.85


@dataclass(frozen=True)
class FixtureFace:
    """A planted marker rectangle with its assigned DeepFake score.

    ``presence`` is the fraction of the shot's source frames (from the
    shot start) that contain the face; below the cluster-size threshold
    the pipeline must filter the resulting cluster out.
    """

    color: str
    score: float
    box: Optional[BoundingBox] = None
    presence: float = 1.0


@dataclass(frozen=True)
class FixtureShot:
    duration: float
    background: tuple[int, int, int]
    faces: tuple[FixtureFace, ...] = ()


@dataclass(frozen=True)
class FixtureSpec:
    shots: tuple[FixtureShot, ...]
    fps: float = 8.0
    width: int = 320
    height: int = 240
    noise_level: int = 0
    seed: int = 0

    @classmethod
    def from_dict(cls, obj: dict) -> "FixtureSpec":
        try:
            shots = []
            for shot in obj["shots"]:
                faces = tuple(
                    FixtureFace(
                        color=f["color"],
                        score=float(f["score"]),
                        box=None if f.get("box") is None else BoundingBox.from_json_obj(f["box"]),
                        presence=float(f.get("presence", 1.0)),
                    )
                    for f in shot.get("faces", [])
                )
                background = shot["background"]
                if isinstance(background, str):
                    background = parse_color(background)
                shots.append(FixtureShot(
                    duration=float(shot["duration"]),
                    background=tuple(int(c) for c in background),  # type: ignore[arg-type]
                    faces=faces,
                ))
            return cls(
                shots=tuple(shots),
                fps=float(obj.get("fps", 8.0)),
                width=int(obj.get("width", 320)),
                height=int(obj.get("height", 240)),
                noise_level=int(obj.get("noise_level", 0)),
                seed=int(obj.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FixtureSpecError(f"malformed fixture spec: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "shots": [
                {
                    "duration": s.duration,
                    "background": list(s.background),
                    "faces": [
                        {
                            "color": f.color,
                            "score": f.score,
                            "box": None if f.box is None else f.box.to_json_obj(),
                            "presence": f.presence,
                        }
                        for f in s.faces
                    ],
                }
                for s in self.shots
            ],
            "fps": self.fps,
            "width": self.width,
            "height": self.height,
            "noise_level": self.noise_level,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class Fixture:
    """Generated media plus the ground truth the pipeline must reproduce."""

    media: MediaResource
    shots: tuple[Shot, ...]
    boundaries: tuple[float, ...]
    planted_boxes: tuple[tuple[BoundingBox, ...], ...]  # per shot, the raw marker rects
    expected_report: ScoreReport
    lookup: dict[str, float]

    def ground_truth_obj(self) -> dict:
        return {
            "boundaries": list(self.boundaries),
            "shots": [{"index": s.index, "start": s.start, "end": s.end}
                      for s in self.shots],
            "planted_boxes": [[b.to_json_obj() for b in boxes]
                              for boxes in self.planted_boxes],
            "expected_report": self.expected_report.to_json_obj(),
            "lookup": self.lookup,
        }


def _palette_values() -> list[tuple[int, int, int]]:
    return list(RESERVED_PALETTE.values())


def _channel_bin(value: int) -> int:
    return value >> 5


def _validate_background(background: tuple[int, int, int], noise: int, where: str) -> None:
    if len(background) != 3 or not all(0 <= c <= 255 for c in background):
        raise FixtureSpecError(f"{where}: background must be an RGB triple")
    for palette_color in _palette_values():
        if max(abs(b - p) for b, p in zip(background, palette_color)) < BACKGROUND_PALETTE_CLEARANCE:
            raise FixtureSpecError(
                f"{where}: background {background} is too close to reserved "
                f"marker color {palette_color}")
    for c in background:
        # marker colors live in the outermost histogram bins (channel 0 or
        # 255); backgrounds must keep to the interior bins or cross-scene
        # histogram collisions flatten the planted distance spikes
        if not 32 <= c <= 223:
            raise FixtureSpecError(
                f"{where}: background channel {c} is outside [32, 223]; "
                f"extreme channels collide with marker color histograms")
        lo, hi = c - noise, c + noise
        if _channel_bin(lo) != _channel_bin(hi):
            raise FixtureSpecError(
                f"{where}: background channel {c} straddles a histogram bin "
                f"edge under noise {noise}; segmentation distances would drift")


def _auto_layout(faces: Sequence[FixtureFace], width: int, height: int) -> list[BoundingBox]:
    n = len(faces)
    slot = width // n
    side = min(height // 3, (2 * slot) // 3)
    side = max(side, 12)
    y0 = (height - side) // 2
    boxes = []
    for k in range(n):
        x0 = k * slot + (slot - side) // 2
        boxes.append(BoundingBox(x0, y0, x0 + side, y0 + side))
    return boxes


def _estimated_adaptive_threshold(n_distances: int, n_boundaries: int) -> float:
    # worst-case estimate with unit spikes and zero elsewhere
    if n_distances <= 0 or n_boundaries == 0:
        return 0.3
    p = n_boundaries / n_distances
    return max(0.3, p + 2.0 * math.sqrt(max(p * (1.0 - p), 0.0)))


def _validate_spec(spec: FixtureSpec, config: PipelineConfig) -> list[list[BoundingBox]]:
    """Check detectability constraints; returns resolved boxes per shot."""
    if not spec.shots:
        raise FixtureSpecError("fixture needs at least one shot")
    if spec.fps <= 0 or spec.width < 24 or spec.height < 24:
        raise FixtureSpecError("fixture needs positive fps and a sane resolution")
    if not 0 <= spec.noise_level <= MAX_NOISE_LEVEL:
        raise FixtureSpecError(f"noise_level must lie in [0, {MAX_NOISE_LEVEL}]")

    tick = 1.0 / config.segmentation_rate
    color_scores: dict[str, float] = {}
    elapsed = 0.0
    resolved: list[list[BoundingBox]] = []
    for i, shot in enumerate(spec.shots):
        where = f"shot {i}"
        if shot.duration <= 0:
            raise FixtureSpecError(f"{where}: duration must be positive")
        n_frames = shot.duration * spec.fps
        if abs(n_frames - round(n_frames)) > 1e-6 or round(n_frames) < 1:
            raise FixtureSpecError(
                f"{where}: duration {shot.duration}s is not a whole number of "
                f"frames at {spec.fps} fps")
        if len(spec.shots) > 1 and shot.duration < config.min_shot_len:
            raise FixtureSpecError(
                f"{where}: duration {shot.duration}s is below the minimum shot "
                f"length {config.min_shot_len}s and would be merged away")
        if i < len(spec.shots) - 1:
            boundary = elapsed + shot.duration
            ticks = boundary * config.segmentation_rate
            if abs(ticks - round(ticks)) > 1e-9:
                raise FixtureSpecError(
                    f"{where}: boundary at {boundary}s is off the "
                    f"{tick}s segmentation grid and cannot be detected exactly")
        elapsed += shot.duration
        _validate_background(shot.background, spec.noise_level, where)
        if i > 0:
            prev = spec.shots[i - 1].background
            if all(_channel_bin(a) == _channel_bin(b)
                   for a, b in zip(prev, shot.background)):
                raise FixtureSpecError(
                    f"{where}: background quantizes identically to the previous "
                    f"shot's; the scene change would produce no distance spike")

        boxes = _auto_layout(shot.faces, spec.width, spec.height) if shot.faces else []
        for k, face in enumerate(shot.faces):
            rgb = parse_color(face.color)
            if rgb not in _palette_values():
                raise FixtureSpecError(
                    f"{where}: face color {face.color!r} is not in the reserved palette")
            if not 0.0 <= face.score <= 1.0:
                raise FixtureSpecError(f"{where}: face score {face.score} out of [0, 1]")
            if not 0.0 <= face.presence <= 1.0:
                raise FixtureSpecError(f"{where}: presence {face.presence} out of [0, 1]")
            key = color_key(rgb)
            if key in color_scores and color_scores[key] != face.score:
                raise FixtureSpecError(
                    f"{where}: color {face.color} already carries score "
                    f"{color_scores[key]}; the lookup backend maps one score per color")
            color_scores[key] = face.score
            if face.box is not None:
                boxes[k] = face.box
        for k, box in enumerate(boxes):
            if box.x0 < 0 or box.y0 < 0 or box.x1 > spec.width or box.y1 > spec.height:
                raise FixtureSpecError(f"{where}: face box {box} exceeds the frame")
            if box.width * box.height < MARKER_MIN_AREA:
                raise FixtureSpecError(
                    f"{where}: face box {box} is below the detector's "
                    f"{MARKER_MIN_AREA}px minimum area")
            for other in boxes[k + 1:]:
                if not (box.x1 <= other.x0 or other.x1 <= box.x0
                        or box.y1 <= other.y0 or other.y1 <= box.y0):
                    raise FixtureSpecError(f"{where}: face boxes overlap")
        resolved.append(boxes)

    n_segmentation_frames = max(1, math.ceil(elapsed * config.segmentation_rate - 1e-9))
    est = _estimated_adaptive_threshold(n_segmentation_frames - 1, len(spec.shots) - 1)
    if config.peak_threshold is None and est > ADAPTIVE_THRESHOLD_CEILING:
        raise FixtureSpecError(
            f"{len(spec.shots) - 1} boundaries in {elapsed}s puts the adaptive "
            f"peak threshold near {est:.2f}, above planted spike heights; use "
            f"longer shots or fewer boundaries")
    return resolved


def _render_frame(spec: FixtureSpec, shot: FixtureShot, boxes: Sequence[BoundingBox],
                  local_index: int, n_source: int,
                  rng: Optional[np.random.Generator]) -> np.ndarray:
    frame = np.empty((spec.height, spec.width, 3), dtype=np.uint8)
    frame[:] = np.asarray(shot.background, dtype=np.uint8)
    for face, box in zip(shot.faces, boxes):
        present_count = math.ceil(face.presence * n_source - 1e-9)
        if local_index < present_count:
            frame[box.y0:box.y1, box.x0:box.x1] = np.asarray(
                parse_color(face.color), dtype=np.uint8)
    if rng is not None and spec.noise_level > 0:
        noise = rng.integers(-spec.noise_level, spec.noise_level + 1,
                             size=frame.shape, dtype=np.int16)
        frame = np.clip(frame.astype(np.int16) + noise, 0, 255).astype(np.uint8)
    return frame


def _expected_shot_entry(spec: FixtureSpec, config: PipelineConfig, shot_index: int,
                         start: float, end: float, first_frame: int, n_source: int,
                         boxes: Sequence[BoundingBox]) -> ShotEntry:
    shot = spec.shots[shot_index]
    sampled = sample_frame_indices(first_frame, n_source, config.max_frames_per_shot)
    n_sampled = len(sampled)

    # expected observations per face, honoring presence windows
    per_face_entries: list[list[FaceEntry]] = []
    for face, box in zip(shot.faces, boxes):
        expanded = expand_and_square_box(box, config.face_margin, spec.width, spec.height)
        present_count = math.ceil(face.presence * n_source - 1e-9)
        entries = [
            FaceEntry(timestamp=i / spec.fps, box=expanded, score=face.score)
            for i in sampled
            if (i - first_frame) < present_count
        ]
        per_face_entries.append(entries)

    # same-color faces share one cluster: identical mean-color embeddings
    by_color: dict[str, list[FaceEntry]] = {}
    for face, entries in zip(shot.faces, per_face_entries):
        by_color.setdefault(color_key(parse_color(face.color)), []).extend(entries)

    groups = [sorted(entries, key=lambda e: (e.timestamp, e.box.x0, e.box.y0))
              for entries in by_color.values() if entries]
    groups.sort(key=lambda g: (g[0].timestamp, g[0].box.x0, g[0].box.y0))

    clusters = []
    for cluster_id, group in enumerate(groups):
        if len(group) / n_sampled < config.cluster_min_frac:
            continue  # filtered out; ids keep their gaps
        mean = sum(e.score for e in group) / len(group)
        clusters.append(ClusterEntry(
            cluster_id=cluster_id, cluster_score=mean, faces=tuple(group)))

    shot_score = max((c.cluster_score for c in clusters), default=None)
    return ShotEntry(
        index=shot_index,
        start=start,
        end=end,
        sampled_frames=n_sampled,
        shot_score=shot_score,
        clusters=tuple(clusters),
        gallery_ref=None,
    )


def generate_fixture(spec: FixtureSpec, out_path: str,
                     config: Optional[PipelineConfig] = None,
                     pipeline_version: str = "3.0.0") -> Fixture:
    """Write the fixture video and derive its exact expected report.

    The video is FFV1-in-AVI (lossless, byte-deterministic), so the
    pipeline recovers planted boxes and colors exactly.
    """
    config = config or PipelineConfig()
    boxes_per_shot = _validate_spec(spec, config)

    writer = cv2.VideoWriter(
        str(out_path), cv2.VideoWriter_fourcc(*"FFV1"), spec.fps,
        (spec.width, spec.height))
    if not writer.isOpened():
        raise FixtureSpecError(f"cannot open video writer for {out_path}")
    rng = np.random.default_rng(spec.seed) if spec.noise_level > 0 else None
    try:
        for shot, boxes in zip(spec.shots, boxes_per_shot):
            n_source = round(shot.duration * spec.fps)
            for local in range(n_source):
                frame = _render_frame(spec, shot, boxes, local, n_source, rng)
                writer.write(cv2.cvtColor(frame, cv2.COLOR_RGB2BGR))
    finally:
        writer.release()

    media = probe_media(str(out_path), source_url=Path(out_path).resolve().as_uri())

    shots = []
    shot_entries = []
    boundaries = []
    elapsed = 0.0
    first_frame = 0
    for i, (shot, boxes) in enumerate(zip(spec.shots, boxes_per_shot)):
        start, end = elapsed, elapsed + shot.duration
        if i < len(spec.shots) - 1:
            boundaries.append(end)
        n_source = round(shot.duration * spec.fps)
        seg_ts = tuple(
            t / config.segmentation_rate
            for t in range(math.ceil(start * config.segmentation_rate - 1e-9),
                           math.ceil(end * config.segmentation_rate - 1e-9))
            if t / config.segmentation_rate >= start
        )
        shots.append(Shot(index=i, start=start, end=end, frame_timestamps=seg_ts))
        shot_entries.append(_expected_shot_entry(
            spec, config, i, start, end, first_frame, n_source, boxes))
        elapsed = end
        first_frame += n_source

    overall = max((s.shot_score for s in shot_entries if s.shot_score is not None),
                  default=None)
    expected = ScoreReport(
        media_kind=VIDEO,
        overall=overall,
        shots=tuple(shot_entries),
        pipeline_version=pipeline_version,
        no_faces_detected=overall is None,
    )
    lookup = {}
    for shot in spec.shots:
        for face in shot.faces:
            lookup[color_key(parse_color(face.color))] = face.score
    return Fixture(
        media=media,
        shots=tuple(shots),
        boundaries=tuple(boundaries),
        planted_boxes=tuple(tuple(b) for b in boxes_per_shot),
        expected_report=expected,
        lookup=lookup,
    )


def generate_image_fixture(out_path: str, faces: Sequence[FixtureFace],
                           background: tuple[int, int, int] = (56, 64, 72),
                           width: int = 320, height: int = 240,
                           config: Optional[PipelineConfig] = None,
                           pipeline_version: str = "3.0.0") -> Fixture:
    """PNG image fixture: faces become singleton clusters of a pseudo-shot."""
    config = config or PipelineConfig()
    shot = FixtureShot(duration=1.0, background=background, faces=tuple(faces))
    spec = FixtureSpec(shots=(shot,), width=width, height=height)
    boxes = _validate_spec(spec, config)[0]

    frame = _render_frame(spec, shot, boxes, 0, 1, None)
    ok = cv2.imwrite(str(out_path), cv2.cvtColor(frame, cv2.COLOR_RGB2BGR))
    if not ok:
        raise FixtureSpecError(f"cannot write image fixture to {out_path}")
    media = probe_media(str(out_path), source_url=Path(out_path).resolve().as_uri())

    entries = []
    for face, box in zip(shot.faces, boxes):
        expanded = expand_and_square_box(box, config.face_margin, width, height)
        entries.append(FaceEntry(timestamp=0.0, box=expanded, score=face.score))
    entries.sort(key=lambda e: (e.timestamp, e.box.x0, e.box.y0))
    clusters = tuple(
        ClusterEntry(cluster_id=k, cluster_score=e.score, faces=(e,))
        for k, e in enumerate(entries)
    )
    shot_score = max((c.cluster_score for c in clusters), default=None)
    expected = ScoreReport(
        media_kind=IMAGE,
        overall=shot_score,
        shots=(ShotEntry(index=0, start=0.0, end=0.0, sampled_frames=1,
                         shot_score=shot_score, clusters=clusters, gallery_ref=None),),
        pipeline_version=pipeline_version,
        no_faces_detected=shot_score is None,
    )
    lookup = {color_key(parse_color(f.color)): f.score for f in faces}
    return Fixture(
        media=media,
        shots=(),
        boundaries=(),
        planted_boxes=(tuple(boxes),),
        expected_report=expected,
        lookup=lookup,
    )


def compare_reports(expected: ScoreReport, actual: ScoreReport,
                    score_tol: float = 1e-9) -> list[str]:
    """Structural comparison; returns human-readable differences (empty = match).

    Boundaries, boxes, timestamps, and counts must match exactly; scores
    within ``score_tol``. Gallery references are ignored since the
    expectation cannot know storage locations.
    """
    diffs: list[str] = []

    def close(a: Optional[float], b: Optional[float]) -> bool:
        if a is None or b is None:
            return a is None and b is None
        return abs(a - b) <= score_tol

    if expected.media_kind != actual.media_kind:
        diffs.append(f"media_kind: {expected.media_kind} != {actual.media_kind}")
    if expected.pipeline_version != actual.pipeline_version:
        diffs.append(f"pipeline_version: {expected.pipeline_version} != {actual.pipeline_version}")
    if expected.no_faces_detected != actual.no_faces_detected:
        diffs.append("no_faces_detected flags differ")
    if not close(expected.overall, actual.overall):
        diffs.append(f"overall: {expected.overall} != {actual.overall}")
    if len(expected.shots) != len(actual.shots):
        diffs.append(f"shot count: {len(expected.shots)} != {len(actual.shots)}")
        return diffs
    for es, as_ in zip(expected.shots, actual.shots):
        tag = f"shot {es.index}"
        if (es.index, es.start, es.end) != (as_.index, as_.start, as_.end):
            diffs.append(f"{tag}: interval ({es.start}, {es.end}) != ({as_.start}, {as_.end})")
        if es.sampled_frames != as_.sampled_frames:
            diffs.append(f"{tag}: sampled_frames {es.sampled_frames} != {as_.sampled_frames}")
        if not close(es.shot_score, as_.shot_score):
            diffs.append(f"{tag}: shot_score {es.shot_score} != {as_.shot_score}")
        if len(es.clusters) != len(as_.clusters):
            diffs.append(f"{tag}: cluster count {len(es.clusters)} != {len(as_.clusters)}")
            continue
        for ec, ac in zip(es.clusters, as_.clusters):
            ctag = f"{tag} cluster {ec.cluster_id}"
            if ec.cluster_id != ac.cluster_id:
                diffs.append(f"{ctag}: id {ec.cluster_id} != {ac.cluster_id}")
            if not close(ec.cluster_score, ac.cluster_score):
                diffs.append(f"{ctag}: score {ec.cluster_score} != {ac.cluster_score}")
            if len(ec.faces) != len(ac.faces):
                diffs.append(f"{ctag}: face count {len(ec.faces)} != {len(ac.faces)}")
                continue
            for ef, af in zip(ec.faces, ac.faces):
                if ef.timestamp != af.timestamp:
                    diffs.append(f"{ctag}: face timestamp {ef.timestamp} != {af.timestamp}")
                if ef.box != af.box:
                    diffs.append(f"{ctag}: face box {ef.box} != {af.box}")
                if not close(ef.score, af.score):
                    diffs.append(f"{ctag}: face score {ef.score} != {af.score}")
    return diffs
