"""Face preprocessing and ensemble scoring.

Crops are stretched to a square input tensor and normalized with the
standard ImageNet channel statistics; an ensemble of pluggable backends
produces one probability per face, combined by an unweighted mean.
A remote backend speaks a small HTTP wire protocol so trained models can
be served out of process without touching the pipeline.
"""

from __future__ import annotations

import base64
import json
import logging
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional, Protocol, Sequence

import cv2
import numpy as np

from .errors import BackendError, InvariantViolation
from .types import PROBLEM_CONTENT_TYPE, PipelineConfig, ProblemDetail

logger = logging.getLogger(__name__)

SCORE_BATCH_CAP = 32
SCORE_ENDPOINT = "/v1/score"


@dataclass(frozen=True)
class FaceTensor:
    """Channel-major float32 tensor of shape (3, side, side)."""

    data: np.ndarray

    def __post_init__(self) -> None:
        d = self.data
        if not (isinstance(d, np.ndarray) and d.ndim == 3 and d.shape[0] == 3
                and d.shape[1] == d.shape[2]):
            raise InvariantViolation("face tensor must have shape (3, S, S)")
        if not np.isfinite(d).all():
            raise InvariantViolation("face tensor must be finite")

    @property
    def side(self) -> int:
        return int(self.data.shape[1])


class ScorerBackend(Protocol):
    """One model of the ensemble: batched tensors in, probabilities out."""

    @property
    def name(self) -> str: ...

    def score_batch(self, tensors: Sequence[FaceTensor]) -> list[float]: ...


def preprocess_face(
    crop: np.ndarray,
    input_side: int,
    mean: tuple[float, float, float] = PipelineConfig().imagenet_mean,
    std: tuple[float, float, float] = PipelineConfig().imagenet_std,
) -> FaceTensor:
    """Bilinear-stretch a crop to (side, side), scale to [0,1], normalize.

    Aspect ratio is not preserved; padding-free stretch keeps the
    reference path simple and is flagged for anyone plugging in weights
    trained with letterboxing.
    """
    if crop.size == 0 or crop.shape[0] == 0 or crop.shape[1] == 0:
        raise InvariantViolation("cannot preprocess a zero-area crop")
    resized = cv2.resize(crop, (input_side, input_side), interpolation=cv2.INTER_LINEAR)
    scaled = resized.astype(np.float32) / np.float32(255.0)
    normalized = (scaled - np.asarray(mean, dtype=np.float32)) / np.asarray(std, dtype=np.float32)
    return FaceTensor(data=np.ascontiguousarray(normalized.transpose(2, 0, 1)))


def score_faces(
    tensors: Sequence[FaceTensor],
    ensemble: Sequence[ScorerBackend],
    batch_cap: int = SCORE_BATCH_CAP,
) -> list[float]:
    """Mean probability over all backends per face, preserving input order.

    Each backend sees batches of at most ``batch_cap`` tensors. Any
    backend failure aborts the whole call with a problem naming the
    backend.
    """
    if not ensemble:
        raise InvariantViolation("ensemble must contain at least one backend")
    if not tensors:
        return []
    per_backend: list[list[float]] = []
    for backend in ensemble:
        scores: list[float] = []
        for lo in range(0, len(tensors), batch_cap):
            chunk = tensors[lo:lo + batch_cap]
            try:
                out = backend.score_batch(chunk)
            except BackendError:
                raise
            except Exception as exc:
                raise BackendError(
                    f"backend {backend.name!r} failed: {exc}", backend=backend.name) from exc
            if len(out) != len(chunk):
                raise BackendError(
                    f"backend {backend.name!r} returned {len(out)} scores for "
                    f"{len(chunk)} tensors", backend=backend.name)
            scores.extend(float(s) for s in out)
        per_backend.append(scores)
    k = len(per_backend)
    return [sum(scores[i] for scores in per_backend) / k for i in range(len(tensors))]


class ConstantBackend:
    """Returns one fixed probability for every face."""

    def __init__(self, value: float, name: str = "constant"):
        if not 0.0 <= value <= 1.0:
            raise InvariantViolation("constant backend value must lie in [0, 1]")
        self.value = value
        self._name = name

    @property
    def name(self) -> str:
        return self._name

    def score_batch(self, tensors: Sequence[FaceTensor]) -> list[float]:
        return [self.value] * len(tensors)


def parse_color(text: str) -> tuple[int, int, int]:
    """Parse '#rrggbb' or a reserved palette name to an RGB tuple."""
    from .faces import RESERVED_PALETTE

    if text in RESERVED_PALETTE:
        return RESERVED_PALETTE[text]
    t = text.lstrip("#")
    if len(t) != 6:
        raise InvariantViolation(f"not a color: {text!r}")
    return (int(t[0:2], 16), int(t[2:4], 16), int(t[4:6], 16))


def color_key(rgb: tuple[int, int, int]) -> str:
    return "#{:02x}{:02x}{:02x}".format(*rgb)


class ColorLookupBackend:
    """Maps the dominant central color of a face tensor to a configured score.

    The central third of the tensor sits inside the planted marker even
    after the 1.3 margin expansion, so the lookup sees the pure marker
    color. Unknown colors fall back to ``default``.
    """

    def __init__(self, color_scores: dict[str, float], default: float = 0.0,
                 name: str = "lookup",
                 mean: tuple[float, float, float] = PipelineConfig().imagenet_mean,
                 std: tuple[float, float, float] = PipelineConfig().imagenet_std):
        self.color_scores = {color_key(parse_color(c)): float(s)
                             for c, s in color_scores.items()}
        self.default = default
        self._name = name
        self._mean = np.asarray(mean, dtype=np.float32)
        self._std = np.asarray(std, dtype=np.float32)

    @property
    def name(self) -> str:
        return self._name

    def _center_color(self, tensor: FaceTensor) -> tuple[int, int, int]:
        s = tensor.side
        lo, hi = s // 3, max(s // 3 + 1, (2 * s) // 3)
        patch = tensor.data[:, lo:hi, lo:hi].mean(axis=(1, 2))
        rgb = (patch * self._std + self._mean) * 255.0
        return tuple(int(round(float(min(max(v, 0.0), 255.0)))) for v in rgb)  # type: ignore[return-value]

    def score_batch(self, tensors: Sequence[FaceTensor]) -> list[float]:
        out = []
        for tensor in tensors:
            observed = np.asarray(self._center_color(tensor), dtype=np.float64)
            best_key, best_dist = None, float("inf")
            for key in self.color_scores:
                target = np.asarray(parse_color(key), dtype=np.float64)
                dist = float(np.abs(observed - target).max())
                if dist < best_dist:
                    best_key, best_dist = key, dist
            if best_key is None or best_dist > 64:
                out.append(self.default)
            else:
                out.append(self.color_scores[best_key])
        return out


# --- remote scorer wire protocol --------------------------------------------


def tensors_to_payload(tensors: Sequence[FaceTensor]) -> dict:
    """Wire request: shape plus base64 of little-endian float32, row-major."""
    side = tensors[0].side
    batch = np.stack([t.data for t in tensors]).astype("<f4")
    return {
        "shape": [len(tensors), 3, side, side],
        "data": base64.b64encode(batch.tobytes(order="C")).decode("ascii"),
    }


def payload_to_array(payload: dict) -> np.ndarray:
    """Decode a wire request back to an (N, 3, S, S) float32 array."""
    shape = tuple(int(x) for x in payload["shape"])
    if len(shape) != 4 or shape[1] != 3 or shape[2] != shape[3]:
        raise InvariantViolation(f"bad tensor shape on the wire: {shape}")
    raw = base64.b64decode(payload["data"])
    expected = int(np.prod(shape)) * 4
    if len(raw) != expected:
        raise InvariantViolation(
            f"wire payload carries {len(raw)} bytes, expected {expected}")
    return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float32)


class RemoteScorerBackend:
    """Client for a scorer served over HTTP at POST {base_url}/v1/score."""

    def __init__(self, base_url: str, name: Optional[str] = None, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self._name = name or f"remote:{self.base_url}"
        self.timeout = timeout

    @property
    def name(self) -> str:
        return self._name

    def score_batch(self, tensors: Sequence[FaceTensor]) -> list[float]:
        import httpx

        try:
            response = httpx.post(
                self.base_url + SCORE_ENDPOINT,
                json=tensors_to_payload(tensors),
                timeout=self.timeout,
            )
        except httpx.HTTPError as exc:
            raise BackendError(f"remote scorer {self.base_url} unreachable: {exc}",
                               backend=self.name) from exc
        if response.status_code != 200:
            detail = f"remote scorer returned HTTP {response.status_code}"
            try:
                problem = ProblemDetail.from_json_obj(response.json())
                detail = f"{detail}: {problem.title}: {problem.detail}"
            except Exception:
                pass
            raise BackendError(detail, backend=self.name)
        scores = response.json().get("scores")
        if not isinstance(scores, list) or len(scores) != len(tensors):
            raise BackendError(
                f"remote scorer returned a malformed score list", backend=self.name)
        return [float(s) for s in scores]


class _ScorerRequestHandler(BaseHTTPRequestHandler):
    backend: ScorerBackend

    def log_message(self, fmt, *args):  # quiet test servers
        logger.debug("scorer server: " + fmt, *args)

    def _send_problem(self, status: int, title: str, detail: str) -> None:
        body = ProblemDetail(
            type="urn:dfdetect:problem:scorer-protocol",
            title=title, status=status, detail=detail,
            instance=self.path,
        ).to_json_bytes()
        self.send_response(status)
        self.send_header("Content-Type", PROBLEM_CONTENT_TYPE)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        if self.path != SCORE_ENDPOINT:
            self._send_problem(404, "Not Found", f"no handler for {self.path}")
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            payload = json.loads(self.rfile.read(length))
            batch = payload_to_array(payload)
            tensors = [FaceTensor(data=batch[i]) for i in range(batch.shape[0])]
            scores = self.backend.score_batch(tensors)
        except Exception as exc:
            self._send_problem(400, "Bad Score Request", str(exc))
            return
        body = json.dumps({"scores": [float(s) for s in scores]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


def serve_scorer(backend: ScorerBackend, host: str = "127.0.0.1",
                 port: int = 0) -> ThreadingHTTPServer:
    """Expose a backend over the wire protocol; caller controls the thread.

    Returns the bound server; ``server.server_address`` carries the
    chosen port when 0 was requested.
    """
    handler = type("BoundScorerHandler", (_ScorerRequestHandler,), {"backend": backend})
    server = ThreadingHTTPServer((host, port), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
