"""Media acquisition and decoding.

Downloads a URL through pluggable resolvers (optionally via an outbound
proxy), sniffs the media kind from content rather than file extension,
and exposes frame-accurate decoding on top of OpenCV.
"""

from __future__ import annotations

import logging
import tempfile
from pathlib import Path
from typing import Iterable, Optional, Protocol
from urllib.parse import urlsplit, unquote
from urllib.request import url2pathname

import cv2
import numpy as np

from .errors import (
    DownloadError,
    MediaDecodeError,
    MediaTooLargeError,
    NoResolverError,
    ValidationProblem,
)
from .types import IMAGE, VIDEO, MediaKind, MediaResource

logger = logging.getLogger(__name__)

DEFAULT_MAX_DOWNLOAD_BYTES = 512 * 1024 * 1024

_IMAGE_FORMATS = {"png", "jpeg", "gif", "bmp", "webp"}
_VIDEO_FORMATS = {"avi", "mp4", "matroska"}


def sniff_media_format(head: bytes) -> str:
    """Identify a container format from magic bytes; raises for unknown content."""
    if head.startswith(b"\x89PNG\r\n\x1a\n"):
        return "png"
    if head.startswith(b"\xff\xd8\xff"):
        return "jpeg"
    if head.startswith(b"GIF87a") or head.startswith(b"GIF89a"):
        return "gif"
    if head.startswith(b"BM"):
        return "bmp"
    if head[:4] == b"RIFF" and head[8:12] == b"WEBP":
        return "webp"
    if head[:4] == b"RIFF" and head[8:12] == b"AVI ":
        return "avi"
    if len(head) >= 12 and head[4:8] == b"ftyp":
        return "mp4"
    if head.startswith(b"\x1a\x45\xdf\xa3"):
        return "matroska"
    raise MediaDecodeError("unrecognized media content (unknown magic bytes)")


def sniff_media_kind(head: bytes) -> MediaKind:
    fmt = sniff_media_format(head)
    return IMAGE if fmt in _IMAGE_FORMATS else VIDEO


def read_image(path: str) -> np.ndarray:
    """Decode an image file to an RGB uint8 array."""
    bgr = cv2.imread(path, cv2.IMREAD_COLOR)
    if bgr is None:
        raise MediaDecodeError(f"cannot decode image: {path}")
    return cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB)


class VideoReader:
    """Frame-accurate sequential reader over a video file.

    One instance per thread; cv2.VideoCapture handles are not shareable.
    """

    def __init__(self, path: str):
        self.path = path
        self._cap = cv2.VideoCapture(path)
        if not self._cap.isOpened():
            raise MediaDecodeError(f"cannot open video: {path}")
        self.fps = float(self._cap.get(cv2.CAP_PROP_FPS))
        self.frame_count = int(self._cap.get(cv2.CAP_PROP_FRAME_COUNT))
        self.width = int(self._cap.get(cv2.CAP_PROP_FRAME_WIDTH))
        self.height = int(self._cap.get(cv2.CAP_PROP_FRAME_HEIGHT))
        if self.fps <= 0 or self.frame_count <= 0:
            self._cap.release()
            raise MediaDecodeError(f"video has no decodable timeline: {path}")
        self._next_index = 0

    def close(self) -> None:
        self._cap.release()

    def __enter__(self) -> "VideoReader":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def read_frames(self, indices: Iterable[int]) -> dict[int, np.ndarray]:
        """Decode the requested frame indices (RGB), single forward pass."""
        wanted = sorted(set(int(i) for i in indices))
        if not wanted:
            return {}
        if wanted[0] < 0 or wanted[-1] >= self.frame_count:
            raise MediaDecodeError(
                f"frame index out of range: {wanted[-1]} of {self.frame_count}")
        if wanted[0] < self._next_index:
            self._cap.set(cv2.CAP_PROP_POS_FRAMES, 0)
            self._next_index = 0
        out: dict[int, np.ndarray] = {}
        for idx in wanted:
            while self._next_index < idx:
                if not self._cap.grab():
                    raise MediaDecodeError(
                        f"decode failed at frame {self._next_index} "
                        f"(t={self._next_index / self.fps:.3f}s) of {self.path}")
                self._next_index += 1
            ok, bgr = self._cap.read()
            if not ok:
                raise MediaDecodeError(
                    f"decode failed at frame {idx} (t={idx / self.fps:.3f}s) of {self.path}")
            self._next_index = idx + 1
            out[idx] = cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB)
        return out


def probe_media(path: str, source_url: str = "") -> MediaResource:
    """Build a MediaResource for a local file, sniffing kind from content."""
    p = Path(path)
    if not p.is_file():
        raise ValidationProblem(f"no such file: {path}")
    with open(p, "rb") as fh:
        head = fh.read(16)
    kind = sniff_media_kind(head)
    if kind == IMAGE:
        pixels = read_image(str(p))
        h, w = pixels.shape[:2]
        return MediaResource(kind=IMAGE, source_url=source_url or str(p),
                             local_ref=str(p), width=w, height=h)
    with VideoReader(str(p)) as reader:
        duration = reader.frame_count / reader.fps
        return MediaResource(
            kind=VIDEO,
            source_url=source_url or str(p),
            local_ref=str(p),
            width=reader.width,
            height=reader.height,
            fps=reader.fps,
            duration=duration,
            frame_count=reader.frame_count,
        )


class MediaResolver(Protocol):
    """Maps a platform URL to a directly fetchable location."""

    def accepts(self, url: str) -> bool: ...

    def resolve(self, url: str) -> str: ...


class LocalFileResolver:
    """Handles file:// URLs and bare filesystem paths."""

    def accepts(self, url: str) -> bool:
        scheme = urlsplit(url).scheme
        return scheme in ("", "file")

    def resolve(self, url: str) -> str:
        parts = urlsplit(url)
        if parts.scheme == "file":
            return url2pathname(unquote(parts.path))
        return url


class DirectHttpResolver:
    """Passes direct http(s) locations through unchanged."""

    def accepts(self, url: str) -> bool:
        return urlsplit(url).scheme in ("http", "https")

    def resolve(self, url: str) -> str:
        return url


def default_resolvers() -> list[MediaResolver]:
    return [LocalFileResolver(), DirectHttpResolver()]


def _fetch_http(url: str, dest: Path, proxy: Optional[str], max_bytes: int) -> None:
    import httpx

    try:
        with httpx.Client(proxy=proxy, follow_redirects=True, timeout=60.0) as client:
            with client.stream("GET", url) as response:
                if response.status_code != 200:
                    raise DownloadError(
                        f"fetch of {url} returned HTTP {response.status_code}")
                declared = response.headers.get("content-length")
                if declared is not None and int(declared) > max_bytes:
                    raise MediaTooLargeError(
                        f"media at {url} declares {declared} bytes (limit {max_bytes})")
                written = 0
                with open(dest, "wb") as fh:
                    for chunk in response.iter_bytes():
                        written += len(chunk)
                        if written > max_bytes:
                            raise MediaTooLargeError(
                                f"media at {url} exceeds {max_bytes} bytes")
                        fh.write(chunk)
    except (MediaTooLargeError, DownloadError):
        raise
    except httpx.HTTPError as exc:
        raise DownloadError(f"fetch of {url} failed: {exc}") from exc


def download_media(
    url: str,
    resolvers: Optional[list[MediaResolver]] = None,
    proxy: Optional[str] = None,
    dest_dir: Optional[str] = None,
    max_bytes: int = DEFAULT_MAX_DOWNLOAD_BYTES,
) -> MediaResource:
    """Resolve and fetch a URL, returning decode-ready media.

    Local files are used in place; remote content is streamed to
    ``dest_dir`` (a fresh temp dir when unset) honoring the proxy and the
    size cap. The media kind comes from magic bytes, never the extension.
    """
    resolvers = default_resolvers() if resolvers is None else resolvers
    resolver = next((r for r in resolvers if r.accepts(url)), None)
    if resolver is None:
        raise NoResolverError(f"no resolver accepts URL: {url}")
    location = resolver.resolve(url)

    scheme = urlsplit(location).scheme
    if scheme in ("http", "https"):
        if dest_dir is None:
            dest_dir = tempfile.mkdtemp(prefix="dfdetect-dl-")
        dest = Path(dest_dir) / "download.bin"
        dest.parent.mkdir(parents=True, exist_ok=True)
        _fetch_http(location, dest, proxy, max_bytes)
        local_path = str(dest)
    else:
        local_path = location
        p = Path(local_path)
        if not p.is_file():
            raise ValidationProblem(f"no such file: {local_path}")
        if p.stat().st_size > max_bytes:
            raise MediaTooLargeError(
                f"{local_path} is {p.stat().st_size} bytes (limit {max_bytes})")

    return probe_media(local_path, source_url=url)
