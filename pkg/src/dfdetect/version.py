"""Service version handling (x.y.z scheme)."""

from __future__ import annotations

import re
from dataclasses import dataclass

_VERSION_RE = re.compile(r"^(\d+)\.(\d+)\.(\d+)$")


@dataclass(frozen=True)
class ServiceVersion:
    """Three-component version.

    x bumps on backward-incompatible output changes, y on pipeline
    changes, z on minor changes and bug fixes.
    """

    x: int
    y: int
    z: int

    def __post_init__(self) -> None:
        if min(self.x, self.y, self.z) < 0:
            raise ValueError("version components must be non-negative")

    def __str__(self) -> str:
        return f"{self.x}.{self.y}.{self.z}"

    @classmethod
    def parse(cls, text: str) -> "ServiceVersion":
        m = _VERSION_RE.match(text.strip())
        if m is None:
            raise ValueError(f"not an x.y.z version string: {text!r}")
        return cls(int(m.group(1)), int(m.group(2)), int(m.group(3)))


SERVICE_VERSION = ServiceVersion(3, 0, 0)
