"""Shot gallery rendering: keyframe collages with score-colored borders."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from PIL import Image, ImageDraw

from .errors import ValidationProblem
from .types import BoundingBox

BORDER_PX = 6
FACE_OUTLINE_PX = 2
THUMB_MAX_SIDE = 192
CANVAS_BG = (16, 16, 16)


@dataclass(frozen=True)
class GalleryKeyframe:
    """One keyframe plus the scored face boxes found in it."""

    pixels: np.ndarray
    faces: tuple[tuple[BoundingBox, float], ...] = ()

    @property
    def score(self) -> float:
        """Keyframe score drives the border color: max face score, 0 if none."""
        return max((s for _, s in self.faces), default=0.0)


def score_border_color(score: float) -> tuple[int, int, int]:
    """Linear green-to-red map: (round(255 * s), round(255 * (1 - s)), 0)."""
    if not 0.0 <= score <= 1.0:
        raise ValidationProblem(f"score out of range for border color: {score}")

    def round_half_up(x: float) -> int:
        return int(math.floor(x + 0.5))

    return (round_half_up(255.0 * score), round_half_up(255.0 * (1.0 - score)), 0)


def _thumb_size(w: int, h: int, max_side: int) -> tuple[int, int]:
    if max(w, h) <= max_side:
        return w, h
    if w >= h:
        return max_side, max(1, (h * max_side) // w)
    return max(1, (w * max_side) // h), max_side


def render_gallery(keyframes: Sequence[GalleryKeyframe],
                   thumb_max_side: int = THUMB_MAX_SIDE) -> bytes:
    """Row-major collage with ceil(sqrt(n)) columns; deterministic PNG bytes.

    Each keyframe gets a 6 px border colored by its score and its face
    boxes outlined in their own score colors.
    """
    if not keyframes:
        raise ValidationProblem("gallery needs at least one keyframe")
    n = len(keyframes)
    cols = math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)

    sizes = [_thumb_size(k.pixels.shape[1], k.pixels.shape[0], thumb_max_side)
             for k in keyframes]
    cell_w = max(w for w, _ in sizes) + 2 * BORDER_PX
    cell_h = max(h for _, h in sizes) + 2 * BORDER_PX

    canvas = Image.new("RGB", (cols * cell_w, rows * cell_h), CANVAS_BG)
    for i, (keyframe, (tw, th)) in enumerate(zip(keyframes, sizes)):
        col, row = i % cols, i // cols
        ox, oy = col * cell_w, row * cell_h
        border = score_border_color(keyframe.score)

        frame = Image.new("RGB", (tw + 2 * BORDER_PX, th + 2 * BORDER_PX), border)
        thumb = Image.fromarray(keyframe.pixels)
        src_w, src_h = thumb.size
        if (tw, th) != (src_w, src_h):
            thumb = thumb.resize((tw, th), Image.BILINEAR)
        frame.paste(thumb, (BORDER_PX, BORDER_PX))

        draw = ImageDraw.Draw(frame)
        for box, score in keyframe.faces:
            sx = tw / src_w
            sy = th / src_h
            x0 = BORDER_PX + int(box.x0 * sx)
            y0 = BORDER_PX + int(box.y0 * sy)
            x1 = BORDER_PX + max(int(box.x1 * sx) - 1, x0)
            y1 = BORDER_PX + max(int(box.y1 * sy) - 1, y0)
            draw.rectangle([x0, y0, x1, y1],
                           outline=score_border_color(score), width=FACE_OUTLINE_PX)

        canvas.paste(frame, (ox + (cell_w - frame.size[0]) // 2,
                             oy + (cell_h - frame.size[1]) // 2))

    buf = io.BytesIO()
    canvas.save(buf, format="PNG")
    return buf.getvalue()
