"""Mouth centroid from portrait keypoints and the Y-T slice through that column."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .media import FrameSequence, normalize_frame, resize_image

DETECTED = "detected"
FALLBACK = "fallback"


@dataclass(frozen=True)
class KeypointSet:
    """Mouth keypoints detected on the source portrait; empty = detection failed."""

    image_w: int
    image_h: int
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if self.image_w < 1 or self.image_h < 1:
            raise ValueError("portrait dimensions must be >= 1")
        for x, y in self.points:
            if not (0 <= x < self.image_w and 0 <= y < self.image_h):
                raise ValueError(f"keypoint ({x}, {y}) outside {self.image_w}x{self.image_h} portrait")


@dataclass(frozen=True)
class MouthCenter:
    x: float
    y: float
    source: str  # DETECTED or FALLBACK

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)) or self.x < 0 or self.y < 0:
            raise ValueError(f"mouth center ({self.x}, {self.y}) must be finite and non-negative")


def load_keypoints(path: str | Path) -> KeypointSet:
    """Read a per-clip keypoint JSON file ({image_w, image_h, points})."""
    data = json.loads(Path(path).read_text())
    return KeypointSet(
        image_w=int(data["image_w"]),
        image_h=int(data["image_h"]),
        points=tuple((float(x), float(y)) for x, y in data["points"]),
    )


def mouth_centroid(kps: KeypointSet) -> MouthCenter:
    """Arithmetic mean of the mouth keypoints.

    When detection failed (no points) the centroid is pinned to the image
    midpoint; the x half-width fallback is what the slicing column relies on.
    """
    if not kps.points:
        return MouthCenter(x=kps.image_w / 2.0, y=kps.image_h / 2.0, source=FALLBACK)
    pts = np.asarray(kps.points, dtype=np.float64)
    cx, cy = pts.mean(axis=0)
    return MouthCenter(x=float(cx), y=float(cy), source=DETECTED)


def scale_center(center: MouthCenter, src_resolution: tuple[int, int],
                 dst_resolution: tuple[int, int]) -> MouthCenter:
    """Map a centroid from portrait resolution to video resolution.

    Scaling is per-axis, which reduces to a single ratio for the usual square
    portraits and videos.
    """
    src_w, src_h = src_resolution
    dst_w, dst_h = dst_resolution
    if min(src_w, src_h, dst_w, dst_h) < 1:
        raise ValueError("resolutions must be >= 1")
    return MouthCenter(
        x=center.x * (dst_w / src_w),
        y=center.y * (dst_h / src_h),
        source=center.source,
    )


def round_half_up(v: float) -> int:
    return int(np.floor(v + 0.5))


def extract_yt_slice(video: FrameSequence, center_x: float) -> np.ndarray:
    """Extract the pixel column at center_x from every frame.

    Returns a normalized (H, T, 3) image: column t holds frame t's pixels at
    the rounded, bounds-clamped column index.
    """
    col = min(max(round_half_up(center_x), 0), video.width - 1)
    # (T, H, 3) -> (H, T, 3)
    return normalize_frame(video.frames[:, :, col, :]).transpose(1, 0, 2)


def slice_to_image(slice_img: np.ndarray, first: np.ndarray) -> np.ndarray:
    """Resize a Y-T slice to the first frame's resolution."""
    return resize_image(slice_img, first.shape[1], first.shape[0])
