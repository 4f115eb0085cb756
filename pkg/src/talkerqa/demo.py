"""Synthetic talking-head study generator.

Renders small procedural "talking head" clips — a textured face whose mouth
opens and closes in sync with an amplitude-modulated tone — then applies
graded degradations (Gaussian blur, additive pixel noise, audio delay) and
assigns each clip a ground-truth quality score that decreases monotonically
with every degradation level. The output directory layout matches what the
extraction pipeline and the study service consume, so the generator doubles
as an end-to-end fixture factory and a demo dataset builder.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .media import AudioTrack, ClipBundle, FrameSequence, save_clip
from .slicing import KeypointSet

BLUR_LEVELS = 5      # blur sigma = level (0..4) pixels
NOISE_LEVELS = 5     # noise sigma = 6 * level on the 0..255 scale
MAX_AV_OFFSET = 10   # audio delay in whole video frames

# ground-truth quality = 5 - sum of weighted, normalized degradation levels.
# Audio delay gets a small weight: the sync scorer searches over offsets, so a
# constant delay inside the search window barely moves the recovered scores.
BLUR_WEIGHT = 2.0
NOISE_WEIGHT = 2.2
OFFSET_WEIGHT = 0.8


@dataclass(frozen=True)
class DegradationSpec:
    blur_level: int
    noise_level: int
    av_offset: int

    def __post_init__(self):
        if not 0 <= self.blur_level < BLUR_LEVELS:
            raise ValueError(f"blur_level must be 0..{BLUR_LEVELS - 1}")
        if not 0 <= self.noise_level < NOISE_LEVELS:
            raise ValueError(f"noise_level must be 0..{NOISE_LEVELS - 1}")
        if not 0 <= self.av_offset <= MAX_AV_OFFSET:
            raise ValueError(f"av_offset must be 0..{MAX_AV_OFFSET}")


@dataclass(frozen=True)
class StudyPaths:
    root: Path
    dataset_dir: Path
    keypoints_dir: Path
    mos_csv: Path
    specs: dict[str, DegradationSpec]


def ground_truth_quality(spec: DegradationSpec) -> float:
    """Fixed monotone map from degradation levels to a [0, 5] quality score."""
    penalty = (
        BLUR_WEIGHT * spec.blur_level / (BLUR_LEVELS - 1)
        + NOISE_WEIGHT * spec.noise_level / (NOISE_LEVELS - 1)
        + OFFSET_WEIGHT * spec.av_offset / MAX_AV_OFFSET
    )
    return 5.0 - penalty


def _pid_style(pid: str, width: int, height: int) -> dict:
    """Deterministic per-pid face styling so distinct pids look distinct."""
    # seed from the pid text so the same pid renders the same face in any process
    rng = np.random.default_rng(np.frombuffer(pid.encode().ljust(8, b"\0")[:8], dtype=np.uint64))
    blobs = gaussian_filter(rng.normal(0.0, 1.0, size=(height, width)), sigma=6.0)
    blobs = 25.0 * blobs / (np.abs(blobs).max() + 1e-9)
    return {
        "skin": np.array([190 + rng.integers(-25, 25),
                          150 + rng.integers(-25, 25),
                          120 + rng.integers(-25, 25)], dtype=np.float64),
        "bg": float(rng.uniform(40, 90)),
        "bg_slope_x": float(rng.uniform(-40, 40)),
        "bg_slope_y": float(rng.uniform(-40, 40)),
        "face_cx": width / 2 + float(rng.uniform(-2, 2)),
        "face_cy": height * 0.45 + float(rng.uniform(-2, 2)),
        "face_rx": width * 0.32,
        "face_ry": height * 0.40,
        "blobs": blobs,
    }


def _render_frame(width: int, height: int, style: dict, openness: float) -> np.ndarray:
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    base = (style["bg"] + style["bg_slope_x"] * xx / width
            + style["bg_slope_y"] * yy / height + style["blobs"])
    frame = np.stack([base, base * 0.95, base * 1.05], axis=-1)

    cx, cy = style["face_cx"], style["face_cy"]
    face = ((xx - cx) / style["face_rx"]) ** 2 + ((yy - cy) / style["face_ry"]) ** 2 <= 1.0
    frame[face] = style["skin"] + style["blobs"][face, None] * 0.5

    for ex in (cx - width * 0.12, cx + width * 0.12):
        eye = (xx - ex) ** 2 + (yy - (cy - height * 0.08)) ** 2 <= (width * 0.035) ** 2
        frame[eye] = (40.0, 40.0, 60.0)

    mouth_cy = cy + height * 0.22
    mouth_w = width * 0.18
    mouth_h = max(1.0, openness * height * 0.09)
    mouth = (np.abs(xx - cx) <= mouth_w) & (np.abs(yy - mouth_cy) <= mouth_h)
    frame[mouth] = (90.0, 25.0, 35.0)

    return np.clip(frame, 0, 255)


def _mouth_keypoints(style: dict, width: int, height: int,
                     rng: np.random.Generator, scale: int = 2) -> KeypointSet:
    """Jittered mouth-corner keypoints, reported at `scale`x the video resolution."""
    cx, cy = style["face_cx"], style["face_cy"] + height * 0.22
    mouth_w, mouth_h = width * 0.18, height * 0.09
    points = []
    for dx, dy in ((-mouth_w, 0), (mouth_w, 0), (0, -mouth_h), (0, mouth_h)):
        px = np.clip((cx + dx + rng.uniform(-0.5, 0.5)) * scale, 0, width * scale - 1)
        py = np.clip((cy + dy + rng.uniform(-0.5, 0.5)) * scale, 0, height * scale - 1)
        points.append((float(px), float(py)))
    return KeypointSet(image_w=width * scale, image_h=height * scale, points=tuple(points))


def make_clip_bundle(
    clip_id: str,
    pid: str,
    spec: DegradationSpec,
    seed: int,
    width: int = 64,
    height: int = 64,
    n_frames: int = 30,
    fps: float = 10.0,
    sample_rate: int = 8000,
) -> tuple[ClipBundle, KeypointSet]:
    """One synthetic clip plus its mouth keypoints."""
    rng = np.random.default_rng(seed)
    style = _pid_style(pid, width, height)

    freq = rng.uniform(0.8, 1.6)
    phase = rng.uniform(0, 2 * np.pi)
    t = np.arange(n_frames) / fps
    openness = 0.15 + 0.85 * (0.5 + 0.5 * np.sin(2 * np.pi * freq * t + phase))
    openness = np.clip(openness + rng.normal(0, 0.05, n_frames), 0.05, 1.0)

    frames = np.empty((n_frames, height, width, 3), dtype=np.uint8)
    for i in range(n_frames):
        img = _render_frame(width, height, style, float(openness[i]))
        if spec.blur_level > 0:
            img = gaussian_filter(img, sigma=(spec.blur_level, spec.blur_level, 0))
        if spec.noise_level > 0:
            img = img + rng.normal(0.0, 6.0 * spec.noise_level, img.shape)
        frames[i] = np.clip(img, 0, 255).astype(np.uint8)

    samples_per_frame = int(round(sample_rate / fps))
    n_samples = n_frames * samples_per_frame
    envelope = np.repeat(openness, samples_per_frame)
    tone = np.sin(2 * np.pi * 440.0 * np.arange(n_samples) / sample_rate)
    audio = 0.7 * envelope * tone + 0.002 * rng.normal(0.0, 1.0, n_samples)
    if spec.av_offset > 0:
        delay = spec.av_offset * samples_per_frame
        audio = np.concatenate([np.zeros(delay), audio])[:n_samples]
    audio = np.clip(audio, -1.0, 1.0)

    bundle = ClipBundle(
        clip_id=clip_id,
        pid=pid,
        talker="synthetic-talker",
        t2i="synthetic-t2i",
        video=FrameSequence(frames=frames, fps=fps),
        audio=AudioTrack(samples=audio, sample_rate=sample_rate),
    )
    return bundle, _mouth_keypoints(style, width, height, rng)


def _distortion_flags(spec: DegradationSpec) -> tuple[int, ...]:
    """Ground-truth flags in taxonomy order (BL, NI, AF, LLM, MT, DB, MK, X1..X3)."""
    flags = [0] * 10
    flags[0] = 1 if spec.blur_level >= 3 else 0
    flags[1] = 1 if spec.noise_level >= 3 else 0
    return tuple(flags)


def generate_study(
    out_dir: str | Path,
    n_clips: int = 60,
    n_pids: int = 14,
    seed: int = 7,
    width: int = 64,
    height: int = 64,
    n_frames: int = 30,
    fps: float = 10.0,
) -> StudyPaths:
    """Write a full synthetic study: dataset/, keypoints/, and ground-truth mos.csv.

    Degradation levels are drawn by a seeded RNG, so the same seed always
    yields the same study byte-for-byte.
    """
    out = Path(out_dir)
    dataset_dir = out / "dataset"
    keypoints_dir = out / "keypoints"
    dataset_dir.mkdir(parents=True, exist_ok=True)
    keypoints_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(seed)
    specs: dict[str, DegradationSpec] = {}
    rows = ["clip_id,mos,n_raters,BL,NI,AF,LLM,MT,DB,MK,X1,X2,X3"]
    for i in range(n_clips):
        pid = f"pid{i % n_pids:02d}"
        clip_id = f"clip{i:03d}"
        spec = DegradationSpec(
            blur_level=int(rng.integers(0, BLUR_LEVELS)),
            noise_level=int(rng.integers(0, NOISE_LEVELS)),
            av_offset=int(rng.integers(0, MAX_AV_OFFSET + 1)),
        )
        specs[clip_id] = spec
        bundle, keypoints = make_clip_bundle(
            clip_id, pid, spec, seed=seed * 100_000 + i,
            width=width, height=height, n_frames=n_frames, fps=fps,
        )
        save_clip(bundle, dataset_dir / clip_id)
        (keypoints_dir / f"{clip_id}.json").write_text(json.dumps({
            "image_w": keypoints.image_w,
            "image_h": keypoints.image_h,
            "points": [[x, y] for x, y in keypoints.points],
        }))
        flags = ",".join(str(f) for f in _distortion_flags(spec))
        rows.append(f"{clip_id},{ground_truth_quality(spec):.6f},1,{flags}")

    mos_csv = out / "mos.csv"
    mos_csv.write_text("\n".join(rows) + "\n")
    return StudyPaths(root=out, dataset_dir=dataset_dir, keypoints_dir=keypoints_dir,
                      mos_csv=mos_csv, specs=specs)
