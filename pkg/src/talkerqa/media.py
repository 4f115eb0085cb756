"""Raw media handling: clip bundles, PPM frames, WAV audio, first-frame and resize.

Conventions used throughout the package:
  - a frame stack is a uint8 array of shape (T, H, W, 3)
  - a working image is a float array in [0, 1], shape (H, W, 3) or (H, W)
  - audio is a mono float array in [-1, 1]
"""

from __future__ import annotations

import json
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MediaError(Exception):
    """A clip, frame, or audio file could not be decoded."""


@dataclass(frozen=True)
class FrameSequence:
    """An ordered stack of RGB frames plus the nominal frame rate."""

    frames: np.ndarray  # uint8, (T, H, W, 3)
    fps: float

    def __post_init__(self):
        f = np.asarray(self.frames)
        if f.dtype != np.uint8:
            raise ValueError(f"frames must be uint8, got {f.dtype}")
        if f.ndim != 4 or f.shape[0] < 1 or f.shape[3] != 3:
            raise ValueError(f"frame stack must be (T, H, W, 3) with T >= 1, got {f.shape}")
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        object.__setattr__(self, "frames", f)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def duration(self) -> float:
        return self.n_frames / self.fps


@dataclass(frozen=True)
class AudioTrack:
    """Mono audio samples in [-1, 1] at a fixed sample rate."""

    samples: np.ndarray  # float64, (N,)
    sample_rate: int

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim != 1 or s.size < 1:
            raise ValueError("audio must be a non-empty 1-D sample array")
        if not np.all(np.isfinite(s)):
            raise ValueError("audio samples must be finite")
        if self.sample_rate <= 0:
            raise ValueError(f"sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", s)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class ClipBundle:
    """One talking-head clip: video, audio, and identity metadata."""

    clip_id: str
    pid: str
    talker: str
    t2i: str
    video: FrameSequence
    audio: AudioTrack

    def __post_init__(self):
        if not self.clip_id:
            raise ValueError("clip_id must be non-empty")
        if not self.pid:
            raise ValueError("pid must be non-empty")


# ---------------------------------------------------------------- PPM frames

def load_ppm(path: str | Path) -> np.ndarray:
    """Decode a binary PPM (P6, maxval 255) file into a uint8 (H, W, 3) array."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise MediaError(f"cannot read frame {path}: {exc}") from exc

    tokens = []
    pos = 0
    while len(tokens) < 4:
        if pos >= len(data):
            raise MediaError(f"truncated PPM header in {path}")
        ch = data[pos:pos + 1]
        if ch == b"#":  # comment runs to end of line
            eol = data.find(b"\n", pos)
            pos = len(data) if eol < 0 else eol + 1
        elif ch.isspace():
            pos += 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    pos += 1  # single whitespace byte after maxval

    if tokens[0] != b"P6":
        raise MediaError(f"{path}: not a binary PPM (magic {tokens[0]!r})")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise MediaError(f"{path}: malformed PPM header") from exc
    if maxval != 255:
        raise MediaError(f"{path}: unsupported maxval {maxval}, expected 255")

    expected = width * height * 3
    raw = data[pos:pos + expected]
    if len(raw) < expected:
        raise MediaError(f"{path}: PPM payload truncated ({len(raw)} of {expected} bytes)")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3).copy()


def save_ppm(path: str | Path, frame: np.ndarray) -> None:
    """Write a uint8 (H, W, 3) array as binary PPM."""
    frame = np.asarray(frame, dtype=np.uint8)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(f"frame must be (H, W, 3), got {frame.shape}")
    h, w = frame.shape[:2]
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + frame.tobytes())


# ----------------------------------------------------------------- WAV audio

def load_wav(path: str | Path) -> AudioTrack:
    """Read a 16-bit PCM WAV file; stereo inputs are averaged down to mono."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            rate = wf.getframerate()
            n_frames = wf.getnframes()
            raw = wf.readframes(n_frames)
    except FileNotFoundError as exc:
        raise MediaError(f"cannot read audio {path}: {exc}") from exc
    except (wave.Error, EOFError) as exc:
        raise MediaError(f"{path}: not a readable WAV file ({exc})") from exc

    if sampwidth != 2:
        raise MediaError(f"{path}: unsupported audio encoding ({8 * sampwidth}-bit, expected 16-bit PCM)")
    if n_frames < 1:
        raise MediaError(f"{path}: audio contains no samples")

    ints = np.frombuffer(raw, dtype="<i2").astype(np.float64)
    if n_channels > 1:
        ints = ints.reshape(-1, n_channels).mean(axis=1)
    return AudioTrack(samples=ints / 32768.0, sample_rate=rate)


def save_wav(path: str | Path, audio: AudioTrack) -> None:
    """Write mono 16-bit PCM; exact inverse of load_wav for mono tracks."""
    ints = np.clip(np.round(audio.samples * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(audio.sample_rate)
        wf.writeframes(ints.tobytes())


# ------------------------------------------------------------- clip manifests

MANIFEST_KEYS = ("clip_id", "pid", "talker", "t2i", "fps", "width", "height", "frames", "audio")


def load_clip(manifest_path: str | Path) -> ClipBundle:
    """Load a clip described by a JSON manifest (see MANIFEST_KEYS).

    Frame and audio paths in the manifest are resolved relative to the
    manifest's directory. Frames are checked against the declared size.
    """
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except OSError as exc:
        raise MediaError(f"cannot read manifest {manifest_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MediaError(f"{manifest_path}: invalid JSON ({exc})") from exc

    missing = [k for k in MANIFEST_KEYS if k not in manifest]
    if missing:
        raise MediaError(f"{manifest_path}: manifest missing keys {missing}")
    if not manifest["frames"]:
        raise MediaError(f"{manifest_path}: manifest lists no frames")

    base = manifest_path.parent
    width, height = int(manifest["width"]), int(manifest["height"])
    frames = np.empty((len(manifest["frames"]), height, width, 3), dtype=np.uint8)
    for i, rel in enumerate(manifest["frames"]):
        frame = load_ppm(base / rel)
        if frame.shape[:2] != (height, width):
            raise MediaError(
                f"{base / rel}: frame {i} is {frame.shape[1]}x{frame.shape[0]}, "
                f"manifest declares {width}x{height}"
            )
        frames[i] = frame

    audio = load_wav(base / manifest["audio"])
    return ClipBundle(
        clip_id=str(manifest["clip_id"]),
        pid=str(manifest["pid"]),
        talker=str(manifest["talker"]),
        t2i=str(manifest["t2i"]),
        video=FrameSequence(frames=frames, fps=float(manifest["fps"])),
        audio=audio,
    )


def save_clip(bundle: ClipBundle, out_dir: str | Path) -> Path:
    """Write a clip as manifest + PPM frames + WAV; returns the manifest path."""
    out_dir = Path(out_dir)
    frames_dir = out_dir / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)

    frame_names = []
    for i, frame in enumerate(bundle.video.frames):
        name = f"frames/{i:05d}.ppm"
        save_ppm(out_dir / name, frame)
        frame_names.append(name)
    save_wav(out_dir / "audio.wav", bundle.audio)

    manifest = {
        "clip_id": bundle.clip_id,
        "pid": bundle.pid,
        "talker": bundle.talker,
        "t2i": bundle.t2i,
        "fps": bundle.video.fps,
        "width": bundle.video.width,
        "height": bundle.video.height,
        "frames": frame_names,
        "audio": "audio.wav",
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest_path


# -------------------------------------------------------------- image helpers

def normalize_frame(frame: np.ndarray) -> np.ndarray:
    """uint8 pixels -> float image in [0, 1]."""
    return np.asarray(frame, dtype=np.float64) / 255.0


def first_frame(video: FrameSequence) -> np.ndarray:
    """The initial frame as a normalized (H, W, 3) image."""
    return normalize_frame(video.frames[0])


def resize_image(img: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Bilinear resize with corner-aligned sample mapping.

    Output coordinate u samples input u * (in - 1) / (out - 1); a size-1 output
    axis samples input coordinate 0. Constant images are preserved exactly and
    resizing to the source size is the identity.
    """
    if target_w < 1 or target_h < 1:
        raise ValueError("resize targets must be >= 1")
    img = np.asarray(img, dtype=np.float64)
    in_h, in_w = img.shape[:2]

    def src_coords(n_out: int, n_in: int) -> np.ndarray:
        if n_out == 1:
            return np.zeros(1)
        return np.arange(n_out) * ((n_in - 1) / (n_out - 1))

    ys = src_coords(target_h, in_h)
    xs = src_coords(target_w, in_w)
    y0 = np.minimum(np.floor(ys).astype(int), in_h - 1)
    x0 = np.minimum(np.floor(xs).astype(int), in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    fy = (ys - y0).reshape(-1, 1)
    fx = (xs - x0).reshape(1, -1)
    if img.ndim == 3:
        fy = fy[..., None]
        fx = fx[..., None]

    # a + f * (b - a) keeps constants bit-exact
    top = img[np.ix_(y0, x0)]
    top = top + fx * (img[np.ix_(y0, x1)] - top)
    bot = img[np.ix_(y1, x0)]
    bot = bot + fx * (img[np.ix_(y1, x1)] - bot)
    return top + fy * (bot - top)
