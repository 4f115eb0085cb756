"""Tone-lip consistency: MFCC front-end, mouth crop, and the baseline sync scorer.

Production deployments typically score sync with a pretrained network; here
that is an interface (SyncScorer) with a deterministic signal-correlation
baseline so the pipeline runs without downloaded weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np
from scipy.fft import dct

from .media import AudioTrack, FrameSequence, normalize_frame
from .slicing import MouthCenter, round_half_up

OFFSET_RANGE = 15  # frames searched either side when aligning audio/visual signals


@dataclass(frozen=True)
class MfccConfig:
    sample_rate: int = 16000
    window_ms: float = 25.0
    hop_ms: float = 10.0
    n_mels: int = 40
    n_coeffs: int = 13
    fmin: float = 0.0
    fmax: float = 8000.0
    pre_emphasis: float = 0.97
    log_floor: float = 1e-10

    @property
    def window_samples(self) -> int:
        return round_half_up(self.sample_rate * self.window_ms / 1000.0)

    @property
    def hop_samples(self) -> int:
        return round_half_up(self.sample_rate * self.hop_ms / 1000.0)


@dataclass(frozen=True)
class MfccMatrix:
    coefficients: np.ndarray  # (n_windows, n_coeffs)
    config: MfccConfig

    @property
    def n_windows(self) -> int:
        return self.coefficients.shape[0]

    @property
    def n_coeffs(self) -> int:
        return self.coefficients.shape[1]


@dataclass(frozen=True)
class SyncScore:
    lse_c: float  # confidence, larger = more confident
    lse_d: float  # distance, smaller = better aligned

    def __post_init__(self):
        if not (np.isfinite(self.lse_c) and np.isfinite(self.lse_d)):
            raise ValueError("sync scores must be finite")
        if self.lse_c < 0 or self.lse_d < 0:
            raise ValueError("sync scores must be non-negative")


class SyncScorer(Protocol):
    """Anything that scores tone-lip consistency of a mouth crop against audio."""

    name: str

    def score(self, mouth_video: FrameSequence, audio: AudioTrack) -> SyncScore: ...


def resample_linear(audio: AudioTrack, target_rate: int) -> AudioTrack:
    """Linear-interpolation resample; identity when rates already match."""
    if audio.sample_rate == target_rate:
        return audio
    n_out = max(1, round_half_up(audio.samples.size * target_rate / audio.sample_rate))
    src_t = np.arange(audio.samples.size) / audio.sample_rate
    dst_t = np.arange(n_out) / target_rate
    return AudioTrack(samples=np.interp(dst_t, src_t, audio.samples), sample_rate=target_rate)


def mel_filterbank(cfg: MfccConfig, n_bins: int) -> np.ndarray:
    """Triangular mel filters evaluated at the rfft bin frequencies, (n_mels, n_bins)."""
    def to_mel(hz):
        return 2595.0 * np.log10(1.0 + np.asarray(hz) / 700.0)

    def to_hz(mel):
        return 700.0 * (10.0 ** (np.asarray(mel) / 2595.0) - 1.0)

    edges = to_hz(np.linspace(to_mel(cfg.fmin), to_mel(cfg.fmax), cfg.n_mels + 2))
    bin_hz = np.arange(n_bins) * cfg.sample_rate / cfg.window_samples
    weights = np.zeros((cfg.n_mels, n_bins))
    for m in range(cfg.n_mels):
        lo, center, hi = edges[m], edges[m + 1], edges[m + 2]
        rising = (bin_hz - lo) / (center - lo)
        falling = (hi - bin_hz) / (hi - center)
        weights[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return weights


def compute_mfcc(audio: AudioTrack, cfg: MfccConfig | None = None) -> MfccMatrix:
    """Mel-frequency cepstral coefficients of a mono track.

    Pipeline: resample to cfg.sample_rate -> pre-emphasis -> Hann-windowed
    frames -> DFT magnitude -> mel filterbank energies -> floored log ->
    orthonormal DCT-II, keeping the first n_coeffs.
    """
    cfg = cfg or MfccConfig()
    audio = resample_linear(audio, cfg.sample_rate)
    x = audio.samples
    win, hop = cfg.window_samples, cfg.hop_samples
    if x.size < win:
        raise ValueError(f"audio too short for one window ({x.size} < {win} samples)")

    emphasized = np.concatenate(([x[0]], x[1:] - cfg.pre_emphasis * x[:-1]))
    n_windows = (x.size - win) // hop + 1
    idx = np.arange(win)[None, :] + hop * np.arange(n_windows)[:, None]
    frames = emphasized[idx] * np.hanning(win)

    power = np.abs(np.fft.rfft(frames, n=win, axis=1)) ** 2
    energies = power @ mel_filterbank(cfg, power.shape[1]).T
    log_mel = np.log(np.maximum(energies, cfg.log_floor))
    coeffs = dct(log_mel, type=2, norm="ortho", axis=1)[:, :cfg.n_coeffs]
    return MfccMatrix(coefficients=coeffs, config=cfg)


def mouth_crop(video: FrameSequence, center: MouthCenter, box: int = 96) -> FrameSequence:
    """Square crop of side `box` around the mouth center, shifted inward at edges."""
    if box < 1:
        raise ValueError("crop box must be >= 1")
    side = min(box, video.width, video.height)
    x0 = min(max(round_half_up(center.x - side / 2.0), 0), video.width - side)
    y0 = min(max(round_half_up(center.y - side / 2.0), 0), video.height - side)
    return FrameSequence(
        frames=video.frames[:, y0:y0 + side, x0:x0 + side, :].copy(),
        fps=video.fps,
    )


def _znorm(signal: np.ndarray) -> np.ndarray:
    std = signal.std()
    if std == 0.0:
        return np.zeros_like(signal)
    return (signal - signal.mean()) / std


def frame_audio_rms(audio: AudioTrack, fps: float, n_frames: int) -> np.ndarray:
    """RMS of the audio samples falling in each frame's time span."""
    bounds = [round_half_up(t * audio.sample_rate / fps) for t in range(n_frames + 1)]
    rms = np.zeros(n_frames)
    for t in range(n_frames):
        span = audio.samples[bounds[t]:bounds[t + 1]]
        if span.size:
            rms[t] = np.sqrt(np.mean(span ** 2))
    return rms


def offset_distances(v: np.ndarray, a: np.ndarray,
                     max_offset: int = OFFSET_RANGE) -> dict[int, float]:
    """Mean squared difference of the two signals at each integer offset.

    Offset k aligns v[t] with a[t + k]; offsets with no overlap are omitted.
    """
    n = v.size
    out: dict[int, float] = {}
    for k in range(-max_offset, max_offset + 1):
        lo, hi = max(0, -k), min(n, n - k)
        if hi > lo:
            d = v[lo:hi] - a[lo + k:hi + k]
            out[k] = float(np.mean(d ** 2))
    return out


def baseline_sync_score(mouth_video: FrameSequence, audio: AudioTrack) -> SyncScore:
    """Deterministic tone-lip score from mouth-openness and audio-energy signals.

    The per-frame visual signal is the pixel-intensity spread of the mouth
    crop; the audio signal is per-frame RMS. Both are z-normalized and
    compared at integer offsets in [-15, 15]: the distance is the minimum
    mean squared difference, the confidence is how far the median offset
    distance sits above that minimum.
    """
    if mouth_video.n_frames < 2:
        raise ValueError("sync scoring needs at least 2 frames")
    n = mouth_video.n_frames
    if audio.samples.size < round_half_up(n * audio.sample_rate / mouth_video.fps):
        raise ValueError("audio does not cover the video duration")

    v = np.array([normalize_frame(f).std() for f in mouth_video.frames])
    a = frame_audio_rms(audio, mouth_video.fps, n)
    distances = offset_distances(_znorm(v), _znorm(a))
    values = np.array(sorted(distances.values()))
    lse_d = float(values.min())
    lse_c = float(np.median(values) - lse_d)
    return SyncScore(lse_c=lse_c, lse_d=lse_d)


@dataclass(frozen=True)
class BaselineSyncScorer:
    """SyncScorer wrapper around baseline_sync_score."""

    name: str = "baseline-signal-correlation"

    def score(self, mouth_video: FrameSequence, audio: AudioTrack) -> SyncScore:
        return baseline_sync_score(mouth_video, audio)


def expand_plane(value: float, width: int, height: int, scale: float = 16.0) -> np.ndarray:
    """Constant single-channel plane holding value / scale clamped to [0, 1]."""
    if width < 1 or height < 1:
        raise ValueError("plane dimensions must be >= 1")
    return np.full((height, width), min(max(value / scale, 0.0), 1.0))
