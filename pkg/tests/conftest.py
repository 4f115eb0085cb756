"""Shared fixtures: tiny synthetic media and a small on-disk study."""

from __future__ import annotations

import numpy as np
import pytest

from talkerqa import demo
from talkerqa.media import AudioTrack, FrameSequence


def random_video(rng: np.random.Generator, n_frames: int = 5, height: int = 8,
                 width: int = 8, fps: float = 10.0) -> FrameSequence:
    frames = rng.integers(0, 256, size=(n_frames, height, width, 3), dtype=np.uint8)
    return FrameSequence(frames=frames, fps=fps)


def tone(duration: float = 1.0, freq: float = 440.0, rate: int = 16000,
         amplitude: float = 0.5) -> AudioTrack:
    t = np.arange(int(round(duration * rate))) / rate
    return AudioTrack(samples=amplitude * np.sin(2 * np.pi * freq * t), sample_rate=rate)


@pytest.fixture(scope="session")
def small_study(tmp_path_factory):
    """A 6-clip, 3-pid synthetic study on disk (dataset + keypoints + MOS)."""
    root = tmp_path_factory.mktemp("small-study")
    return demo.generate_study(root, n_clips=6, n_pids=3, seed=11,
                               width=32, height=32, n_frames=12)
