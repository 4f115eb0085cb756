"""Acceptance suite: one test per shipped guarantee.

Each test pins a user-facing behavior of the toolkit at its stated
tolerance — exact rank arithmetic, subjective-pipeline fixtures, slice
indexing, the MFCC front-end, the ridge solver, end-to-end correlation on
the synthetic study, and byte-level reproducibility of every artifact.
"""

from __future__ import annotations

import itertools
import time

import numpy as np
import pytest

from talkerqa import demo, pipeline
from talkerqa.evaluation import krcc, make_folds, srcc
from talkerqa.fscd import train_regressor, training_loss
from talkerqa.media import AudioTrack, FrameSequence, normalize_frame
from talkerqa.slicing import (
    FALLBACK,
    KeypointSet,
    extract_yt_slice,
    mouth_centroid,
    round_half_up,
    scale_center,
)
from talkerqa.subjective import DistortionTaxonomy, RatingRecord, aggregate_distortions, \
    rescale_scores, zscore_normalize
from talkerqa.sync import MfccConfig, compute_mfcc, mel_filterbank

from .conftest import tone
from .oracles import krcc_oracle, ridge_oracle, srcc_oracle


# 1 ---------------------------------------------------------------------------

def test_rank_metrics_bit_exact_against_fraction_arithmetic():
    """srcc/krcc equal exact rational arithmetic on every small permutation,
    and stay within 1e-12 of it on 200 random tied vectors; all in < 10 s."""
    start = time.perf_counter()
    for n in (3, 4, 5, 6):
        x = list(range(n))
        for perm in itertools.permutations(range(n)):
            y = list(perm)
            assert srcc(x, y) == srcc_oracle(x, y)
            assert krcc(x, y) == krcc_oracle(x, y)

    rng = np.random.default_rng(101)
    checked = 0
    while checked < 200:
        n = int(rng.integers(3, 12))
        x = [float(v) for v in rng.integers(0, 5, size=n)]
        y = [float(v) for v in rng.integers(0, 5, size=n)]
        if len(set(x)) < 2 or len(set(y)) < 2:
            continue
        assert srcc(x, y) == pytest.approx(srcc_oracle(x, y), abs=1e-12)
        assert krcc(x, y) == pytest.approx(krcc_oracle(x, y), abs=1e-12)
        checked += 1
    assert time.perf_counter() - start < 10.0


# 2 ---------------------------------------------------------------------------

def test_subjective_normalization_rescale_and_flag_fixtures():
    """Per-subject z-scores are exactly standardized, the global rescale hits
    both ends of [0, 5], and strict-majority flags match hand counts."""
    rng = np.random.default_rng(102)
    records = []
    for i in range(5):
        scores = rng.permutation([1, 2, 3, 4, 5])
        records += [RatingRecord(subject_id=f"s{i}", clip_id=f"c{j}", score=int(v))
                    for j, v in enumerate(scores)]
    z, degenerate = zscore_normalize(records)
    assert degenerate == []
    for i in range(5):
        values = np.array([z[(f"s{i}", f"c{j}")] for j in range(5)])
        assert values.mean() == pytest.approx(0.0, abs=1e-9)
        assert values.std(ddof=1) == pytest.approx(1.0, abs=1e-9)

    rescaled = rescale_scores(z)
    values = list(rescaled.values())
    assert min(values) == 0.0
    assert max(values) == 5.0
    assert all(0.0 <= v <= 5.0 for v in values)

    taxonomy = DistortionTaxonomy()

    def flag(n_raters, n_votes):
        recs = [RatingRecord(subject_id=f"v{i}", clip_id="c", score=3,
                             distortions=frozenset(["BL"] if i < n_votes else []))
                for i in range(n_raters)]
        return aggregate_distortions(recs, taxonomy)[0]

    assert flag(1, 1) == 1 and flag(1, 0) == 0
    assert flag(24, 12) == 0 and flag(24, 13) == 1
    assert flag(25, 12) == 0 and flag(25, 13) == 1


# 3 ---------------------------------------------------------------------------

def test_yt_slice_matches_direct_indexing_on_randomized_videos():
    """The Y-T slice equals direct column indexing, bit for bit, across 100
    random videos; without keypoints the column falls back to mid-frame."""
    rng = np.random.default_rng(103)
    for _ in range(100):
        n_frames = int(rng.integers(1, 8))
        height = int(rng.integers(1, 12))
        width = int(rng.integers(1, 12))
        frames = rng.integers(0, 256, size=(n_frames, height, width, 3), dtype=np.uint8)
        video = FrameSequence(frames=frames, fps=10.0)
        center_x = float(rng.uniform(-4, width + 4))
        out = extract_yt_slice(video, center_x)
        col = min(max(round_half_up(center_x), 0), width - 1)
        assert out.shape == (height, n_frames, 3)
        for t in range(n_frames):
            assert np.array_equal(out[:, t, :], normalize_frame(frames[t])[:, col, :])

    kps = KeypointSet(image_w=64, image_h=64, points=())
    center = mouth_centroid(kps)
    assert center.source == FALLBACK and (center.x, center.y) == (32.0, 32.0)
    frames = rng.integers(0, 256, size=(4, 32, 32, 3), dtype=np.uint8)
    video = FrameSequence(frames=frames, fps=10.0)
    scaled = scale_center(center, (64, 64), (32, 32))
    assert scaled.x == 16.0  # mid-frame column of the 32-wide video
    out = extract_yt_slice(video, scaled.x)
    for t in range(4):
        assert np.array_equal(out[:, t, :], normalize_frame(frames[t])[:, 16, :])


# 4 ---------------------------------------------------------------------------

def test_mfcc_silence_scaling_and_tone_band_pinned():
    """Silence gives constant coefficient rows, amplitude scaling moves only
    the first coefficient (1e-6), and a 440 Hz tone peaks in the mel band
    whose support spans 440 Hz."""
    silence = compute_mfcc(AudioTrack(samples=np.zeros(16000), sample_rate=16000))
    assert np.array_equal(silence.coefficients,
                          np.tile(silence.coefficients[0], (silence.n_windows, 1)))
    assert np.allclose(silence.coefficients[:, 1:], 0.0, atol=1e-6)

    rng = np.random.default_rng(104)
    samples = rng.uniform(-0.3, 0.3, 16000)
    base = compute_mfcc(AudioTrack(samples=samples, sample_rate=16000)).coefficients
    for gain in (0.5, 2.0, 7.0):
        scaled = compute_mfcc(AudioTrack(samples=gain * samples,
                                         sample_rate=16000)).coefficients
        assert np.allclose(scaled[:, 1:], base[:, 1:], atol=1e-6)
        shift = np.sqrt(40.0) * 2.0 * np.log(gain)
        assert np.allclose(scaled[:, 0] - base[:, 0], shift, atol=1e-6)

    cfg = MfccConfig()
    filterbank = mel_filterbank(cfg, 201)
    frame = tone(duration=0.025, amplitude=0.5).samples[:400] * np.hanning(400)
    power = np.abs(np.fft.rfft(frame, n=400)) ** 2
    band = int(np.argmax(power @ filterbank.T))
    bin_hz = np.arange(201) * cfg.sample_rate / cfg.window_samples
    support = bin_hz[filterbank[band] > 0]
    assert support.min() <= 440.0 <= support.max()


# 5 ---------------------------------------------------------------------------

def test_ridge_interpolation_and_oracle_agreement():
    """At lambda=0 a full-rank square-ish problem is interpolated to 1e-9
    training loss; 20 random ridge problems match the augmented
    least-squares oracle to 1e-8."""
    rng = np.random.default_rng(105)
    X = rng.uniform(-1, 1, (6, 5))
    y = rng.uniform(0, 5, 6)
    model = train_regressor(X, y, ridge_lambda=0.0)
    assert training_loss(model, X, y) <= 1e-9

    for _ in range(20):
        n, d = int(rng.integers(15, 40)), int(rng.integers(3, 9))
        X = rng.normal(size=(n, d))
        y = rng.normal(size=n)
        lam = float(rng.choice([1e-3, 1e-2, 1e-1, 1.0, 10.0]))
        model = train_regressor(X, y, ridge_lambda=lam)
        assert np.allclose(model.weights, ridge_oracle(X, y, lam), atol=1e-8)


# 6 & 7 ------------------------------------------------------------------------

@pytest.fixture(scope="session")
def double_e2e_run(tmp_path_factory):
    """Two independent full pipeline runs over the same 60-clip synthetic
    study; returns both artifact trees plus the wall time of the first."""
    results = []
    elapsed = 0.0
    for label in ("a", "b"):
        root = tmp_path_factory.mktemp(f"e2e-{label}")
        start = time.perf_counter()
        paths = demo.generate_study(root / "study", n_clips=60, n_pids=14, seed=7)
        comp = root / "composites"
        pipeline.extract_dataset(paths.dataset_dir, paths.keypoints_dir, comp)
        out = root / "out"
        pipeline.train_and_report(comp, paths.mos_csv, out, k=5, seed=0)
        if label == "a":
            elapsed = time.perf_counter() - start
        results.append((paths, comp, out))
    return results[0], results[1], elapsed


def test_end_to_end_synthetic_study_correlation_and_folds(double_e2e_run):
    """On the 60-clip/14-pid synthetic study the cross-validated mean SRCC is
    at least 0.7, pids split 3/3/3/3/2 across folds, and the whole pipeline
    finishes inside 5 minutes."""
    (paths, comp, out), _, elapsed = double_e2e_run
    assert elapsed < 300.0

    import json

    report = json.loads((out / "report.json").read_text())
    assert report["mean"]["srcc"] >= 0.7
    assert report["k"] == 5 and len(report["per_fold"]) == 5

    index = pipeline.load_index(comp)
    assert len(index) == 60
    split = make_folds([(cid, info["pid"]) for cid, info in index.items()], k=5, seed=0)
    pid_counts = [0] * 5
    for fold in set(split.pid_to_fold.values()):
        pid_counts[fold] = sum(1 for f in split.pid_to_fold.values() if f == fold)
    assert sorted(pid_counts) == [2, 3, 3, 3, 3]


def test_pipeline_reruns_are_byte_identical(double_e2e_run):
    """Every machine-read artifact — composites, index, MOS table, model, and
    report — is byte-identical across two runs from the same seed."""
    (paths_a, comp_a, out_a), (paths_b, comp_b, out_b), _ = double_e2e_run

    names_a = sorted(p.name for p in comp_a.glob("*.fscd"))
    names_b = sorted(p.name for p in comp_b.glob("*.fscd"))
    assert names_a == names_b and len(names_a) == 60
    for name in names_a:
        assert (comp_a / name).read_bytes() == (comp_b / name).read_bytes(), name
    assert (comp_a / "index.json").read_bytes() == (comp_b / "index.json").read_bytes()
    assert paths_a.mos_csv.read_bytes() == paths_b.mos_csv.read_bytes()
    assert (out_a / "model.json").read_bytes() == (out_b / "model.json").read_bytes()
    assert (out_a / "report.json").read_bytes() == (out_b / "report.json").read_bytes()
