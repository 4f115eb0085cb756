"""Tests for correlation metrics, fold construction, and cross-validation."""

from __future__ import annotations

import itertools
import json

import numpy as np
import pytest

from talkerqa.evaluation import (
    PLCC_MAPPING,
    CrossValidationReport,
    FoldEvaluationError,
    MetricsReport,
    UndefinedCorrelationError,
    compute_metrics,
    fractional_ranks,
    krcc,
    make_folds,
    plcc,
    rmse,
    run_cross_validation,
    srcc,
)

from .oracles import fractional_ranks_oracle, krcc_oracle, plcc_oracle, srcc_oracle


# ---------------------------------------------------------------------- ranks

def test_fractional_ranks_with_ties():
    assert np.array_equal(fractional_ranks([10, 20, 20, 30]), [1.0, 2.5, 2.5, 4.0])


def test_fractional_ranks_reverse_order():
    assert np.array_equal(fractional_ranks([3, 2, 1]), [3.0, 2.0, 1.0])


def test_fractional_ranks_match_oracle():
    rng = np.random.default_rng(61)
    for _ in range(20):
        v = rng.integers(0, 6, size=int(rng.integers(2, 15))).astype(float)
        expected = [float(r) for r in fractional_ranks_oracle(list(v))]
        assert np.array_equal(fractional_ranks(v), expected)


# -------------------------------------------------------------------- metrics

def test_srcc_known_value():
    assert srcc([1, 2, 3], [1, 3, 2]) == 0.5


def test_krcc_known_value():
    assert krcc([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(2.0 / 3.0)


def test_plcc_known_value():
    assert plcc([0, 1, 2], [0, 1, 3]) == pytest.approx(0.9820, abs=1e-4)


def test_rmse_known_value():
    assert rmse([3, 1], [1, 1]) == pytest.approx(np.sqrt(2.0))
    assert rmse([1, 2, 3], [1, 2, 3]) == 0.0


def test_srcc_exact_one_under_monotone_transform():
    rng = np.random.default_rng(62)
    for _ in range(10):
        x = rng.permutation(8).astype(float)
        assert srcc(x, np.exp(x)) == 1.0
        assert srcc(x, -np.exp(x)) == -1.0


def test_plcc_affine_invariance():
    rng = np.random.default_rng(63)
    x, y = rng.normal(size=12), rng.normal(size=12)
    base = plcc(x, y)
    assert plcc(3.5 * x + 2.0, y) == pytest.approx(base, abs=1e-12)
    assert plcc(x, -2.0 * y + 1.0) == pytest.approx(-base, abs=1e-12)


def test_metrics_symmetric_in_arguments():
    rng = np.random.default_rng(64)
    x, y = rng.normal(size=10), rng.normal(size=10)
    assert srcc(x, y) == srcc(y, x)
    assert krcc(x, y) == krcc(y, x)
    assert plcc(x, y) == plcc(y, x)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_rank_metrics_exact_on_small_permutations(n):
    identity = list(range(n))
    for perm in itertools.permutations(range(n)):
        y = [float(v) for v in perm]
        assert srcc(identity, y) == srcc_oracle(identity, y)
        assert krcc(identity, y) == krcc_oracle(identity, y)


def test_metrics_match_oracles_with_ties():
    rng = np.random.default_rng(65)
    for _ in range(30):
        n = int(rng.integers(3, 12))
        x = [float(v) for v in rng.integers(0, 4, size=n)]
        y = [float(v) for v in rng.integers(0, 4, size=n)]
        if len(set(x)) < 2 or len(set(y)) < 2:
            continue
        assert srcc(x, y) == pytest.approx(srcc_oracle(x, y), abs=1e-12)
        assert krcc(x, y) == pytest.approx(krcc_oracle(x, y), abs=1e-12)
        assert plcc(x, y) == pytest.approx(plcc_oracle(x, y), abs=1e-12)


@pytest.mark.parametrize("metric", [srcc, plcc, krcc])
def test_constant_vector_is_undefined(metric):
    with pytest.raises(UndefinedCorrelationError):
        metric([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(UndefinedCorrelationError):
        metric([1.0, 2.0, 3.0], [4.0, 4.0, 4.0])


@pytest.mark.parametrize("metric", [srcc, plcc, krcc])
def test_metrics_reject_short_or_mismatched_input(metric):
    with pytest.raises(ValueError, match="length mismatch"):
        metric([1.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError, match=">= 2"):
        metric([1.0], [2.0])


def test_metric_values_stay_in_bounds():
    rng = np.random.default_rng(66)
    for _ in range(50):
        n = int(rng.integers(2, 10))
        x, y = rng.normal(size=n), rng.normal(size=n)
        assert -1.0 <= plcc(x, y) <= 1.0
        assert -1.0 <= srcc(x, y) <= 1.0
        assert -1.0 <= krcc(x, y) <= 1.0


def test_compute_metrics_bundle():
    report = compute_metrics([1.0, 2.0, 3.0], [1.0, 2.0, 4.0])
    assert report.srcc == 1.0
    assert report.krcc == 1.0
    assert report.n == 3
    assert set(report.as_dict()) == {"srcc", "plcc", "krcc", "rmse"}


def test_metrics_report_validation():
    with pytest.raises(ValueError, match="outside"):
        MetricsReport(srcc=1.5, plcc=0.0, krcc=0.0, rmse=0.0, n=3)
    with pytest.raises(ValueError, match="negative"):
        MetricsReport(srcc=0.0, plcc=0.0, krcc=0.0, rmse=-0.1, n=3)
    with pytest.raises(ValueError, match="n >= 2"):
        MetricsReport(srcc=0.0, plcc=0.0, krcc=0.0, rmse=0.0, n=1)


# ---------------------------------------------------------------------- folds

def _clips(n_clips, n_pids):
    return [(f"clip{i:03d}", f"pid{i % n_pids:02d}") for i in range(n_clips)]


def test_fold_sizes_for_fourteen_pids():
    split = make_folds(_clips(14, 14), k=5, seed=0)
    assert sorted(len(f) for f in split.folds) == [2, 3, 3, 3, 3]
    assert split.k == 5


def test_folds_deterministic_per_seed():
    clips = _clips(30, 10)
    assert make_folds(clips, seed=4) == make_folds(clips, seed=4)
    assert make_folds(clips, seed=4) != make_folds(clips, seed=5)


def test_folds_never_split_a_pid():
    rng = np.random.default_rng(67)
    for _ in range(10):
        n_pids = int(rng.integers(5, 15))
        clips = _clips(int(rng.integers(n_pids, 60)), n_pids)
        split = make_folds(clips, k=5, seed=int(rng.integers(0, 100)))
        all_ids = [cid for fold in split.folds for cid in fold]
        assert sorted(all_ids) == sorted(cid for cid, _ in clips)
        assert len(all_ids) == len(set(all_ids))
        pid_by_clip = dict(clips)
        for fold_idx, fold in enumerate(split.folds):
            for cid in fold:
                assert split.pid_to_fold[pid_by_clip[cid]] == fold_idx


def test_folds_require_enough_pids():
    with pytest.raises(ValueError, match="distinct pids"):
        make_folds(_clips(10, 3), k=5)
    with pytest.raises(ValueError, match="k >= 2"):
        make_folds(_clips(10, 5), k=1)


# ----------------------------------------------------------- cross-validation

def _linear_problem(n_clips=30, n_pids=10, dim=3, seed=68):
    """Features plus a MOS table that is an exact linear function of them."""
    rng = np.random.default_rng(seed)
    w = rng.uniform(-0.3, 0.3, dim)
    features, mos_table, pid_of = {}, {}, {}
    for i in range(n_clips):
        cid = f"clip{i:03d}"
        x = rng.uniform(-1, 1, dim)
        features[cid] = x
        mos_table[cid] = float(np.clip(2.5 + w @ x, 0.5, 4.5))
        pid_of[cid] = f"pid{i % n_pids:02d}"
    return features, mos_table, pid_of


def test_cross_validation_recovers_exact_linear_model():
    features, mos_table, pid_of = _linear_problem()
    report = run_cross_validation(features, mos_table, pid_of, k=5, seed=1,
                                  ridge_lambda=0.0, grid=1)
    assert report.mean.rmse <= 1e-6
    assert report.mean.srcc == 1.0
    assert report.mean.n == 30
    assert len(report.per_fold) == 5


def test_cross_validation_near_zero_on_permuted_targets():
    rng = np.random.default_rng(69)
    features, mos_table, pid_of = _linear_problem(n_clips=50, n_pids=25, dim=5)
    values = rng.permutation(list(mos_table.values()))
    shuffled = dict(zip(sorted(mos_table), values))
    report = run_cross_validation(features, shuffled, pid_of, k=5, seed=2,
                                  ridge_lambda=1e-2, grid=1)
    assert abs(report.mean.srcc) < 0.35


def test_cross_validation_constant_mos_fails_per_fold():
    features, _, pid_of = _linear_problem()
    flat = {cid: 2.0 for cid in features}
    with pytest.raises(FoldEvaluationError, match="fold 0"):
        run_cross_validation(features, flat, pid_of, k=5, seed=0)


def test_cross_validation_checks_clip_coverage():
    features, mos_table, pid_of = _linear_problem()
    del mos_table["clip000"]
    with pytest.raises(ValueError, match="same clip ids"):
        run_cross_validation(features, mos_table, pid_of)


def test_report_json_shape(tmp_path):
    features, mos_table, pid_of = _linear_problem()
    report = run_cross_validation(features, mos_table, pid_of, k=5, seed=3,
                                  ridge_lambda=1e-2, grid=1)
    data = json.loads(report.to_json())
    assert set(data) == {"seed", "k", "lambda", "grid", "plcc_mapping", "per_fold", "mean"}
    assert data["plcc_mapping"] == PLCC_MAPPING == "raw"
    assert data["seed"] == 3 and data["k"] == 5 and data["lambda"] == 1e-2
    assert len(data["per_fold"]) == 5
    path = tmp_path / "report.json"
    report.save(path)
    assert path.read_text().endswith("}\n")
    assert isinstance(report, CrossValidationReport)
