"""Correlation metrics and the content-disjoint cross-validation harness.

SRCC is the Pearson correlation of fractional ranks, KRCC is tau-b
(tie-corrected), PLCC is the raw Pearson correlation (no nonlinear
remapping; reports carry a ``plcc_mapping`` field making that explicit),
and RMSE is the root mean squared error. Folds are assigned per prompt id
so no prompt's clips ever straddle a train/test boundary.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .fscd import DEFAULT_GRID, DEFAULT_LAMBDA, RankDeficiencyError, predict, train_regressor

PLCC_MAPPING = "raw"  # reserved: a 4-parameter logistic pre-map could slot in here


class UndefinedCorrelationError(Exception):
    """A correlation was requested on data with no variation."""


class FoldEvaluationError(Exception):
    """Training or scoring failed inside a cross-validation fold."""


@dataclass(frozen=True)
class MetricsReport:
    srcc: float
    plcc: float
    krcc: float
    rmse: float
    n: int

    def __post_init__(self):
        for name in ("srcc", "plcc", "krcc"):
            v = getattr(self, name)
            if not -1.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [-1, 1]")
        if self.rmse < 0.0:
            raise ValueError(f"rmse={self.rmse} negative")
        if self.n < 2:
            raise ValueError(f"need n >= 2 samples, got {self.n}")

    def as_dict(self) -> dict[str, float]:
        return {"srcc": self.srcc, "plcc": self.plcc, "krcc": self.krcc, "rmse": self.rmse}


@dataclass(frozen=True)
class FoldSplit:
    folds: tuple[tuple[str, ...], ...]  # clip ids per fold, sorted
    pid_to_fold: dict[str, int]

    @property
    def k(self) -> int:
        return len(self.folds)


def _as_vector(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


def _check_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x, y = _as_vector(x, "x"), _as_vector(y, "y")
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError(f"need >= 2 samples, got {x.size}")
    return x, y


def fractional_ranks(values) -> np.ndarray:
    """1-based ranks; tied values share the average of their rank positions."""
    v = _as_vector(values, "values")
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(v.size, dtype=np.float64)
    sorted_v = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xm = x - x.mean()
    ym = y - y.mean()
    sxx = float(np.dot(xm, xm))
    syy = float(np.dot(ym, ym))
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a constant vector")
    r = float(np.dot(xm, ym)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def plcc(x, y) -> float:
    """Pearson linear correlation on the raw values."""
    return _pearson(*_check_pair(x, y))


def srcc(x, y) -> float:
    """Spearman rank correlation: Pearson correlation of fractional ranks."""
    x, y = _check_pair(x, y)
    return _pearson(fractional_ranks(x), fractional_ranks(y))


def krcc(x, y) -> float:
    """Kendall rank correlation, tau-b (tie-corrected) over all pairs."""
    x, y = _check_pair(x, y)
    n = x.size
    concordant = discordant = 0
    for i in range(n - 1):
        dx = x[i + 1:] - x[i]
        dy = y[i + 1:] - y[i]
        prod = np.sign(dx) * np.sign(dy)
        concordant += int(np.sum(prod > 0))
        discordant += int(np.sum(prod < 0))

    def tie_pairs(v: np.ndarray) -> int:
        _, counts = np.unique(v, return_counts=True)
        return int(np.sum(counts * (counts - 1) // 2))

    n0 = n * (n - 1) // 2
    n1, n2 = tie_pairs(x), tie_pairs(y)
    if n0 == n1 or n0 == n2:
        raise UndefinedCorrelationError("tau undefined for an all-tied vector")
    tau = (concordant - discordant) / math.sqrt(float(n0 - n1) * float(n0 - n2))
    return min(1.0, max(-1.0, tau))


def rmse(pred, truth) -> float:
    pred, truth = _as_vector(pred, "pred"), _as_vector(truth, "truth")
    if pred.size != truth.size:
        raise ValueError(f"length mismatch: {pred.size} vs {truth.size}")
    if pred.size == 0:
        raise ValueError("need >= 1 sample")
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def compute_metrics(pred, truth) -> MetricsReport:
    pred, truth = _check_pair(pred, truth)
    return MetricsReport(
        srcc=srcc(pred, truth),
        plcc=plcc(pred, truth),
        krcc=krcc(pred, truth),
        rmse=rmse(pred, truth),
        n=pred.size,
    )


def make_folds(clips: list[tuple[str, str]], k: int = 5, seed: int = 0) -> FoldSplit:
    """Partition (clip_id, pid) pairs into k folds with no pid split across folds.

    Distinct pids are shuffled by a seeded RNG and dealt round-robin to the
    folds; every clip lands in its pid's fold.
    """
    pids = sorted({pid for _, pid in clips})
    if len(pids) < k:
        raise ValueError(f"need >= {k} distinct pids for {k} folds, got {len(pids)}")
    if k < 2:
        raise ValueError(f"need k >= 2 folds, got {k}")
    rng = random.Random(seed)
    rng.shuffle(pids)
    pid_to_fold = {pid: i % k for i, pid in enumerate(pids)}
    folds: list[list[str]] = [[] for _ in range(k)]
    for clip_id, pid in clips:
        folds[pid_to_fold[pid]].append(clip_id)
    return FoldSplit(folds=tuple(tuple(sorted(f)) for f in folds), pid_to_fold=pid_to_fold)


@dataclass(frozen=True)
class CrossValidationReport:
    seed: int
    k: int
    ridge_lambda: float
    grid: int
    per_fold: tuple[MetricsReport, ...]
    mean: MetricsReport

    def to_json(self) -> str:
        return json.dumps({
            "seed": self.seed,
            "k": self.k,
            "lambda": self.ridge_lambda,
            "grid": self.grid,
            "plcc_mapping": PLCC_MAPPING,
            "per_fold": [f.as_dict() for f in self.per_fold],
            "mean": self.mean.as_dict(),
        }, indent=2)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def run_cross_validation(
    features: dict[str, np.ndarray],
    mos_table: dict[str, float],
    pid_of: dict[str, str],
    k: int = 5,
    seed: int = 0,
    ridge_lambda: float = DEFAULT_LAMBDA,
    grid: int = DEFAULT_GRID,
) -> CrossValidationReport:
    """k-fold cross-validation of the feature regressor, content-disjoint by pid.

    ``features``, ``mos_table`` and ``pid_of`` must share the same clip ids.
    Each fold is held out once; the regressor is trained on the rest and the
    four metrics of the held-out predictions are averaged across folds.
    """
    clip_ids = sorted(features)
    if set(mos_table) != set(clip_ids) or set(pid_of) != set(clip_ids):
        raise ValueError("features, MOS table, and pid map must cover the same clip ids")
    split = make_folds([(cid, pid_of[cid]) for cid in clip_ids], k=k, seed=seed)
    for i, fold in enumerate(split.folds):
        if len(fold) < 2:
            raise ValueError(f"fold {i} has {len(fold)} clip(s); need >= 2 per fold")

    per_fold = []
    for i, fold in enumerate(split.folds):
        held_out = set(fold)
        train_ids = [cid for cid in clip_ids if cid not in held_out]
        try:
            model = train_regressor(
                np.stack([features[cid] for cid in train_ids]),
                np.array([mos_table[cid] for cid in train_ids]),
                ridge_lambda=ridge_lambda,
                grid=grid,
            )
            preds = np.array([predict(model, features[cid]) for cid in fold])
            truth = np.array([mos_table[cid] for cid in fold])
            per_fold.append(compute_metrics(preds, truth))
        except (UndefinedCorrelationError, RankDeficiencyError, ValueError,
                np.linalg.LinAlgError) as exc:
            raise FoldEvaluationError(f"fold {i}: {exc}") from exc

    mean = MetricsReport(
        srcc=float(np.mean([f.srcc for f in per_fold])),
        plcc=float(np.mean([f.plcc for f in per_fold])),
        krcc=float(np.mean([f.krcc for f in per_fold])),
        rmse=float(np.mean([f.rmse for f in per_fold])),
        n=sum(f.n for f in per_fold),
    )
    return CrossValidationReport(seed=seed, k=k, ridge_lambda=ridge_lambda, grid=grid,
                                 per_fold=tuple(per_fold), mean=mean)
