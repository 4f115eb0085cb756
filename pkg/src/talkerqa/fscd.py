"""The 8-plane composite image, pooled-statistics features, and ridge regression.

Plane order is frozen: first-frame RGB, slice RGB, then the two constant
sync planes (confidence, distance). The on-disk format is little-endian
binary with a 24-byte header; see save_composite.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sync import SyncScore, expand_plane

PLANE_NAMES = ("F_R", "F_G", "F_B", "S_R", "S_G", "S_B", "C", "D")
N_PLANES = len(PLANE_NAMES)
MAGIC = b"FSCD"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sIIIIff")  # magic, version, width, height, planes, scale_c, scale_d
MOS_MIN, MOS_MAX = 0.0, 5.0
DEFAULT_GRID = 4
DEFAULT_LAMBDA = 1e-2
STATS_PER_CELL = 3  # mean, spread, gradient


class CompositeFormatError(Exception):
    """A composite file is malformed or truncated."""


class RankDeficiencyError(Exception):
    """The unregularized normal equations are singular."""


@dataclass(frozen=True)
class FscdComposite:
    planes: np.ndarray  # float32, (8, H, W)
    sync_scale_c: float
    sync_scale_d: float
    clip_id: str = ""

    def __post_init__(self):
        p = np.asarray(self.planes, dtype=np.float32)
        if p.ndim != 3 or p.shape[0] != N_PLANES:
            raise ValueError(f"composite must hold {N_PLANES} planes, got shape {p.shape}")
        object.__setattr__(self, "planes", p)

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def width(self) -> int:
        return self.planes.shape[2]


@dataclass(frozen=True)
class RegressorModel:
    """Ridge weights plus bias; weights[-1] is the unpenalized bias term."""

    weights: np.ndarray
    ridge_lambda: float
    grid: int = DEFAULT_GRID

    @property
    def feature_dim(self) -> int:
        return self.weights.size - 1


def assemble_composite(first: np.ndarray, slice_img: np.ndarray, sync: SyncScore,
                       scale_c: float = 16.0, scale_d: float = 16.0,
                       clip_id: str = "") -> FscdComposite:
    """Stack first-frame channels, slice channels, and the two sync planes."""
    first = np.asarray(first, dtype=np.float64)
    slice_img = np.asarray(slice_img, dtype=np.float64)
    if first.ndim != 3 or first.shape[2] != 3 or slice_img.shape != first.shape:
        raise ValueError(
            f"first frame {first.shape} and slice {slice_img.shape} must both be (H, W, 3)"
        )
    h, w = first.shape[:2]
    planes = np.stack([
        first[:, :, 0], first[:, :, 1], first[:, :, 2],
        slice_img[:, :, 0], slice_img[:, :, 1], slice_img[:, :, 2],
        expand_plane(sync.lse_c, w, h, scale_c),
        expand_plane(sync.lse_d, w, h, scale_d),
    ])
    return FscdComposite(planes=planes.astype(np.float32), sync_scale_c=scale_c,
                         sync_scale_d=scale_d, clip_id=clip_id)


def cell_stats(cell: np.ndarray) -> tuple[float, float, float]:
    """Mean, population std, and mean absolute forward-difference of one cell."""
    cell = np.asarray(cell, dtype=np.float64)
    dx = np.abs(np.diff(cell, axis=1)).ravel()
    dy = np.abs(np.diff(cell, axis=0)).ravel()
    grads = np.concatenate([dx, dy])
    grad = float(grads.mean()) if grads.size else 0.0
    return float(cell.mean()), float(cell.std()), grad


def extract_features(comp: FscdComposite, grid: int = DEFAULT_GRID) -> np.ndarray:
    """Pooled per-cell statistics over a grid x grid partition of every plane.

    Plane-major, row-major cell order, (mean, std, gradient) per cell;
    length is 8 * grid**2 * 3.
    """
    if grid < 1:
        raise ValueError("grid must be >= 1")
    h, w = comp.height, comp.width
    if h < grid or w < grid:
        raise ValueError(f"composite {w}x{h} smaller than {grid}x{grid} grid")

    features = []
    for plane in comp.planes:
        for r in range(grid):
            for c in range(grid):
                cell = plane[h * r // grid: h * (r + 1) // grid,
                             w * c // grid: w * (c + 1) // grid]
                features.extend(cell_stats(cell))
    return np.asarray(features, dtype=np.float64)


def feature_length(grid: int = DEFAULT_GRID) -> int:
    return N_PLANES * grid * grid * STATS_PER_CELL


def train_regressor(X: np.ndarray, y: np.ndarray, ridge_lambda: float = DEFAULT_LAMBDA,
                    grid: int = DEFAULT_GRID) -> RegressorModel:
    """Closed-form ridge fit of quality scores; the bias column is unpenalized."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.size or y.size < 1:
        raise ValueError(f"need matching design matrix and targets, got {X.shape} vs {y.size}")
    if ridge_lambda < 0:
        raise ValueError("ridge lambda must be >= 0")

    design = np.hstack([X, np.ones((X.shape[0], 1))])
    n_params = design.shape[1]
    if ridge_lambda == 0 and np.linalg.matrix_rank(design) < n_params:
        raise RankDeficiencyError(
            "normal equations are singular at lambda=0; use lambda > 0 "
            f"(rank {np.linalg.matrix_rank(design)} < {n_params} parameters)"
        )
    penalty = np.eye(n_params)
    penalty[-1, -1] = 0.0
    try:
        weights = np.linalg.solve(design.T @ design + ridge_lambda * penalty, design.T @ y)
    except np.linalg.LinAlgError as exc:
        raise RankDeficiencyError(f"normal equations not solvable: {exc}; use lambda > 0") from exc
    return RegressorModel(weights=weights, ridge_lambda=float(ridge_lambda), grid=grid)


def predict(model: RegressorModel, features: np.ndarray) -> float:
    """Linear prediction clamped to the MOS range [0, 5]."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (model.feature_dim,):
        raise ValueError(f"expected {model.feature_dim} features, got {features.shape}")
    raw = float(features @ model.weights[:-1] + model.weights[-1])
    return min(max(raw, MOS_MIN), MOS_MAX)


def training_loss(model: RegressorModel, X: np.ndarray, y: np.ndarray) -> float:
    """Mean squared error of the raw (unclamped) linear predictions on (X, y)."""
    X = np.asarray(X, dtype=np.float64)
    preds = X @ model.weights[:-1] + model.weights[-1]
    return float(np.mean((preds - np.asarray(y, dtype=np.float64)) ** 2))


# ------------------------------------------------------------------ file I/O

def save_composite(comp: FscdComposite, path: str | Path) -> None:
    header = HEADER.pack(MAGIC, FORMAT_VERSION, comp.width, comp.height, N_PLANES,
                         comp.sync_scale_c, comp.sync_scale_d)
    payload = comp.planes.astype("<f4").tobytes()
    Path(path).write_bytes(header + payload)


def load_composite(path: str | Path) -> FscdComposite:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < HEADER.size:
        raise CompositeFormatError(f"{path}: file shorter than header ({len(data)} bytes)")
    magic, version, width, height, n_planes, scale_c, scale_d = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CompositeFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CompositeFormatError(f"{path}: unsupported version {version}")
    if n_planes != N_PLANES:
        raise CompositeFormatError(f"{path}: plane count {n_planes}, expected {N_PLANES}")
    expected = HEADER.size + n_planes * width * height * 4
    if len(data) != expected:
        raise CompositeFormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    planes = np.frombuffer(data, dtype="<f4", offset=HEADER.size).reshape(n_planes, height, width)
    return FscdComposite(planes=planes.copy(), sync_scale_c=scale_c, sync_scale_d=scale_d,
                         clip_id=path.stem)


def save_model(model: RegressorModel, path: str | Path) -> None:
    payload = {
        "lambda": model.ridge_lambda,
        "grid": model.grid,
        "weights": [float(w) for w in model.weights],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_model(path: str | Path) -> RegressorModel:
    data = json.loads(Path(path).read_text())
    return RegressorModel(
        weights=np.asarray(data["weights"], dtype=np.float64),
        ridge_lambda=float(data["lambda"]),
        grid=int(data["grid"]),
    )
