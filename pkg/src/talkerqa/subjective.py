"""Subjective study processing: ratings in, screened and rescaled MOSs out.

The pipeline order is screen (raw scores) -> per-subject z-scores ->
global rescale to [0, 5] -> per-clip MOS, with distortion flags decided
by strict majority vote among the retained raters of each clip.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

# (code, display name); the last three slots are study-configurable placeholders
DEFAULT_TAXONOMY = (
    ("BL", "Blur"),
    ("NI", "Noise"),
    ("AF", "Artifacts"),
    ("LLM", "Little lip motion"),
    ("MT", "Muscle twitch"),
    ("DB", "Distorted background"),
    ("MK", "Misaligned keypoints"),
    ("X1", "Other distortion 1"),
    ("X2", "Other distortion 2"),
    ("X3", "Other distortion 3"),
)
TAXONOMY_SIZE = 10

# subject rejection rule constants
KURTOSIS_NORMAL_RANGE = (2.0, 4.0)
THRESHOLD_NORMAL = 2.0
THRESHOLD_OTHER = math.sqrt(20.0)
REJECT_FRACTION = 0.05
REJECT_BALANCE = 0.3


class RatingFormatError(Exception):
    """A ratings file or record is malformed."""


class DegenerateStudyError(Exception):
    """The study data admits no meaningful normalization."""


@dataclass(frozen=True)
class DistortionTaxonomy:
    entries: tuple[tuple[str, str], ...] = DEFAULT_TAXONOMY

    def __post_init__(self):
        codes = [c for c, _ in self.entries]
        if len(codes) != TAXONOMY_SIZE or len(set(codes)) != TAXONOMY_SIZE:
            raise ValueError(f"taxonomy needs exactly {TAXONOMY_SIZE} unique codes, got {codes}")

    @property
    def codes(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.entries)

    @classmethod
    def from_json(cls, path: str | Path) -> "DistortionTaxonomy":
        data = json.loads(Path(path).read_text())
        return cls(entries=tuple((str(e["code"]), str(e["name"])) for e in data["codes"]))


@dataclass(frozen=True)
class RatingRecord:
    subject_id: str
    clip_id: str
    score: int
    distortions: frozenset[str] = frozenset()
    timestamp: float = 0.0

    def __post_init__(self):
        if self.score not in (1, 2, 3, 4, 5):
            raise ValueError(f"score must be 1..5, got {self.score}")
        if not self.subject_id or not self.clip_id:
            raise ValueError("subject_id and clip_id must be non-empty")

    def to_json(self) -> str:
        return json.dumps({
            "subject_id": self.subject_id,
            "clip_id": self.clip_id,
            "score": self.score,
            "distortions": sorted(self.distortions),
            "timestamp": self.timestamp,
        })


@dataclass(frozen=True)
class MosEntry:
    clip_id: str
    mos: float
    n_raters: int
    distortion_flags: tuple[int, ...]


@dataclass(frozen=True)
class SubjectScreening:
    subject_id: str
    retained: bool
    p_count: int
    q_count: int
    n_ratings: int


@dataclass(frozen=True)
class SubjectScreeningReport:
    subjects: tuple[SubjectScreening, ...]

    def retained_ids(self) -> set[str]:
        return {s.subject_id for s in self.subjects if s.retained}

    def rejected_ids(self) -> set[str]:
        return {s.subject_id for s in self.subjects if not s.retained}


def parse_rating_line(line: str, taxonomy: DistortionTaxonomy) -> RatingRecord:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RatingFormatError(f"invalid JSON: {exc}") from exc
    try:
        record = RatingRecord(
            subject_id=str(data["subject_id"]),
            clip_id=str(data["clip_id"]),
            score=int(data["score"]),
            distortions=frozenset(str(d) for d in data.get("distortions", [])),
            timestamp=float(data.get("timestamp", 0.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise RatingFormatError(str(exc)) from exc
    unknown = record.distortions - set(taxonomy.codes)
    if unknown:
        raise RatingFormatError(f"unknown distortion codes {sorted(unknown)}")
    return record


def load_ratings(path: str | Path, taxonomy: DistortionTaxonomy | None = None) -> list[RatingRecord]:
    """Read a ratings JSONL file, rejecting malformed lines and duplicates."""
    taxonomy = taxonomy or DistortionTaxonomy()
    records: list[RatingRecord] = []
    seen: set[tuple[str, str]] = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = parse_rating_line(line, taxonomy)
            except RatingFormatError as exc:
                raise RatingFormatError(f"{path}:{lineno}: {exc}") from exc
            key = (record.subject_id, record.clip_id)
            if key in seen:
                raise RatingFormatError(
                    f"{path}:{lineno}: duplicate rating for subject "
                    f"{record.subject_id!r} on clip {record.clip_id!r}"
                )
            seen.add(key)
            records.append(record)
    return records


def _by_subject(records: list[RatingRecord]) -> dict[str, list[RatingRecord]]:
    groups: dict[str, list[RatingRecord]] = {}
    for r in records:
        groups.setdefault(r.subject_id, []).append(r)
    return groups


def _by_clip(records: list[RatingRecord]) -> dict[str, list[RatingRecord]]:
    groups: dict[str, list[RatingRecord]] = {}
    for r in records:
        groups.setdefault(r.clip_id, []).append(r)
    return groups


def zscore_normalize(records: list[RatingRecord]) -> tuple[dict[tuple[str, str], float], list[str]]:
    """Per-subject z-scores: (score - subject mean) / subject sample std.

    Returns the z table keyed by (subject_id, clip_id) plus the subjects
    excluded because their ratings had zero spread. Every subject must have
    rated at least two clips.
    """
    z: dict[tuple[str, str], float] = {}
    degenerate: list[str] = []
    for subject, recs in sorted(_by_subject(records).items()):
        scores = np.array([r.score for r in recs], dtype=np.float64)
        if scores.size < 2:
            raise ValueError(f"subject {subject!r} has {scores.size} rating(s), need >= 2")
        sigma = scores.std(ddof=1)
        if sigma == 0.0:
            degenerate.append(subject)
            continue
        mu = scores.mean()
        for r in recs:
            z[(r.subject_id, r.clip_id)] = (r.score - mu) / sigma
    return z, degenerate


def _kurtosis(values: np.ndarray) -> float:
    m2 = np.mean((values - values.mean()) ** 2)
    if m2 == 0.0:
        return float("nan")
    return float(np.mean((values - values.mean()) ** 4) / m2 ** 2)


def screen_subjects(records: list[RatingRecord]) -> SubjectScreeningReport:
    """BT.500-style outlier-subject rejection on raw scores.

    Per clip, ratings beyond mean +/- f * std are counted into each subject's
    high (P) and low (Q) tallies, with f = 2 for roughly normal score
    distributions (kurtosis in [2, 4]) and sqrt(20) otherwise. A subject is
    rejected when the outliers exceed 5% of their ratings and scatter to both
    sides rather than reflecting a consistent bias (|P - Q| / (P + Q) < 0.3).
    """
    by_subject = _by_subject(records)
    if len(by_subject) < 2:
        raise ValueError(f"screening needs >= 2 subjects, got {len(by_subject)}")

    limits: dict[str, tuple[float, float]] = {}
    for clip, recs in _by_clip(records).items():
        scores = np.array([r.score for r in recs], dtype=np.float64)
        mean = scores.mean()
        std = scores.std(ddof=1) if scores.size > 1 else 0.0
        beta2 = _kurtosis(scores)
        factor = THRESHOLD_NORMAL if KURTOSIS_NORMAL_RANGE[0] <= beta2 <= KURTOSIS_NORMAL_RANGE[1] \
            else THRESHOLD_OTHER
        limits[clip] = (mean + factor * std, mean - factor * std)

    screenings = []
    for subject, recs in sorted(by_subject.items()):
        p = sum(1 for r in recs if r.score > limits[r.clip_id][0])
        q = sum(1 for r in recs if r.score < limits[r.clip_id][1])
        n = len(recs)
        rejected = (p + q) / n > REJECT_FRACTION and (
            (p + q) > 0 and abs(p - q) / (p + q) < REJECT_BALANCE
        )
        screenings.append(SubjectScreening(
            subject_id=subject, retained=not rejected, p_count=p, q_count=q, n_ratings=n,
        ))
    return SubjectScreeningReport(subjects=tuple(screenings))


def rescale_scores(z_table: dict[tuple[str, str], float]) -> dict[tuple[str, str], float]:
    """Affine map of all retained z values onto [0, 5] using the global extremes."""
    if not z_table:
        raise DegenerateStudyError("no z values to rescale")
    values = np.array(list(z_table.values()))
    z_min, z_max = float(values.min()), float(values.max())
    if z_max == z_min:
        raise DegenerateStudyError("all z values identical; rescale undefined")
    span = z_max - z_min
    return {key: 5.0 * (z - z_min) / span for key, z in z_table.items()}


def compute_mos(rescaled: dict[tuple[str, str], float]) -> list[MosEntry]:
    """Per-clip mean of rescaled scores (distortion flags filled in later)."""
    by_clip: dict[str, list[float]] = {}
    for (_, clip_id), value in rescaled.items():
        by_clip.setdefault(clip_id, []).append(value)
    return [
        MosEntry(clip_id=clip, mos=float(np.mean(vals)), n_raters=len(vals),
                 distortion_flags=(0,) * TAXONOMY_SIZE)
        for clip, vals in sorted(by_clip.items())
    ]


def aggregate_distortions(clip_records: list[RatingRecord],
                          taxonomy: DistortionTaxonomy) -> tuple[int, ...]:
    """Strict-majority distortion flags: a flag is set only when more than
    half of the clip's raters ticked that distortion."""
    if not clip_records:
        raise ValueError("cannot aggregate distortions with zero raters")
    n = len(clip_records)
    flags = []
    for code in taxonomy.codes:
        votes = sum(1 for r in clip_records if code in r.distortions)
        flags.append(1 if votes > n / 2 else 0)
    return tuple(flags)


@dataclass(frozen=True)
class StudyResult:
    entries: tuple[MosEntry, ...]
    screening: SubjectScreeningReport
    degenerate_subjects: tuple[str, ...]
    dropped_clips: tuple[str, ...]  # clips whose raters were all excluded


def process_ratings(records: list[RatingRecord],
                    taxonomy: DistortionTaxonomy | None = None,
                    screener: Callable[[list[RatingRecord]], SubjectScreeningReport] = screen_subjects,
                    ) -> StudyResult:
    """Full study pipeline: screen, z-score, rescale, MOS, distortion flags.

    ``screener`` is pluggable so alternative subject-rejection rules can be
    swapped in without touching the rest of the pipeline.
    """
    taxonomy = taxonomy or DistortionTaxonomy()
    screening = screener(records)
    retained = [r for r in records if r.subject_id in screening.retained_ids()]
    z_table, degenerate = zscore_normalize(retained)
    retained = [r for r in retained if r.subject_id not in degenerate]
    rescaled = rescale_scores(z_table)

    by_clip = _by_clip(retained)
    entries = []
    for entry in compute_mos(rescaled):
        flags = aggregate_distortions(by_clip[entry.clip_id], taxonomy)
        entries.append(MosEntry(clip_id=entry.clip_id, mos=entry.mos,
                                n_raters=entry.n_raters, distortion_flags=flags))

    dropped = sorted({r.clip_id for r in records} - set(by_clip))
    return StudyResult(entries=tuple(entries), screening=screening,
                       degenerate_subjects=tuple(degenerate), dropped_clips=tuple(dropped))


def write_mos_csv(entries: list[MosEntry] | tuple[MosEntry, ...], path: str | Path,
                  taxonomy: DistortionTaxonomy | None = None) -> None:
    taxonomy = taxonomy or DistortionTaxonomy()
    lines = ["clip_id,mos,n_raters," + ",".join(taxonomy.codes)]
    for e in entries:
        flags = ",".join(str(f) for f in e.distortion_flags)
        lines.append(f"{e.clip_id},{e.mos:.6f},{e.n_raters},{flags}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_mos_csv(path: str | Path) -> dict[str, float]:
    """clip_id -> mos from a CSV written by write_mos_csv."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("clip_id,mos,n_raters"):
        raise RatingFormatError(f"{path}: not a MOS CSV (bad header)")
    out: dict[str, float] = {}
    for line in lines[1:]:
        parts = line.split(",")
        out[parts[0]] = float(parts[1])
    return out
