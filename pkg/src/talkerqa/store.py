"""Durable append-only storage for study ratings.

One JSONL line per rating. Appends are line-atomic: the full line is built
in memory, written in a single call, and flushed + fsynced before the append
returns, so a crash between requests never leaves a torn line behind. A
(subject_id, clip_id) index rebuilt by scanning the file on startup rejects
duplicates.
"""

from __future__ import annotations

import os
import threading
from pathlib import Path

from .subjective import DistortionTaxonomy, RatingFormatError, RatingRecord, parse_rating_line


class StorageError(Exception):
    """The ratings file is unreadable or an append failed."""


class DuplicateRatingError(Exception):
    """This (subject_id, clip_id) pair already has a stored rating."""


class RatingsStore:
    """Append-only JSONL store with duplicate detection."""

    def __init__(self, path: str | Path, taxonomy: DistortionTaxonomy | None = None):
        self._path = Path(path)
        self._taxonomy = taxonomy or DistortionTaxonomy()
        self._lock = threading.Lock()
        self._index: set[tuple[str, str]] = set()
        self._records: list[RatingRecord] = []
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._scan_existing()

    @property
    def path(self) -> Path:
        return self._path

    def _scan_existing(self) -> None:
        if not self._path.exists():
            return
        try:
            lines = self._path.read_text().splitlines()
        except OSError as exc:
            raise StorageError(f"cannot read {self._path}: {exc}") from exc
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                record = parse_rating_line(line, self._taxonomy)
            except RatingFormatError as exc:
                raise StorageError(f"{self._path}:{lineno}: {exc}") from exc
            key = (record.subject_id, record.clip_id)
            if key in self._index:
                raise StorageError(f"{self._path}:{lineno}: duplicate rating {key}")
            self._index.add(key)
            self._records.append(record)

    def has(self, subject_id: str, clip_id: str) -> bool:
        with self._lock:
            return (subject_id, clip_id) in self._index

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def records(self) -> list[RatingRecord]:
        with self._lock:
            return list(self._records)

    def rated_clips(self, subject_id: str) -> set[str]:
        with self._lock:
            return {clip for subj, clip in self._index if subj == subject_id}

    def append(self, record: RatingRecord) -> None:
        """Durably persist one rating; raises on duplicates before writing."""
        line = record.to_json() + "\n"
        with self._lock:
            key = (record.subject_id, record.clip_id)
            if key in self._index:
                raise DuplicateRatingError(
                    f"subject {record.subject_id!r} already rated clip {record.clip_id!r}"
                )
            try:
                with open(self._path, "ab") as fh:
                    fh.write(line.encode("utf-8"))
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageError(f"append to {self._path} failed: {exc}") from exc
            self._index.add(key)
            self._records.append(record)
