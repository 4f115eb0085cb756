"""HTTP study service: hands out clips in deterministic per-subject order,
streams fixture media to the browser, and persists incoming ratings.

The REST surface is intentionally small — session setup, next-clip lookup,
taxonomy listing, rating submission, and progress — so any client that can
speak JSON over HTTP can run a study. Clips are served either as a
pre-transcoded MP4 placed alongside the manifest or, when none exists, as an
MJPEG frame stream plus a WAV endpoint rendered from the fixture files.
"""

from __future__ import annotations

import hashlib
import io
import random
import threading
import time
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse, Response, StreamingResponse
from PIL import Image
from pydantic import BaseModel, Field

from .media import load_clip
from .store import DuplicateRatingError, RatingsStore, StorageError
from .subjective import DistortionTaxonomy, RatingRecord

DEFAULT_PHASE_SIZE = 120
MP4_NAME = "video.mp4"


@dataclass(frozen=True)
class ClipInfo:
    clip_id: str
    manifest_path: Path
    mp4_path: Path | None

    @property
    def media_url(self) -> str:
        if self.mp4_path is not None:
            return f"/media/{self.clip_id}.mp4"
        return f"/media/{self.clip_id}/frames.mjpg"

    @property
    def audio_url(self) -> str | None:
        if self.mp4_path is not None:
            return None
        return f"/media/{self.clip_id}/audio.wav"


@dataclass(frozen=True)
class StudySession:
    session_id: str
    subject_id: str
    order: tuple[str, ...]  # full clip queue, phase-chunked by index
    phase_size: int


class SessionRegistry:
    """Deterministic sessions: the same (study seed, subject) always yields
    the same session id and clip order."""

    def __init__(self, clip_ids: list[str], seed: int, phase_size: int):
        self._clip_ids = sorted(clip_ids)
        self._seed = seed
        self._phase_size = phase_size
        self._sessions: dict[str, StudySession] = {}
        self._lock = threading.Lock()

    def get_or_create(self, subject_id: str) -> StudySession:
        digest = hashlib.sha256(f"{self._seed}:{subject_id}".encode()).hexdigest()
        session_id = digest[:16]
        with self._lock:
            if session_id not in self._sessions:
                order = list(self._clip_ids)
                random.Random(int(digest, 16)).shuffle(order)
                self._sessions[session_id] = StudySession(
                    session_id=session_id,
                    subject_id=subject_id,
                    order=tuple(order),
                    phase_size=self._phase_size,
                )
            return self._sessions[session_id]

    def lookup(self, session_id: str) -> StudySession | None:
        with self._lock:
            return self._sessions.get(session_id)


class SessionOut(BaseModel):
    session_id: str
    phase_size: int
    total: int


class NextOut(BaseModel):
    clip_id: str | None
    media_url: str | None
    audio_url: str | None
    index: int
    phase: int
    done: bool


class TaxonomyEntry(BaseModel):
    code: str
    name: str


class TaxonomyOut(BaseModel):
    codes: list[TaxonomyEntry]


class RatingIn(BaseModel):
    subject_id: str = Field(min_length=1)
    clip_id: str = Field(min_length=1)
    score: int = Field(ge=1, le=5)
    distortions: list[str] = Field(default_factory=list)


class RatingOut(BaseModel):
    subject_id: str
    clip_id: str
    score: int
    distortions: list[str]
    timestamp: float


class ProgressOut(BaseModel):
    session_id: str
    completed: int
    total: int
    phase: int
    phase_size: int
    done: bool


def _scan_dataset(dataset_dir: Path) -> dict[str, ClipInfo]:
    clips: dict[str, ClipInfo] = {}
    for manifest in sorted(dataset_dir.glob("*/manifest.json")):
        clip_id = manifest.parent.name
        mp4 = manifest.parent / MP4_NAME
        clips[clip_id] = ClipInfo(
            clip_id=clip_id,
            manifest_path=manifest,
            mp4_path=mp4 if mp4.exists() else None,
        )
    if not clips:
        raise ValueError(f"no clip manifests under {dataset_dir}")
    return clips


def _wav_bytes(samples: np.ndarray, sample_rate: int) -> bytes:
    ints = np.clip(np.round(samples * 32768.0), -32768, 32767).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(ints.tobytes())
    return buf.getvalue()


def _jpeg_bytes(frame: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(frame).save(buf, format="JPEG", quality=85)
    return buf.getvalue()


def create_app(
    dataset_dir: str | Path,
    store_path: str | Path,
    phase_size: int = DEFAULT_PHASE_SIZE,
    seed: int = 0,
    taxonomy: DistortionTaxonomy | None = None,
) -> FastAPI:
    """Build the study service around an immutable dataset snapshot."""
    if phase_size < 1:
        raise ValueError("phase_size must be >= 1")
    taxonomy = taxonomy or DistortionTaxonomy()
    clips = _scan_dataset(Path(dataset_dir))
    store = RatingsStore(store_path, taxonomy=taxonomy)
    sessions = SessionRegistry(list(clips), seed=seed, phase_size=phase_size)

    app = FastAPI(title="talkerqa study service")
    app.state.store = store
    app.state.sessions = sessions

    @app.exception_handler(RequestValidationError)
    async def malformed_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    def session_or_404(session_id: str) -> StudySession:
        session = sessions.lookup(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return session

    @app.get("/api/session", response_model=SessionOut)
    def open_session(subject_id: str = Query(min_length=1)):
        session = sessions.get_or_create(subject_id)
        return SessionOut(session_id=session.session_id,
                          phase_size=session.phase_size, total=len(session.order))

    @app.get("/api/next", response_model=NextOut)
    def next_clip(session_id: str = Query(min_length=1)):
        session = session_or_404(session_id)
        rated = store.rated_clips(session.subject_id)
        for index, clip_id in enumerate(session.order):
            if clip_id not in rated:
                info = clips[clip_id]
                return NextOut(clip_id=clip_id, media_url=info.media_url,
                               audio_url=info.audio_url, index=index,
                               phase=index // session.phase_size, done=False)
        total = len(session.order)
        return NextOut(clip_id=None, media_url=None, audio_url=None, index=total,
                       phase=total // session.phase_size, done=True)

    @app.get("/api/taxonomy", response_model=TaxonomyOut)
    def get_taxonomy():
        return TaxonomyOut(codes=[TaxonomyEntry(code=c, name=n) for c, n in taxonomy.entries])

    @app.get("/api/progress", response_model=ProgressOut)
    def progress(session_id: str = Query(min_length=1)):
        session = session_or_404(session_id)
        rated = store.rated_clips(session.subject_id)
        completed = sum(1 for clip_id in session.order if clip_id in rated)
        total = len(session.order)
        return ProgressOut(session_id=session.session_id, completed=completed, total=total,
                           phase=completed // session.phase_size,
                           phase_size=session.phase_size, done=completed >= total)

    @app.post("/api/ratings", response_model=RatingOut, status_code=201)
    def submit_rating(rating: RatingIn):
        if rating.clip_id not in clips:
            raise HTTPException(status_code=404, detail=f"unknown clip {rating.clip_id!r}")
        unknown = set(rating.distortions) - set(taxonomy.codes)
        if unknown:
            raise HTTPException(status_code=400,
                                detail=f"unknown distortion codes {sorted(unknown)}")
        record = RatingRecord(
            subject_id=rating.subject_id,
            clip_id=rating.clip_id,
            score=rating.score,
            distortions=frozenset(rating.distortions),
            timestamp=time.time(),
        )
        try:
            store.append(record)
        except DuplicateRatingError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        except StorageError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return RatingOut(subject_id=record.subject_id, clip_id=record.clip_id,
                         score=record.score, distortions=sorted(record.distortions),
                         timestamp=record.timestamp)

    def clip_or_404(clip_id: str) -> ClipInfo:
        info = clips.get(clip_id)
        if info is None:
            raise HTTPException(status_code=404, detail=f"unknown clip {clip_id!r}")
        return info

    @app.get("/media/{clip_id}.mp4")
    def media_mp4(clip_id: str):
        info = clip_or_404(clip_id)
        if info.mp4_path is None:
            raise HTTPException(status_code=404, detail=f"clip {clip_id!r} has no MP4")
        return FileResponse(info.mp4_path, media_type="video/mp4")

    @app.get("/media/{clip_id}/frames.mjpg")
    def media_frames(clip_id: str, pace: str = "real"):
        """MJPEG stream of the clip's frames; pace=fast drops inter-frame sleeps."""
        info = clip_or_404(clip_id)
        bundle = load_clip(info.manifest_path)
        delay = 0.0 if pace == "fast" else 1.0 / bundle.video.fps

        def stream():
            for frame in bundle.video.frames:
                payload = _jpeg_bytes(frame)
                yield (b"--frame\r\nContent-Type: image/jpeg\r\n"
                       + f"Content-Length: {len(payload)}\r\n\r\n".encode()
                       + payload + b"\r\n")
                if delay:
                    time.sleep(delay)

        return StreamingResponse(stream(),
                                 media_type="multipart/x-mixed-replace; boundary=frame")

    @app.get("/media/{clip_id}/audio.wav")
    def media_audio(clip_id: str):
        info = clip_or_404(clip_id)
        bundle = load_clip(info.manifest_path)
        return Response(content=_wav_bytes(bundle.audio.samples, bundle.audio.sample_rate),
                        media_type="audio/wav")

    return app
