/**
 * Session controller for the rating interface.
 *
 * Holds everything the screens need — current clip, form contents, progress
 * counters — and talks to the server through StudyApi. The controller is
 * deliberately stateless across reloads: start() reconstructs the whole
 * view from /api/session, /api/taxonomy, /api/progress and /api/next, so a
 * subject can close the tab and resume where they left off.
 *
 * Flow: loading -> training (first visit only) -> rating -> ... -> done,
 * with a timed break overlay whenever the next clip crosses a phase
 * boundary. Submission is gated until a score is chosen and while a request
 * is in flight, so double clicks cannot produce two records.
 */

import { ApiError, StudyApi } from "./api.js";
import type { NextClip, RatingPayload, SessionInfo, TaxonomyEntry } from "./api.js";

/** Screens the interface can show. */
export type Screen = "loading" | "training" | "rating" | "break" | "done";

/** Mutable contents of the rating form for the clip on screen. */
export interface RatingFormState {
  score: number | null;
  distortions: string[];
  submitting: boolean;
}

/** Immutable snapshot handed to the renderer. */
export interface ViewState {
  screen: Screen;
  subjectId: string;
  clip: NextClip | null;
  mediaSrc: string | null;
  audioSrc: string | null;
  codes: TaxonomyEntry[];
  form: RatingFormState;
  completed: number;
  total: number;
  phaseSize: number;
  canSubmit: boolean;
  banner: string | null;
  breakRemainingMs: number;
}

/** Tuning knobs, all optional; tests inject a fake clock here. */
export interface ControllerOptions {
  breakMs?: number;
  now?: () => number;
}

/** Default mandatory break between phases: fifteen minutes. */
export const DEFAULT_BREAK_MS = 15 * 60 * 1000;

function emptyForm(): RatingFormState {
  return { score: null, distortions: [], submitting: false };
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return `server rejected the request (${err.status}): ${err.message}`;
  }
  return "could not reach the study server — check the connection and retry";
}

/** Drives one subject's pass through the study. */
export class SessionController {
  private readonly api: StudyApi;
  private readonly subjectId: string;
  private readonly breakMs: number;
  private readonly now: () => number;
  private readonly listeners: Array<() => void> = [];

  private screen: Screen = "loading";
  private session: SessionInfo | null = null;
  private codes: TaxonomyEntry[] = [];
  private clip: NextClip | null = null;
  private form: RatingFormState = emptyForm();
  private completed = 0;
  private total = 0;
  private banner: string | null = null;
  private lastPhase: number | null = null;
  private breakUntil = 0;
  private lastFailure: "start" | "submit" | "reload" | null = null;

  constructor(api: StudyApi, subjectId: string, options: ControllerOptions = {}) {
    this.api = api;
    this.subjectId = subjectId;
    this.breakMs = options.breakMs ?? DEFAULT_BREAK_MS;
    this.now = options.now ?? (() => Date.now());
  }

  /** Register a render callback, fired after every state change. */
  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener();
    }
  }

  /** True when the submit button should be live. */
  canSubmit(): boolean {
    return this.screen === "rating"
      && this.clip !== null
      && this.clip.clip_id !== null
      && this.form.score !== null
      && !this.form.submitting;
  }

  /** Milliseconds left on the break overlay; zero off-break. */
  breakRemainingMs(): number {
    if (this.screen !== "break") {
      return 0;
    }
    return Math.max(0, this.breakUntil - this.now());
  }

  /** Snapshot for the renderer. */
  getState(): ViewState {
    const mediaUrl = this.clip?.media_url ?? null;
    const audioUrl = this.clip?.audio_url ?? null;
    return {
      screen: this.screen,
      subjectId: this.subjectId,
      clip: this.clip,
      mediaSrc: mediaUrl === null ? null : this.api.resolve(mediaUrl),
      audioSrc: audioUrl === null ? null : this.api.resolve(audioUrl),
      codes: this.codes,
      form: { ...this.form, distortions: [...this.form.distortions] },
      completed: this.completed,
      total: this.total,
      phaseSize: this.session?.phase_size ?? 0,
      canSubmit: this.canSubmit(),
      banner: this.banner,
      breakRemainingMs: this.breakRemainingMs(),
    };
  }

  /**
   * Open the session and rebuild the view from the server. Fresh subjects
   * land on the training screen; returning ones go straight to their next
   * clip (or the completion screen).
   */
  async start(): Promise<void> {
    this.screen = "loading";
    this.banner = null;
    this.emit();
    try {
      this.session = await this.api.openSession(this.subjectId);
      this.codes = await this.api.taxonomy();
      this.lastPhase = null;
      const landed = await this.loadNext();
      if (landed === "rating" && this.completed === 0) {
        this.screen = "training";
      }
      this.lastFailure = null;
    } catch (err) {
      this.banner = describeError(err);
      this.lastFailure = "start";
    }
    this.emit();
  }

  /** Leave the training screen and show the first clip. */
  beginRating(): void {
    if (this.screen !== "training") {
      return;
    }
    this.screen = "rating";
    this.emit();
  }

  /** Record the ACR score; values outside the 1..5 scale are ignored. */
  selectScore(score: number): void {
    if (!Number.isInteger(score) || score < 1 || score > 5) {
      return;
    }
    this.form.score = score;
    this.emit();
  }

  /** Toggle a distortion code; codes missing from the taxonomy are ignored. */
  toggleDistortion(code: string): void {
    if (!this.codes.some((entry) => entry.code === code)) {
      return;
    }
    if (this.form.distortions.includes(code)) {
      this.form.distortions = this.form.distortions.filter((c) => c !== code);
    } else {
      this.form.distortions = [...this.form.distortions, code];
    }
    this.emit();
  }

  /**
   * Submit the form for the clip on screen. On success (or on a duplicate
   * conflict, meaning the clip was already rated elsewhere) the form resets
   * and the next clip loads; on any other failure the form is kept intact
   * and a retry banner is shown.
   */
  async submitCurrent(): Promise<void> {
    if (!this.canSubmit() || this.clip === null || this.clip.clip_id === null
        || this.form.score === null) {
      return;
    }
    this.form.submitting = true;
    this.banner = null;
    this.emit();
    const payload: RatingPayload = {
      subject_id: this.subjectId,
      clip_id: this.clip.clip_id,
      score: this.form.score,
      distortions: [...this.form.distortions].sort(),
    };
    try {
      await this.api.submitRating(payload, this.codes.map((entry) => entry.code));
    } catch (err) {
      if (!(err instanceof ApiError) || err.status !== 409) {
        this.banner = describeError(err);
        this.lastFailure = "submit";
        this.form.submitting = false;
        this.emit();
        return;
      }
      // 409: already recorded for this subject; skip forward.
    }
    this.form = emptyForm();
    await this.refresh();
  }

  /** Re-run whichever request last failed. */
  retry(): Promise<void> {
    if (this.lastFailure === "submit") {
      return this.submitCurrent();
    }
    if (this.lastFailure === "start" || this.session === null) {
      return this.start();
    }
    return this.refresh();
  }

  /**
   * Dismiss the break overlay. Before the timer runs out this needs the
   * supervisor override; afterwards anyone may continue.
   */
  dismissBreak(supervisor = false): void {
    if (this.screen !== "break") {
      return;
    }
    if (!supervisor && this.breakRemainingMs() > 0) {
      return;
    }
    this.screen = "rating";
    this.emit();
  }

  private async refresh(): Promise<void> {
    try {
      await this.loadNext();
      this.banner = null;
      this.lastFailure = null;
    } catch (err) {
      this.banner = describeError(err);
      this.lastFailure = "reload";
    }
    this.emit();
  }

  private async loadNext(): Promise<Screen> {
    if (this.session === null) {
      throw new Error("session not started");
    }
    const progress = await this.api.progress(this.session.session_id);
    const next = await this.api.nextClip(this.session.session_id);
    this.completed = progress.completed;
    this.total = progress.total;
    this.clip = next;
    if (next.done) {
      this.screen = "done";
      return this.screen;
    }
    const crossedPhase = this.lastPhase !== null && next.phase > this.lastPhase;
    this.lastPhase = next.phase;
    if (crossedPhase) {
      this.screen = "break";
      this.breakUntil = this.now() + this.breakMs;
    } else {
      this.screen = "rating";
    }
    return this.screen;
  }
}
