/**
 * Typed client for the study harness REST API.
 *
 * Everything the rating interface knows about a study arrives through the
 * JSON endpoints under /api; media is referenced by URL and streamed by the
 * browser, never read from disk. Interface fields keep the snake_case names
 * of the wire format so payloads round-trip without mapping.
 */

/** Session handle returned when a subject checks in. */
export interface SessionInfo {
  session_id: string;
  phase_size: number;
  total: number;
}

/** Next clip in the session queue; clip_id is null once the queue is empty. */
export interface NextClip {
  clip_id: string | null;
  media_url: string | null;
  audio_url: string | null;
  index: number;
  phase: number;
  done: boolean;
}

/** One distortion code with its display name. */
export interface TaxonomyEntry {
  code: string;
  name: string;
}

/** Rating payload submitted for one clip. */
export interface RatingPayload {
  subject_id: string;
  clip_id: string;
  score: number;
  distortions: string[];
}

/** Stored rating echoed back by the server on success. */
export interface RatingReceipt extends RatingPayload {
  timestamp: number;
}

/** Snapshot of how far a session has progressed. */
export interface SessionProgress {
  session_id: string;
  completed: number;
  total: number;
  phase: number;
  phase_size: number;
  done: boolean;
}

/** Error carrying the HTTP status and the server's detail message. */
export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.name = "ApiError";
    this.status = status;
  }
}

/** Minimal fetch signature so tests can substitute a fake transport. */
export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/**
 * Check a rating payload against the server's schema before it leaves the
 * client. Returns a human-readable problem, or null when the payload is
 * acceptable. When `validCodes` is given, every distortion code must be a
 * member.
 */
export function ratingProblem(payload: RatingPayload, validCodes?: string[]): string | null {
  if (payload.subject_id.length === 0) {
    return "subject_id must be non-empty";
  }
  if (payload.clip_id.length === 0) {
    return "clip_id must be non-empty";
  }
  if (!Number.isInteger(payload.score) || payload.score < 1 || payload.score > 5) {
    return `score must be an integer in 1..5, got ${payload.score}`;
  }
  const seen = new Set<string>();
  for (const code of payload.distortions) {
    if (seen.has(code)) {
      return `duplicate distortion code ${code}`;
    }
    seen.add(code);
    if (validCodes !== undefined && !validCodes.includes(code)) {
      return `unknown distortion code ${code}`;
    }
  }
  return null;
}

/** REST client bound to one server base URL. */
export class StudyApi {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl = "", fetchImpl: FetchLike = (url, init) => fetch(url, init)) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
  }

  /** Absolute form of a server-relative URL such as a media path. */
  resolve(path: string): string {
    return this.baseUrl + path;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = `${response.status} ${response.statusText}`;
      try {
        const body = (await response.json()) as { detail?: unknown };
        if (typeof body.detail === "string") {
          detail = body.detail;
        }
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  /** Open (or re-open) the deterministic session for a subject. */
  openSession(subjectId: string): Promise<SessionInfo> {
    return this.request<SessionInfo>(
      `/api/session?subject_id=${encodeURIComponent(subjectId)}`);
  }

  /** Fetch the next unrated clip for a session. */
  nextClip(sessionId: string): Promise<NextClip> {
    return this.request<NextClip>(
      `/api/next?session_id=${encodeURIComponent(sessionId)}`);
  }

  /** Fetch the distortion taxonomy shown in the rating panel. */
  async taxonomy(): Promise<TaxonomyEntry[]> {
    const body = await this.request<{ codes: TaxonomyEntry[] }>("/api/taxonomy");
    return body.codes;
  }

  /** Fetch the progress snapshot used to resume a session. */
  progress(sessionId: string): Promise<SessionProgress> {
    return this.request<SessionProgress>(
      `/api/progress?session_id=${encodeURIComponent(sessionId)}`);
  }

  /**
   * Submit one rating. The payload is validated locally first so a
   * malformed request can never reach the server; server-side conflicts
   * (duplicate rating, unknown clip) surface as ApiError.
   */
  submitRating(payload: RatingPayload, validCodes?: string[]): Promise<RatingReceipt> {
    const problem = ratingProblem(payload, validCodes);
    if (problem !== null) {
      throw new Error(`invalid rating: ${problem}`);
    }
    return this.request<RatingReceipt>("/api/ratings", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }
}
