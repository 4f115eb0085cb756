import { describe, expect, it } from "vitest";

import { ApiError, StudyApi, ratingProblem } from "../src/api.js";
import type { RatingPayload } from "../src/api.js";

/** Fetch stub that records calls and replays canned responses. */
function recordingFetch(status: number, body: unknown) {
  const calls: Array<{ url: string; init?: RequestInit }> = [];
  const impl = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { calls, impl };
}

function payload(overrides: Partial<RatingPayload> = {}): RatingPayload {
  return {
    subject_id: "s1",
    clip_id: "clip000",
    score: 3,
    distortions: [],
    ...overrides,
  };
}

describe("StudyApi", () => {
  it("encodes the subject id into the session request", async () => {
    const { calls, impl } = recordingFetch(200, {
      session_id: "abc", phase_size: 2, total: 6,
    });
    const api = new StudyApi("http://h:1", impl);
    const info = await api.openSession("subject one&two");
    expect(calls[0]?.url).toBe(
      "http://h:1/api/session?subject_id=subject%20one%26two");
    expect(info.session_id).toBe("abc");
    expect(info.total).toBe(6);
  });

  it("unwraps the taxonomy code list", async () => {
    const { impl } = recordingFetch(200, {
      codes: [{ code: "BL", name: "Blur" }],
    });
    const api = new StudyApi("", impl);
    const codes = await api.taxonomy();
    expect(codes).toEqual([{ code: "BL", name: "Blur" }]);
  });

  it("raises ApiError with the server detail on failure", async () => {
    const { impl } = recordingFetch(409, { detail: "already rated clip000" });
    const api = new StudyApi("", impl);
    const err = await api.nextClip("nope").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);
    expect((err as ApiError).message).toContain("already rated");
  });

  it("falls back to the status line when the error body is not JSON", async () => {
    const impl = async () => new Response("<html>oops</html>", {
      status: 502, statusText: "Bad Gateway",
    });
    const api = new StudyApi("", impl);
    const err = await api.progress("x").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).message).toContain("502");
  });

  it("posts ratings as JSON and returns the receipt", async () => {
    const { calls, impl } = recordingFetch(201, {
      ...payload({ distortions: ["BL", "NI"] }), timestamp: 99.5,
    });
    const api = new StudyApi("", impl);
    const receipt = await api.submitRating(payload({ distortions: ["BL", "NI"] }));
    expect(calls[0]?.url).toBe("/api/ratings");
    expect(calls[0]?.init?.method).toBe("POST");
    const sent = JSON.parse(String(calls[0]?.init?.body)) as RatingPayload;
    expect(sent).toEqual(payload({ distortions: ["BL", "NI"] }));
    expect(receipt.timestamp).toBe(99.5);
  });

  it("refuses to send a schema-invalid rating", async () => {
    const { calls, impl } = recordingFetch(201, {});
    const api = new StudyApi("", impl);
    for (const bad of [
      payload({ score: 0 }),
      payload({ score: 6 }),
      payload({ score: 3.5 }),
      payload({ subject_id: "" }),
      payload({ clip_id: "" }),
      payload({ distortions: ["BL", "BL"] }),
    ]) {
      expect(() => api.submitRating(bad)).toThrow(/invalid rating/);
    }
    expect(() => api.submitRating(payload({ distortions: ["ZZ"] }), ["BL"]))
      .toThrow(/unknown distortion/);
    expect(calls.length).toBe(0);
  });

  it("resolves server-relative media URLs against the base", () => {
    const api = new StudyApi("http://h:1/");
    expect(api.resolve("/media/clip000/frames.mjpg"))
      .toBe("http://h:1/media/clip000/frames.mjpg");
  });
});

describe("ratingProblem", () => {
  it("accepts a well-formed payload with and without codes", () => {
    expect(ratingProblem(payload())).toBeNull();
    expect(ratingProblem(payload({ distortions: ["BL"] }), ["BL", "NI"])).toBeNull();
  });

  it("pinpoints the offending field", () => {
    expect(ratingProblem(payload({ score: 9 }))).toContain("score");
    expect(ratingProblem(payload({ subject_id: "" }))).toContain("subject_id");
    expect(ratingProblem(payload({ distortions: ["XX"] }), ["BL"])).toContain("XX");
  });
});
