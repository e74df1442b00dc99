import { describe, expect, it } from "vitest";

import {
  applySubmitFailure,
  applySubmitSuccess,
  emptyDraft,
  initialState,
  isValidScore,
  labelViolations,
  prepareSubmission,
} from "../src/state.js";

const image = { width: 32, height: 32 };

describe("score bounds", () => {
  it("accepts exactly the integers 1..5", () => {
    for (const score of [1, 2, 3, 4, 5]) expect(isValidScore(score)).toBe(true);
    for (const score of [0, 6, -1, 2.5, NaN, "4", null, undefined]) {
      expect(isValidScore(score as never)).toBe(false);
    }
  });

  it("blocks an out-of-range score before any request", () => {
    const draft = { ...emptyDraft(), imageId: "img", score: 0 };
    const prepared = prepareSubmission(draft, image);
    expect(prepared.ok).toBe(false);
    if (!prepared.ok) {
      expect(prepared.problems.join(" ")).toMatch(/score/);
    }
  });
});

describe("label bounds", () => {
  it("accepts labels inside the image", () => {
    expect(labelViolations([{ x: 0, y: 0, w: 32, h: 32, text: "" }], image)).toEqual([]);
    expect(labelViolations([{ x: 5, y: 7, w: 3, h: 2, text: "spot" }], image)).toEqual([]);
  });

  it("rejects out-of-bounds, degenerate, and non-integer boxes", () => {
    expect(labelViolations([{ x: 30, y: 0, w: 5, h: 5, text: "" }], image)).not.toEqual([]);
    expect(labelViolations([{ x: -1, y: 0, w: 2, h: 2, text: "" }], image)).not.toEqual([]);
    expect(labelViolations([{ x: 0, y: 0, w: 0, h: 2, text: "" }], image)).not.toEqual([]);
    expect(labelViolations([{ x: 0.5, y: 0, w: 2, h: 2, text: "" }], image)).not.toEqual([]);
  });
});

describe("submission flow", () => {
  const goodDraft = {
    imageId: "img-1",
    score: 4,
    labels: [{ x: 1, y: 2, w: 3, h: 4, text: "finding" }],
    report: "looks fine",
  };

  it("produces the wire body when everything validates", () => {
    const prepared = prepareSubmission(goodDraft, image);
    expect(prepared.ok).toBe(true);
    if (prepared.ok) {
      expect(prepared.body).toEqual({
        image_id: "img-1",
        score: 4,
        labels: goodDraft.labels,
        report: "looks fine",
      });
    }
  });

  it("success clears the draft and records the review id", () => {
    const state = { ...initialState(), draft: goodDraft, inFlight: true };
    const next = applySubmitSuccess(state, "rev-abc");
    expect(next.draft).toEqual(emptyDraft());
    expect(next.lastReviewId).toBe("rev-abc");
    expect(next.inFlight).toBe(false);
  });

  it("a server 403 preserves the draft and surfaces the message", () => {
    const state = { ...initialState(), draft: goodDraft, inFlight: true };
    const next = applySubmitFailure(state, { status: 403, message: "may not review" });
    expect(next.draft).toEqual(goodDraft); // untouched
    expect(next.notice).toContain("403");
    expect(next.notice).toContain("may not review");
    expect(next.inFlight).toBe(false);
  });

  it("a server 400 also preserves the draft", () => {
    const state = { ...initialState(), draft: goodDraft, inFlight: true };
    const next = applySubmitFailure(state, { status: 400, message: "label out of bounds" });
    expect(next.draft).toEqual(goodDraft);
  });
});
