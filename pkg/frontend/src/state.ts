/**
 * Review drafting: client-side validation mirroring the server's rules
 * (score 1..5, labels inside the image), and the submit outcome policy —
 * success clears the draft, any server rejection preserves it together with
 * the server's message.
 */

import type { ApiError, ImagePayload, LabelBox, ReviewBody } from "./api.js";

export interface ReviewDraft {
  imageId: string | null;
  score: number | null;
  labels: LabelBox[];
  report: string;
}

export interface ReviewPanelState {
  draft: ReviewDraft;
  notice: string | null;
  lastReviewId: string | null;
  inFlight: boolean;
}

export function emptyDraft(): ReviewDraft {
  return { imageId: null, score: null, labels: [], report: "" };
}

export function initialState(): ReviewPanelState {
  return { draft: emptyDraft(), notice: null, lastReviewId: null, inFlight: false };
}

export function isValidScore(score: unknown): score is number {
  return typeof score === "number" && Number.isInteger(score) && score >= 1 && score <= 5;
}

export function labelViolations(
  labels: LabelBox[],
  image: Pick<ImagePayload, "width" | "height">,
): string[] {
  const problems: string[] = [];
  labels.forEach((label, index) => {
    const ints = [label.x, label.y, label.w, label.h].every(Number.isInteger);
    if (!ints) {
      problems.push(`label ${index}: coordinates must be integers`);
      return;
    }
    if (label.w < 1 || label.h < 1) {
      problems.push(`label ${index}: needs positive size`);
    }
    if (
      label.x < 0 ||
      label.y < 0 ||
      label.x + label.w > image.width ||
      label.y + label.h > image.height
    ) {
      problems.push(`label ${index}: outside the ${image.width}x${image.height} image`);
    }
  });
  return problems;
}

/**
 * Client-side gate run before any request leaves the browser. Returns the
 * request body only when every rule the server would check also passes here.
 */
export function prepareSubmission(
  draft: ReviewDraft,
  image: Pick<ImagePayload, "width" | "height">,
): { ok: true; body: ReviewBody } | { ok: false; problems: string[] } {
  const problems: string[] = [];
  if (!draft.imageId) {
    problems.push("no image selected");
  }
  if (!isValidScore(draft.score)) {
    problems.push("score must be an integer between 1 and 5");
  }
  problems.push(...labelViolations(draft.labels, image));
  if (problems.length > 0 || !draft.imageId) {
    return { ok: false, problems };
  }
  return {
    ok: true,
    body: {
      image_id: draft.imageId,
      score: draft.score as number,
      labels: draft.labels,
      report: draft.report,
    },
  };
}

/** Success clears the draft and shows the new review id. */
export function applySubmitSuccess(
  state: ReviewPanelState,
  reviewId: string,
): ReviewPanelState {
  return {
    draft: emptyDraft(),
    notice: `review ${reviewId} accepted`,
    lastReviewId: reviewId,
    inFlight: false,
  };
}

/** Any server rejection (403, 400, ...) keeps the draft intact. */
export function applySubmitFailure(
  state: ReviewPanelState,
  error: Pick<ApiError, "status" | "message">,
): ReviewPanelState {
  return {
    ...state,
    notice: `server rejected the review (${error.status}): ${error.message}`,
    inFlight: false,
  };
}
