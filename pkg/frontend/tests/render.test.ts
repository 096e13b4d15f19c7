// @vitest-environment happy-dom
/**
 * DOM rendering: the view must reflect each phase, and the final decision
 * must actually be rendered into the document.
 */

import { describe, expect, it } from "vitest";

import { buildLayout, updateView } from "../src/render";
import { ClientSessionState } from "../src/session";

function state(patch: Partial<ClientSessionState>): ClientSessionState {
  return {
    phase: "idle",
    sessionId: null,
    prompts: [],
    currentIndex: 0,
    pendingMarker: null,
    submitted: new Set<number>(),
    decision: null,
    error: null,
    ...patch,
  };
}

function layout() {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return buildLayout(root);
}

describe("rendering", () => {
  it("shows the start affordance when idle", () => {
    const els = layout();
    updateView(els, state({ phase: "idle" }), false);
    expect(els.start.classList.contains("hidden")).toBe(false);
    expect(els.decision.classList.contains("hidden")).toBe(true);
  });

  it("renders the current prompt and progress while answering", () => {
    const els = layout();
    const prompts = Array.from({ length: 10 }, (_, i) => `Prompt ${i}`);
    updateView(els, state({ phase: "answering", prompts, currentIndex: 3 }), false);
    expect(els.progress.textContent).toBe("Question 4 of 10");
    expect(els.prompt.textContent).toBe("Prompt 3");
    expect(els.next.disabled).toBe(true);
    expect(els.removeMarker.disabled).toBe(true);
  });

  it("enables next and remove once a marker is pending", () => {
    const els = layout();
    updateView(
      els,
      state({
        phase: "answering",
        prompts: ["p"],
        pendingMarker: { lat: 1, lon: 2 },
      }),
      true,
    );
    expect(els.next.disabled).toBe(false);
    expect(els.removeMarker.disabled).toBe(false);
  });

  it("renders the authenticated decision with the score", () => {
    const els = layout();
    updateView(
      els,
      state({
        phase: "decided",
        prompts: Array(10).fill("p"),
        decision: { decision: "authenticated", score: 7 },
      }),
      false,
    );
    expect(els.decision.classList.contains("hidden")).toBe(false);
    expect(els.decisionText.textContent).toBe("Authenticated");
    expect(els.decisionText.className).toBe("granted");
    expect(els.decisionScore.textContent).toBe("7 of 10 correct");
  });

  it("renders a rejection", () => {
    const els = layout();
    updateView(
      els,
      state({
        phase: "decided",
        prompts: Array(10).fill("p"),
        decision: { decision: "rejected", score: 4 },
      }),
      false,
    );
    expect(els.decisionText.textContent).toBe("Rejected");
    expect(els.decisionText.className).toBe("denied");
  });

  it("shows the retryable error banner", () => {
    const els = layout();
    updateView(els, state({ phase: "error", error: "fetch failed" }), false);
    expect(els.error.classList.contains("hidden")).toBe(false);
    expect(els.errorText.textContent).toBe("fetch failed");
  });
});
