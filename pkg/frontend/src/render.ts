/**
 * DOM layout and state-driven view updates, kept free of map and network
 * concerns so the rendering is unit-testable.
 */

import { ClientSessionState } from "./session";

export interface ViewElements {
  progress: HTMLElement;
  prompt: HTMLElement;
  map: HTMLElement;
  error: HTMLElement;
  errorText: HTMLElement;
  retry: HTMLButtonElement;
  decision: HTMLElement;
  decisionText: HTMLElement;
  decisionScore: HTMLElement;
  start: HTMLElement;
  startButton: HTMLButtonElement;
  searchInput: HTMLInputElement;
  searchButton: HTMLButtonElement;
  layerToggle: HTMLButtonElement;
  removeMarker: HTMLButtonElement;
  next: HTMLButtonElement;
}

export function buildLayout(root: HTMLElement): ViewElements {
  root.innerHTML = `
    <header>
      <div id="progress"></div>
      <div id="prompt"></div>
    </header>
    <div id="map"></div>
    <div id="error" class="banner hidden">
      <span id="error-text"></span>
      <button id="retry">Retry</button>
    </div>
    <div id="decision" class="overlay hidden">
      <div id="decision-text"></div>
      <div id="decision-score"></div>
    </div>
    <div id="start" class="overlay hidden">
      <p>Answer ten questions about places you visited recently.</p>
      <button id="start-button">Start challenge</button>
    </div>
    <footer>
      <div class="search">
        <input id="search-input" type="search" placeholder="Search places" />
        <button id="search-button">Go</button>
      </div>
      <div class="actions">
        <button id="layer-toggle">Satellite</button>
        <button id="remove-marker" disabled>Remove</button>
        <button id="next" disabled>Next</button>
      </div>
    </footer>
  `;
  const get = <T extends HTMLElement>(id: string): T => {
    const element = root.querySelector<T>(`#${id}`);
    if (!element) throw new Error(`layout is missing #${id}`);
    return element;
  };
  return {
    progress: get("progress"),
    prompt: get("prompt"),
    map: get("map"),
    error: get("error"),
    errorText: get("error-text"),
    retry: get<HTMLButtonElement>("retry"),
    decision: get("decision"),
    decisionText: get("decision-text"),
    decisionScore: get("decision-score"),
    start: get("start"),
    startButton: get<HTMLButtonElement>("start-button"),
    searchInput: get<HTMLInputElement>("search-input"),
    searchButton: get<HTMLButtonElement>("search-button"),
    layerToggle: get<HTMLButtonElement>("layer-toggle"),
    removeMarker: get<HTMLButtonElement>("remove-marker"),
    next: get<HTMLButtonElement>("next"),
  };
}

export function updateView(
  els: ViewElements,
  state: ClientSessionState,
  canSubmit: boolean,
): void {
  els.start.classList.toggle("hidden", state.phase !== "idle");
  els.error.classList.toggle("hidden", state.phase !== "error");
  els.decision.classList.toggle("hidden", state.phase !== "decided");

  if (state.phase === "answering") {
    els.progress.textContent = `Question ${state.currentIndex + 1} of ${state.prompts.length}`;
    els.prompt.textContent = state.prompts[state.currentIndex] ?? "";
  } else if (state.phase === "loading") {
    els.progress.textContent = "";
    els.prompt.textContent = "Loading...";
  }
  if (state.phase === "error") {
    els.errorText.textContent = state.error ?? "request failed";
  }
  if (state.phase === "decided" && state.decision) {
    const granted = state.decision.decision === "authenticated";
    els.decisionText.textContent = granted ? "Authenticated" : "Rejected";
    els.decisionText.className = granted ? "granted" : "denied";
    els.decisionScore.textContent =
      state.decision.score !== undefined
        ? `${state.decision.score} of ${state.prompts.length} correct`
        : "";
  }

  els.next.disabled = !canSubmit;
  els.removeMarker.disabled = state.pendingMarker === null;
}
