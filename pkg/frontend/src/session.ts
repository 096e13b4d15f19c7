/**
 * Client-side session state machine.
 *
 * Rules enforced here, independent of any server checks:
 *  - "Next" is possible only with a marker placed; a question without a
 *    marker cannot be submitted.
 *  - Placing a marker while one is pending is a no-op: the user must
 *    remove the old one first (remove-then-place flow).
 *  - Submitted questions never re-enter editing; the index only advances.
 *  - Only one answer request may be in flight (a double-click submits once).
 *  - The decision is fetched only after all questions are answered, so the
 *    state holds no correctness information before completion.
 */

import { GeoPoint, ServiceClient, ServiceError, SessionView } from "./api";

export type Phase =
  | "idle" // no session; offer "start challenge"
  | "loading"
  | "answering"
  | "decided"
  | "error";

export interface ClientSessionState {
  phase: Phase;
  sessionId: string | null;
  prompts: string[];
  currentIndex: number;
  pendingMarker: GeoPoint | null;
  submitted: ReadonlySet<number>;
  decision: { decision: string; reason?: string; score?: number } | null;
  error: string | null;
}

type Listener = (state: ClientSessionState) => void;

const SESSION_STORAGE_KEY = "geochallenge.session_id";

export interface SessionStorage {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

class MemoryStorage implements SessionStorage {
  private values = new Map<string, string>();
  getItem(key: string) {
    return this.values.get(key) ?? null;
  }
  setItem(key: string, value: string) {
    this.values.set(key, value);
  }
  removeItem(key: string) {
    this.values.delete(key);
  }
}

export class SessionController {
  private state: ClientSessionState = {
    phase: "idle",
    sessionId: null,
    prompts: [],
    currentIndex: 0,
    pendingMarker: null,
    submitted: new Set<number>(),
    decision: null,
    error: null,
  };
  private listeners: Listener[] = [];
  private answerInFlight = false;

  constructor(
    private readonly client: ServiceClient,
    private readonly accountId: string,
    private readonly storage: SessionStorage = new MemoryStorage(),
  ) {}

  getState(): ClientSessionState {
    return { ...this.state, submitted: new Set(this.state.submitted) };
  }

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  private update(patch: Partial<ClientSessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.getState());
  }

  /** Resume a stored open session, or land on the start affordance. */
  async load(): Promise<void> {
    const stored = this.storage.getItem(SESSION_STORAGE_KEY);
    if (stored === null) {
      this.update({ phase: "idle", error: null });
      return;
    }
    this.update({ phase: "loading", error: null });
    try {
      const view = await this.client.getSession(this.accountId, stored);
      await this.adopt(view);
    } catch (error) {
      if (error instanceof ServiceError && error.status === 404) {
        this.storage.removeItem(SESSION_STORAGE_KEY);
        this.update({ phase: "idle", error: null });
        return;
      }
      this.fail(error);
    }
  }

  /** Open a new session (or adopt the one the server says is open). */
  async start(): Promise<void> {
    if (this.state.phase === "loading" || this.state.phase === "answering") return;
    this.update({ phase: "loading", error: null });
    try {
      const view = await this.client.openSession(this.accountId);
      await this.adopt(view);
    } catch (error) {
      if (error instanceof ServiceError && error.openSessionId) {
        try {
          await this.adopt(await this.client.getSession(this.accountId, error.openSessionId));
          return;
        } catch (inner) {
          this.fail(inner);
          return;
        }
      }
      this.fail(error);
    }
  }

  private async adopt(view: SessionView): Promise<void> {
    this.storage.setItem(SESSION_STORAGE_KEY, view.session_id);
    const submitted = new Set(view.questions.filter((q) => q.answered).map((q) => q.index));
    if (view.state === "complete") {
      await this.fetchDecision(view.session_id, submitted, view.questions.map((q) => q.prompt));
      return;
    }
    const firstOpen = view.questions.find((q) => !q.answered);
    this.update({
      phase: "answering",
      sessionId: view.session_id,
      prompts: view.questions.map((q) => q.prompt),
      currentIndex: firstOpen ? firstOpen.index : view.questions.length,
      pendingMarker: null,
      submitted,
      decision: null,
      error: null,
    });
  }

  /**
   * Drop a marker for the current question. Ignored unless answering, and
   * ignored while a marker is already pending (remove first).
   */
  placeMarker(point: GeoPoint): boolean {
    if (this.state.phase !== "answering") return false;
    if (this.state.pendingMarker !== null) return false;
    if (this.state.submitted.has(this.state.currentIndex)) return false;
    this.update({ pendingMarker: point });
    return true;
  }

  removeMarker(): boolean {
    if (this.state.phase !== "answering" || this.state.pendingMarker === null) return false;
    this.update({ pendingMarker: null });
    return true;
  }

  get canSubmit(): boolean {
    return (
      this.state.phase === "answering" &&
      this.state.pendingMarker !== null &&
      !this.answerInFlight
    );
  }

  /**
   * Submit the pending marker for the current question and advance.
   * Returns false without any request when blocked (no marker, wrong
   * phase, or a submission already in flight).
   */
  async submitCurrent(): Promise<boolean> {
    if (!this.canSubmit) return false;
    const { sessionId, currentIndex, pendingMarker } = this.state;
    if (sessionId === null || pendingMarker === null) return false;

    this.answerInFlight = true;
    try {
      const ack = await this.client.submitAnswer(
        this.accountId,
        sessionId,
        currentIndex,
        pendingMarker,
      );
      const submitted = new Set(this.state.submitted);
      submitted.add(ack.question_index);
      if (ack.state === "complete") {
        await this.fetchDecision(sessionId, submitted, this.state.prompts);
      } else {
        this.update({
          submitted,
          pendingMarker: null,
          currentIndex: this.nextUnanswered(submitted),
        });
      }
      return true;
    } catch (error) {
      this.fail(error);
      return false;
    } finally {
      this.answerInFlight = false;
    }
  }

  private nextUnanswered(submitted: ReadonlySet<number>): number {
    for (let i = 0; i < this.state.prompts.length; i++) {
      if (!submitted.has(i)) return i;
    }
    return this.state.prompts.length;
  }

  private async fetchDecision(
    sessionId: string,
    submitted: ReadonlySet<number>,
    prompts: string[],
  ): Promise<void> {
    const decision = await this.client.getDecision(this.accountId, sessionId);
    this.storage.removeItem(SESSION_STORAGE_KEY);
    this.update({
      phase: "decided",
      sessionId,
      prompts,
      submitted: new Set(submitted),
      pendingMarker: null,
      decision: {
        decision: decision.decision,
        reason: decision.reason,
        score: decision.score,
      },
      error: null,
    });
  }

  /** Retry after a network failure: reload state from the server. */
  async retry(): Promise<void> {
    if (this.state.sessionId !== null) {
      this.storage.setItem(SESSION_STORAGE_KEY, this.state.sessionId);
    }
    await this.load();
  }

  private fail(error: unknown): void {
    const message =
      error instanceof ServiceError
        ? `${error.message} (${error.code})`
        : error instanceof Error
          ? error.message
          : String(error);
    this.update({ phase: "error", error: message });
  }
}
