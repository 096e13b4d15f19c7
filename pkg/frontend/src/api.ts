/**
 * Typed client for the challenge service HTTP API.
 *
 * The server never sends logged coordinates or per-question correctness
 * while a session is open; these types mirror that outward schema exactly.
 */

export interface GeoPoint {
  lat: number;
  lon: number;
}

export interface QuestionView {
  index: number;
  prompt: string;
  answered: boolean;
}

export interface SessionView {
  session_id: string;
  state: "open" | "complete";
  questions: QuestionView[];
  answered_count: number;
  decision?: string;
}

export interface AnswerAck {
  recorded: boolean;
  question_index: number;
  session_id: string;
  answered_count: number;
  state: "open" | "complete";
  decision?: string;
}

export interface DecisionView {
  session_id: string;
  decision: "pending" | "authenticated" | "rejected";
  reason?: string;
  score?: number;
  per_question_correct?: string[];
}

interface ErrorBody {
  code: string;
  message: string;
  detail: Record<string, unknown>;
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly detail: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = "ServiceError";
  }

  /** The open session a session_conflict error points at, if any. */
  get openSessionId(): string | null {
    const sid = this.detail["open_session_id"];
    return typeof sid === "string" ? sid : null;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { "content-type": "application/json" };
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let parsed: ErrorBody | null = null;
      try {
        parsed = (await response.json()) as ErrorBody;
      } catch {
        // non-JSON error body: fall through to the generic error
      }
      throw new ServiceError(
        response.status,
        parsed?.code ?? "http_error",
        parsed?.message ?? `request failed with status ${response.status}`,
        parsed?.detail ?? {},
      );
    }
    return (await response.json()) as T;
  }

  openSession(accountId: string): Promise<SessionView> {
    return this.request<SessionView>("POST", `/accounts/${accountId}/sessions`);
  }

  getSession(accountId: string, sessionId: string): Promise<SessionView> {
    return this.request<SessionView>("GET", `/accounts/${accountId}/sessions/${sessionId}`);
  }

  submitAnswer(
    accountId: string,
    sessionId: string,
    questionIndex: number,
    point: GeoPoint,
  ): Promise<AnswerAck> {
    return this.request<AnswerAck>(
      "POST",
      `/accounts/${accountId}/sessions/${sessionId}/answers`,
      { question_index: questionIndex, lat: point.lat, lon: point.lon },
    );
  }

  getDecision(accountId: string, sessionId: string): Promise<DecisionView> {
    return this.request<DecisionView>(
      "GET",
      `/accounts/${accountId}/sessions/${sessionId}/decision`,
    );
  }
}
