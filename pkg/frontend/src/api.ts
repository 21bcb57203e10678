/**
 * Typed client for the schemabot HTTP API.
 *
 * Thin fetch wrappers only — every verdict and aggregate displayed by the UI
 * comes back from these endpoints verbatim.
 */

// ---------------------------------------------------------------------------
// Wire types (mirror the service JSON)
// ---------------------------------------------------------------------------

export interface Goal {
  id: string | null;
  domain: string;
  informable: [string, string][];
  requested: string[];
}

export interface TurnTrace {
  user_text: string;
  dst_prompt: string | null;
  belief: string | null;
  db: string | null;
  policy_prompt: string;
  action: string;
  delex_response: string;
  final_response: string;
  diagnostics: string[];
  latency_ms: Record<string, number>;
}

export interface SessionCreated {
  session_id: string;
  goal: Goal | null;
}

export interface MessageReply {
  response: string;
  trace: TurnTrace;
}

export interface RatingSubmission {
  success_claimed: boolean;
  understanding: number;
  appropriateness: number;
}

export interface RatingReply {
  accepted: boolean;
  success_w_g: boolean;
}

export interface HumanEvalReport {
  n_sessions: number;
  success_wo_g_pct: number;
  success_w_g_pct: number;
  mean_understanding: number;
  mean_appropriateness: number;
  mean_turns_successful: number;
}

export interface ApiError {
  status: number;
  error: string;
  detail: string;
}

export class ServiceError extends Error {
  constructor(public readonly info: ApiError) {
    super(`${info.error}${info.detail ? `: ${info.detail}` : ""} (HTTP ${info.status})`);
  }
}

// ---------------------------------------------------------------------------
// Client
// ---------------------------------------------------------------------------

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  async createSession(goalId?: string): Promise<SessionCreated> {
    return this.post("/sessions", goalId ? { goal_id: goalId } : {});
  }

  async sendMessage(sessionId: string, text: string): Promise<MessageReply> {
    return this.post(`/sessions/${sessionId}/messages`, { text });
  }

  async submitRating(sessionId: string, rating: RatingSubmission): Promise<RatingReply> {
    return this.post(`/sessions/${sessionId}/rating`, rating);
  }

  async humanEvalReport(): Promise<HumanEvalReport> {
    return this.get("/reports/human-eval");
  }

  async health(): Promise<{ status: string }> {
    return this.get("/healthz");
  }

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path);
    return this.decode<T>(res);
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return this.decode<T>(res);
  }

  private async decode<T>(res: Response): Promise<T> {
    const payload = await res.json().catch(() => ({}));
    if (!res.ok) {
      const err = payload as { error?: string; detail?: string };
      throw new ServiceError({
        status: res.status,
        error: err.error ?? "request failed",
        detail: err.detail ?? "",
      });
    }
    return payload as T;
  }
}
