/**
 * Thin typed client for the decision-service API. The fetch implementation is
 * injected so tests can run without a network and the round-trip suite can
 * pass the real one.
 */

import type {
  ApiErrorBody,
  DecisionRow,
  Health,
  InboxItem,
  IngestAck,
  MetricsPayload,
  RegisterAck,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(code: string, message: string, status: number) {
    super(message);
    this.name = "ApiError";
    this.code = code;
    this.status = status;
  }
}

export interface ClientOptions {
  token?: string | null;
  fetchFn?: FetchLike;
}

export class ApiClient {
  readonly baseUrl: string;
  readonly token: string | null;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, opts: ClientOptions = {}) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.token = opts.token ?? null;
    this.fetchFn = opts.fetchFn ?? ((url, init) => fetch(url, init));
  }

  private headers(hasBody: boolean): Record<string, string> {
    const h: Record<string, string> = {};
    if (hasBody) h["Content-Type"] = "application/json";
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await this.request(method, path, body);
    return (await res.json()) as T;
  }

  /** Like call(), but hands back the raw body text next to the parsed value. */
  private async callRaw<T>(method: string, path: string): Promise<{ text: string; payload: T }> {
    const res = await this.request(method, path);
    const text = await res.text();
    return { text, payload: JSON.parse(text) as T };
  }

  private async request(method: string, path: string, body?: unknown): Promise<Response> {
    const res = await this.fetchFn(this.baseUrl + path, {
      method,
      headers: this.headers(body !== undefined),
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!res.ok) {
      let code = "HTTP_" + res.status;
      let message = res.statusText;
      try {
        const parsed = (await res.json()) as Partial<ApiErrorBody>;
        if (parsed.error) {
          code = parsed.error.code;
          message = parsed.error.message;
        }
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(code, message, res.status);
    }
    return res;
  }

  register(userId: string): Promise<RegisterAck> {
    return this.call("POST", "/users", { user_id: userId });
  }

  submitRating(userId: string, value: number, ts?: string): Promise<IngestAck> {
    const body: Record<string, unknown> = { user_id: userId, value };
    if (ts !== undefined) body.ts = ts;
    return this.call("POST", "/events/rating", body);
  }

  markRead(userId: string, messageId: string, ts?: string): Promise<IngestAck> {
    const body: Record<string, unknown> = { user_id: userId, message_id: messageId };
    if (ts !== undefined) body.ts = ts;
    return this.call("POST", "/events/message-read", body);
  }

  inbox(userId: string): Promise<InboxItem[]> {
    return this.call("GET", `/inbox/${encodeURIComponent(userId)}`);
  }

  decisions(userId: string): Promise<DecisionRow[]> {
    return this.call("GET", `/decisions/${encodeURIComponent(userId)}`);
  }

  metrics(days?: number): Promise<MetricsPayload> {
    return this.call("GET", days === undefined ? "/metrics" : `/metrics?days=${days}`);
  }

  /** Metrics with the untouched response bytes, for exactness checks. */
  metricsRaw(days?: number): Promise<{ text: string; payload: MetricsPayload }> {
    return this.callRaw("GET", days === undefined ? "/metrics" : `/metrics?days=${days}`);
  }

  health(): Promise<Health> {
    return this.call("GET", "/healthz");
  }
}
