import type {
  AcceptReply,
  ResponseReply,
  ResultPayload,
  SessionCreated,
  TurnResponsePayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function parse<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const message =
      typeof (body as { error?: unknown }).error === "string"
        ? (body as { error: string }).error
        : `request failed (${response.status})`;
    throw new ApiError(response.status, message);
  }
  return body as T;
}

export class ApiClient {
  constructor(
    public readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private post<T>(path: string, body?: unknown): Promise<T> {
    return this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    }).then((response) => parse<T>(response));
  }

  private get<T>(path: string): Promise<T> {
    return this.fetchFn(`${this.baseUrl}${path}`).then((response) => parse<T>(response));
  }

  createSession(): Promise<SessionCreated> {
    return this.post("/sessions");
  }

  sendTurn(sessionId: string, text: string, latencyMs: number): Promise<TurnResponsePayload> {
    return this.post(`/sessions/${sessionId}/turns`, { text, latency_ms: Math.max(0, Math.round(latencyMs)) });
  }

  accept(sessionId: string, scaleId: string): Promise<AcceptReply> {
    return this.post(`/sessions/${sessionId}/accept`, { scale_id: scaleId });
  }

  nextItem(sessionId: string): Promise<AcceptReply> {
    return this.get(`/sessions/${sessionId}/assessment/next`);
  }

  submitResponse(sessionId: string, itemId: string, value: number): Promise<ResponseReply> {
    return this.post(`/sessions/${sessionId}/assessment/responses`, { item_id: itemId, value });
  }

  getResult(sessionId: string): Promise<ResultPayload> {
    return this.get(`/sessions/${sessionId}/result`);
  }

  closeSession(sessionId: string): Promise<{ phase: string }> {
    return this.post(`/sessions/${sessionId}/close`);
  }
}
