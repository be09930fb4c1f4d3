/** Typed client for the formflow session service HTTP API. */

export type DomainName = "CustomerMgmt" | "HotelBooking";
export type ModeName = "tagged" | "baseline";
export type BackendName = "stub" | "oracle" | "http";

export interface ContextRef {
  entity_id: string;
  display_name: string;
}

export interface DecisionSummary {
  task_name: string;
  decision: "Confirmed" | "Rejected" | "Indeterminate";
  cot_present: boolean;
}

export interface ClarifyOption {
  kind: "switch" | "keep";
  entity_id: string;
  display_name: string;
  label: string;
}

export interface ApiMessage {
  reply: string;
  clarifying: boolean;
  context: ContextRef | null;
  decision: DecisionSummary | null;
  seq: number;
  options?: ClarifyOption[];
}

export interface EventDoc {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
  timestamp: string;
}

export interface SessionDoc {
  session_id: string;
  domain: DomainName;
  mode: ModeName;
  lifecycle: string;
  backend: BackendName;
  created_at: string;
  updated_at: string;
  context: ContextRef | null;
  events: EventDoc[];
}

export interface TraceDecision {
  task_name: string;
  decision: string;
  chain_of_thought: string | null;
  raw_output: string;
  candidate_entity: { entity_id: string; display_name: string; domain: string } | null;
}

export interface TraceDoc {
  session_id: string;
  decisions: TraceDecision[];
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;
type SleepLike = (ms: number) => Promise<void>;

const defaultSleep: SleepLike = (ms) => new Promise((resolve) => setTimeout(resolve, ms));

/** One turn may be in flight per session; a 409 is retried briefly. */
const CONFLICT_RETRIES = 3;
const CONFLICT_DELAY_MS = 300;

async function parseError(response: Response): Promise<ApiError> {
  let code = "Unknown";
  let message = `HTTP ${response.status}`;
  try {
    const body = await response.json();
    if (body && body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body: keep the generic message
  }
  return new ApiError(response.status, code, message);
}

export class FormflowClient {
  constructor(
    public baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
    private sleep: SleepLike = defaultSleep,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw await parseError(response);
    }
    if (response.status === 204) {
      return undefined as T;
    }
    return (await response.json()) as T;
  }

  async createSession(
    domain: DomainName,
    mode: ModeName,
    backend: BackendName,
  ): Promise<string> {
    const body = await this.request<{ session_id: string }>("/v1/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ domain, mode, backend }),
    });
    return body.session_id;
  }

  async sendMessage(sessionId: string, text: string): Promise<ApiMessage> {
    for (let attempt = 0; ; attempt++) {
      const response = await this.fetchFn(
        `${this.baseUrl}/v1/sessions/${sessionId}/messages`,
        {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify({ text }),
        },
      );
      if (response.status === 409 && attempt < CONFLICT_RETRIES) {
        await this.sleep(CONFLICT_DELAY_MS);
        continue;
      }
      if (!response.ok) {
        throw await parseError(response);
      }
      return (await response.json()) as ApiMessage;
    }
  }

  getSession(sessionId: string): Promise<SessionDoc> {
    return this.request<SessionDoc>(`/v1/sessions/${sessionId}`);
  }

  getTrace(sessionId: string): Promise<TraceDoc> {
    return this.request<TraceDoc>(`/v1/sessions/${sessionId}/trace`);
  }

  deleteSession(sessionId: string): Promise<void> {
    return this.request<void>(`/v1/sessions/${sessionId}`, { method: "DELETE" });
  }
}
