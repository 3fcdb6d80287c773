// Typed client for the chat service JSON API.

export interface TransitionInfo {
  domain: string;
  slot: string;
  value: string | null;
}

export interface Diagnostics {
  domain_labels: string[];
  domain_probs: number[] | null;
  slot_probs: number[] | null;
}

export interface ChatReply {
  response: string;
  transition_sentence: string | null;
  info: TransitionInfo;
  mode: string;
  turn_index: number;
  transitioned: boolean;
  prompt: string | null;
  diagnostics: Diagnostics;
}

export interface SessionView {
  session_id: string;
  mode: string;
  transitioned: boolean;
  turns: { speaker: string; text: string; mode: string }[];
}

export interface HealthView {
  status: string;
  checkpoints: { tie: string; generator: string };
}

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

async function expectJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      if (body && body.detail) detail = JSON.stringify(body.detail);
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ChatClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  async sendMessage(sessionId: string, text: string): Promise<ChatReply> {
    const response = await this.fetchFn(`${this.baseUrl}/api/chat`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ session_id: sessionId, text }),
    });
    return expectJson<ChatReply>(response);
  }

  async getSession(sessionId: string): Promise<SessionView> {
    const response = await this.fetchFn(`${this.baseUrl}/api/session/${encodeURIComponent(sessionId)}`);
    return expectJson<SessionView>(response);
  }

  async deleteSession(sessionId: string): Promise<void> {
    const response = await this.fetchFn(`${this.baseUrl}/api/session/${encodeURIComponent(sessionId)}`, {
      method: "DELETE",
    });
    if (!response.ok && response.status !== 404) {
      throw new ApiError(response.status, response.statusText);
    }
  }

  async health(): Promise<HealthView> {
    const response = await this.fetchFn(`${this.baseUrl}/api/health`);
    return expectJson<HealthView>(response);
  }
}
