// Chat application state: optimistic sends with rollback, one in-flight
// request per session (matching the server's 409 rule), session controls.

import { ApiError, ChatClient, type ChatReply } from "./api.js";
import { renderDiagnostics } from "./diagnostics.js";
import { renderThread, type ThreadEntry } from "./thread.js";

function randomSessionId(): string {
  return `web-${Math.random().toString(36).slice(2, 10)}`;
}

export interface AppElements {
  thread: HTMLElement;
  diagnostics: HTMLElement;
  input: HTMLInputElement;
  sendButton: HTMLButtonElement;
  newSessionButton: HTMLButtonElement;
  copyTraceButton: HTMLButtonElement;
  sessionLabel: HTMLElement;
}

export class ChatApp {
  entries: ThreadEntry[] = [];
  replies: ChatReply[] = [];
  sessionId: string;
  inFlight = false;

  constructor(
    private client: ChatClient,
    private el: AppElements,
    sessionId?: string,
  ) {
    this.sessionId = sessionId ?? randomSessionId();
    this.el.sendButton.addEventListener("click", () => void this.send());
    this.el.input.addEventListener("keydown", (event) => {
      if (event.key === "Enter") void this.send();
    });
    this.el.newSessionButton.addEventListener("click", () => void this.reset());
    this.el.copyTraceButton.addEventListener("click", () => void this.copyTrace());
    this.refresh();
  }

  refresh(): void {
    this.el.sessionLabel.textContent = this.sessionId;
    this.el.sendButton.disabled = this.inFlight;
    this.el.input.disabled = this.inFlight;
    renderThread(this.el.thread, this.entries);
    renderDiagnostics(this.el.diagnostics, this.replies[this.replies.length - 1] ?? null);
  }

  async send(): Promise<void> {
    const text = this.el.input.value.trim();
    if (!text || this.inFlight) return;
    this.inFlight = true;
    const optimistic: ThreadEntry = { role: "user", text, pending: true };
    this.entries.push(optimistic);
    this.el.input.value = "";
    this.refresh();
    try {
      const reply = await this.client.sendMessage(this.sessionId, text);
      optimistic.pending = false;
      this.replies.push(reply);
      this.entries.push({
        role: "system",
        text: reply.response,
        transitionSentence: reply.transition_sentence,
      });
    } catch (err) {
      // roll the optimistic user bubble back and surface a retry affordance
      this.entries.pop();
      this.el.input.value = text;
      const message = err instanceof ApiError ? `${err.status}: ${err.message}` : String(err);
      this.entries.push({ role: "error", text: `send failed (${message}) - press send to retry` });
    } finally {
      this.inFlight = false;
      this.refresh();
    }
  }

  async reset(): Promise<void> {
    try {
      await this.client.deleteSession(this.sessionId);
    } catch {
      // losing an unknown session is fine
    }
    this.sessionId = randomSessionId();
    this.entries = [];
    this.replies = [];
    this.refresh();
  }

  traceJson(): string {
    return JSON.stringify({ session_id: this.sessionId, replies: this.replies }, null, 2);
  }

  async copyTrace(): Promise<void> {
    const trace = this.traceJson();
    if (navigator.clipboard?.writeText) {
      await navigator.clipboard.writeText(trace);
    }
  }
}

export function mountApp(root: Document = document, baseUrl = ""): ChatApp {
  const el: AppElements = {
    thread: root.getElementById("thread") as HTMLElement,
    diagnostics: root.getElementById("diagnostics") as HTMLElement,
    input: root.getElementById("message-input") as HTMLInputElement,
    sendButton: root.getElementById("send-button") as HTMLButtonElement,
    newSessionButton: root.getElementById("new-session") as HTMLButtonElement,
    copyTraceButton: root.getElementById("copy-trace") as HTMLButtonElement,
    sessionLabel: root.getElementById("session-id") as HTMLElement,
  };
  return new ChatApp(new ChatClient(baseUrl), el);
}
