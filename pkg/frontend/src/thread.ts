// Message-thread rendering. Every rendered string originates from an API
// field; the transition sentence gets its own highlighted segment inside the
// system bubble.

import type { ChatReply } from "./api.js";

export type ThreadEntry =
  | { role: "user"; text: string; pending?: boolean }
  | { role: "system"; text: string; transitionSentence: string | null }
  | { role: "error"; text: string };

export function entriesFromReply(reply: ChatReply): ThreadEntry {
  return { role: "system", text: reply.response, transitionSentence: reply.transition_sentence };
}

export function renderThread(container: HTMLElement, entries: ThreadEntry[]): void {
  container.textContent = "";
  for (const entry of entries) {
    const bubble = document.createElement("div");
    bubble.className = `bubble ${entry.role}`;
    if (entry.role === "system") {
      const normal = document.createElement("span");
      normal.className = "segment normal";
      normal.textContent = entry.text;
      bubble.appendChild(normal);
      if (entry.transitionSentence) {
        const transition = document.createElement("span");
        transition.className = "segment transition";
        transition.textContent = entry.transitionSentence;
        bubble.appendChild(transition);
      }
    } else {
      bubble.textContent = entry.text;
      if (entry.role === "user" && entry.pending) {
        bubble.classList.add("pending");
      }
    }
    container.appendChild(bubble);
  }
  container.scrollTop = container.scrollHeight;
}
