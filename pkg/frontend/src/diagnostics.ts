// Extractor-belief pane: one bar per domain class, plus the latest triple.

import type { ChatReply } from "./api.js";

export function renderDiagnostics(container: HTMLElement, reply: ChatReply | null): void {
  container.textContent = "";
  if (!reply || !reply.diagnostics.domain_probs) {
    const empty = document.createElement("p");
    empty.className = "diag-empty";
    empty.textContent = "no extraction yet";
    container.appendChild(empty);
    return;
  }
  const { domain_labels, domain_probs } = reply.diagnostics;
  const list = document.createElement("div");
  list.className = "diag-bars";
  domain_labels.forEach((label, i) => {
    const row = document.createElement("div");
    row.className = "diag-row";
    const name = document.createElement("span");
    name.className = "diag-label";
    name.textContent = label;
    const track = document.createElement("div");
    track.className = "diag-track";
    const bar = document.createElement("div");
    bar.className = "diag-bar";
    const prob = domain_probs[i] ?? 0;
    bar.style.width = `${(prob * 100).toFixed(1)}%`;
    bar.dataset.prob = prob.toFixed(4);
    track.appendChild(bar);
    const pct = document.createElement("span");
    pct.className = "diag-pct";
    pct.textContent = `${(prob * 100).toFixed(1)}%`;
    row.append(name, track, pct);
    list.appendChild(row);
  });
  container.appendChild(list);

  const info = document.createElement("p");
  info.className = "diag-info";
  const value = reply.info.value ?? "-";
  info.textContent = `domain=${reply.info.domain} slot=${reply.info.slot} value=${value}`;
  container.appendChild(info);
}
