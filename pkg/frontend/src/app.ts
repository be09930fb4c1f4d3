/** DOM wiring for the chat client. All state lives in the view-model. */

import {
  ApiError,
  BackendName,
  DomainName,
  FormflowClient,
  ModeName,
} from "./api.js";
import {
  UiSessionView,
  applyApiMessage,
  applyError,
  applyUserText,
  badgeFor,
  closeTracePanel,
  newView,
  openTracePanel,
  optionLabels,
  viewFromTranscript,
} from "./model.js";
import { runDemo } from "./demo.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const element = document.getElementById(id);
  if (!element) throw new Error(`missing element #${id}`);
  return element as T;
};

let client: FormflowClient;
let view: UiSessionView | null = null;

function currentBaseUrl(): string {
  return ($("api-base") as HTMLInputElement).value || "http://127.0.0.1:8099";
}

function render(): void {
  const log = $("chat-log");
  log.innerHTML = "";
  if (!view) {
    $("session-bar").hidden = true;
    return;
  }
  $("session-bar").hidden = false;
  $("context-badge").textContent = view.contextBadge;
  $("session-id").textContent = `${view.sessionId.slice(0, 8)}… (${view.mode})`;

  let chipIndex = 0;
  for (const bubble of view.messages) {
    const row = document.createElement("div");
    row.className = `bubble ${bubble.role}`;
    const text = document.createElement("span");
    text.textContent = bubble.text;
    row.appendChild(text);
    if (bubble.role !== "user" && chipIndex < view.decisionChips.length) {
      const chip = view.decisionChips[chipIndex];
      chipIndex += 1;
      if (chip) {
        const mark = document.createElement("span");
        mark.className = `chip chip-${chip.toLowerCase()}`;
        mark.textContent = chip;
        row.appendChild(mark);
      }
    }
    log.appendChild(row);
  }

  const optionsBox = $("options");
  optionsBox.innerHTML = "";
  for (const label of optionLabels(view)) {
    const button = document.createElement("button");
    button.className = "option-button";
    button.textContent = label;
    button.onclick = () => void send(label);
    optionsBox.appendChild(button);
  }

  const banner = $("error-banner");
  banner.hidden = !view.error;
  banner.textContent = view.error ?? "";

  const tracePanel = $("trace-panel");
  tracePanel.hidden = !view.tracePanelOpen;
  if (view.tracePanelOpen) {
    tracePanel.innerHTML = "";
    view.traceEntries.forEach((entry, index) => {
      const item = document.createElement("div");
      item.className = "trace-entry";
      const head = document.createElement("div");
      head.className = "trace-head";
      head.textContent = `#${index + 1} ${entry.task_name} → ${entry.decision}`;
      const cot = document.createElement("pre");
      cot.textContent = entry.chain_of_thought ?? "(no chain of thought)";
      item.appendChild(head);
      item.appendChild(cot);
      tracePanel.appendChild(item);
    });
  }

  ($("message-input") as HTMLInputElement).disabled = view.busy;
  ($("send-button") as HTMLButtonElement).disabled = view.busy;
  log.scrollTop = log.scrollHeight;
}

async function send(text: string): Promise<void> {
  if (!view || view.busy || !text.trim()) return;
  applyUserText(view, text);
  view.busy = true;
  render();
  try {
    const message = await client.sendMessage(view.sessionId, text);
    applyApiMessage(view, message);
    if (view.tracePanelOpen) {
      openTracePanel(view, (await client.getTrace(view.sessionId)).decisions);
    }
  } catch (error) {
    applyError(view, error instanceof ApiError ? `${error.code}: ${error.message}` : String(error));
  } finally {
    view.busy = false;
    render();
  }
}

async function createSession(): Promise<void> {
  client = new FormflowClient(currentBaseUrl());
  const domain = ($("domain-select") as HTMLSelectElement).value as DomainName;
  const mode = ($("mode-select") as HTMLSelectElement).value as ModeName;
  const backend = ($("backend-select") as HTMLSelectElement).value as BackendName;
  try {
    const sessionId = await client.createSession(domain, mode, backend);
    view = newView(sessionId, mode);
    localStorage.setItem("formflow-session", sessionId);
    localStorage.setItem("formflow-mode", mode);
  } catch (error) {
    alert(error instanceof ApiError ? `${error.code}: ${error.message}` : String(error));
  }
  render();
}

async function resumeSession(sessionId: string, mode: ModeName): Promise<void> {
  client = new FormflowClient(currentBaseUrl());
  try {
    const doc = await client.getSession(sessionId);
    view = viewFromTranscript(doc.session_id, doc.mode, doc.events, doc.context);
  } catch {
    localStorage.removeItem("formflow-session");
    view = null;
  }
  render();
}

async function toggleTrace(): Promise<void> {
  if (!view) return;
  if (view.tracePanelOpen) {
    closeTracePanel(view);
  } else {
    try {
      openTracePanel(view, (await client.getTrace(view.sessionId)).decisions);
    } catch (error) {
      applyError(view, String(error));
    }
  }
  render();
}

async function demo(): Promise<void> {
  client = new FormflowClient(currentBaseUrl());
  const result = await runDemo(client);
  view = result.view;
  localStorage.setItem("formflow-session", view.sessionId);
  localStorage.setItem("formflow-mode", view.mode);
  console.log("demo badge sequence:", result.badgeSequence.join(" → "));
  render();
}

export function boot(): void {
  $("create-button").onclick = () => void createSession();
  $("demo-button").onclick = () => void demo();
  $("trace-button").onclick = () => void toggleTrace();
  $("send-button").onclick = () => {
    const input = $("message-input") as HTMLInputElement;
    const text = input.value;
    input.value = "";
    void send(text);
  };
  ($("message-input") as HTMLInputElement).onkeydown = (event) => {
    if (event.key === "Enter") {
      const input = $("message-input") as HTMLInputElement;
      const text = input.value;
      input.value = "";
      void send(text);
    }
  };

  const saved = localStorage.getItem("formflow-session");
  const savedMode = (localStorage.getItem("formflow-mode") as ModeName) ?? "tagged";
  if (saved) {
    void resumeSession(saved, savedMode);
  } else {
    render();
  }
}

boot();
