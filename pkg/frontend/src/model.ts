/** Pure view-model: all chat state derives from API responses.
 *
 * The DOM layer renders this structure and nothing else, so reloading the
 * page and rebuilding from GET /v1/sessions/{id} reconstructs the identical
 * message list. Chain-of-thought text lives only in the trace entries, which
 * stay empty until the trace panel is opened.
 */

import type {
  ApiMessage,
  ClarifyOption,
  ContextRef,
  EventDoc,
  ModeName,
  TraceDecision,
} from "./api.js";

export type BubbleRole = "user" | "system" | "clarifying";

export interface ChatBubble {
  role: BubbleRole;
  text: string;
}

export type DecisionChip = "Confirmed" | "Rejected" | "Indeterminate";

export interface UiSessionView {
  sessionId: string;
  mode: ModeName;
  messages: ChatBubble[];
  contextBadge: string;
  decisionChips: (DecisionChip | null)[];
  options: ClarifyOption[];
  tracePanelOpen: boolean;
  traceEntries: TraceDecision[];
  busy: boolean;
  error: string | null;
}

export const NO_CONTEXT_BADGE = "none";

export function newView(sessionId: string, mode: ModeName): UiSessionView {
  return {
    sessionId,
    mode,
    messages: [],
    contextBadge: NO_CONTEXT_BADGE,
    decisionChips: [],
    options: [],
    tracePanelOpen: false,
    traceEntries: [],
    busy: false,
    error: null,
  };
}

export function applyUserText(view: UiSessionView, text: string): void {
  view.messages.push({ role: "user", text });
  view.options = [];
  view.error = null;
}

/** Fold one message response into the view; the badge always tracks the API. */
export function applyApiMessage(view: UiSessionView, message: ApiMessage): void {
  view.messages.push({
    role: message.clarifying ? "clarifying" : "system",
    text: message.reply,
  });
  view.contextBadge = badgeFor(message.context);
  view.decisionChips.push(message.decision ? message.decision.decision : null);
  view.options = message.clarifying && message.options ? message.options : [];
}

export function applyError(view: UiSessionView, message: string): void {
  view.error = message;
}

export function badgeFor(context: ContextRef | null): string {
  return context ? context.display_name : NO_CONTEXT_BADGE;
}

export function optionLabels(view: UiSessionView): string[] {
  return view.options.map((option) => option.label);
}

export function openTracePanel(view: UiSessionView, decisions: TraceDecision[]): void {
  view.tracePanelOpen = true;
  view.traceEntries = decisions;
}

export function closeTracePanel(view: UiSessionView): void {
  view.tracePanelOpen = false;
  view.traceEntries = [];
}

/** Rebuild the view from a persisted transcript, as after a page reload. */
export function viewFromTranscript(
  sessionId: string,
  mode: ModeName,
  events: EventDoc[],
  context: ContextRef | null,
): UiSessionView {
  const view = newView(sessionId, mode);
  for (const event of events) {
    if (event.kind === "UserUtterance") {
      view.messages.push({ role: "user", text: String(event.payload["text"] ?? "") });
    } else if (event.kind === "SystemReply") {
      view.messages.push({ role: "system", text: String(event.payload["text"] ?? "") });
    } else if (event.kind === "ClarifyingQuestion") {
      view.messages.push({ role: "clarifying", text: String(event.payload["text"] ?? "") });
    } else if (event.kind === "DecisionApplied") {
      view.decisionChips.push(event.payload["decision"] as DecisionChip);
    }
  }
  view.contextBadge = badgeFor(context);
  return view;
}
