"use strict";
/** Pure view-model: all chat state derives from API responses.
 *
 * The DOM layer renders this structure and nothing else, so reloading the
 * page and rebuilding from GET /v1/sessions/{id} reconstructs the identical
 * message list. Chain-of-thought text lives only in the trace entries, which
 * stay empty until the trace panel is opened.
 */
Object.defineProperty(exports, "__esModule", { value: true });
exports.NO_CONTEXT_BADGE = void 0;
exports.newView = newView;
exports.applyUserText = applyUserText;
exports.applyApiMessage = applyApiMessage;
exports.applyError = applyError;
exports.badgeFor = badgeFor;
exports.optionLabels = optionLabels;
exports.openTracePanel = openTracePanel;
exports.closeTracePanel = closeTracePanel;
exports.viewFromTranscript = viewFromTranscript;
exports.NO_CONTEXT_BADGE = "none";
function newView(sessionId, mode) {
    return {
        sessionId,
        mode,
        messages: [],
        contextBadge: exports.NO_CONTEXT_BADGE,
        decisionChips: [],
        options: [],
        tracePanelOpen: false,
        traceEntries: [],
        busy: false,
        error: null,
    };
}
function applyUserText(view, text) {
    view.messages.push({ role: "user", text });
    view.options = [];
    view.error = null;
}
/** Fold one message response into the view; the badge always tracks the API. */
function applyApiMessage(view, message) {
    view.messages.push({
        role: message.clarifying ? "clarifying" : "system",
        text: message.reply,
    });
    view.contextBadge = badgeFor(message.context);
    view.decisionChips.push(message.decision ? message.decision.decision : null);
    view.options = message.clarifying && message.options ? message.options : [];
}
function applyError(view, message) {
    view.error = message;
}
function badgeFor(context) {
    return context ? context.display_name : exports.NO_CONTEXT_BADGE;
}
function optionLabels(view) {
    return view.options.map((option) => option.label);
}
function openTracePanel(view, decisions) {
    view.tracePanelOpen = true;
    view.traceEntries = decisions;
}
function closeTracePanel(view) {
    view.tracePanelOpen = false;
    view.traceEntries = [];
}
/** Rebuild the view from a persisted transcript, as after a page reload. */
function viewFromTranscript(sessionId, mode, events, context) {
    const view = newView(sessionId, mode);
    for (const event of events) {
        if (event.kind === "UserUtterance") {
            view.messages.push({ role: "user", text: String(event.payload["text"] ?? "") });
        }
        else if (event.kind === "SystemReply") {
            view.messages.push({ role: "system", text: String(event.payload["text"] ?? "") });
        }
        else if (event.kind === "ClarifyingQuestion") {
            view.messages.push({ role: "clarifying", text: String(event.payload["text"] ?? "") });
        }
        else if (event.kind === "DecisionApplied") {
            view.decisionChips.push(event.payload["decision"]);
        }
    }
    view.contextBadge = badgeFor(context);
    return view;
}
