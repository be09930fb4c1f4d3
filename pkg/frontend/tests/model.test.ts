import assert from "node:assert/strict";
import { test } from "node:test";

import type { TraceDecision } from "../src/api.js";
import {
  applyApiMessage,
  applyUserText,
  badgeFor,
  closeTracePanel,
  newView,
  openTracePanel,
  optionLabels,
  viewFromTranscript,
} from "../src/model.js";
import { clarifyingTurn, demoTurns } from "./fake_service.js";

test("badge starts at none and tracks every API response", () => {
  const view = newView("s", "tagged");
  const badges = [view.contextBadge];
  for (const turn of demoTurns()) {
    applyApiMessage(view, turn);
    badges.push(view.contextBadge);
  }
  assert.deepEqual(badges, ["none", "ABCCompany", "ABCCompany", "XYZCompany"]);
});

test("decision chips mirror the per-turn decisions", () => {
  const view = newView("s", "tagged");
  for (const turn of demoTurns()) {
    applyApiMessage(view, turn);
  }
  assert.deepEqual(view.decisionChips, ["Rejected", "Confirmed", "Rejected"]);
});

test("clarifying messages are distinct and expose option buttons", () => {
  const view = newView("s", "tagged");
  applyApiMessage(view, clarifyingTurn());
  assert.equal(view.messages[0]!.role, "clarifying");
  assert.deepEqual(optionLabels(view), ["Delta Dental", "keep Delta Airlines"]);
});

test("options clear when the user sends the next message", () => {
  const view = newView("s", "tagged");
  applyApiMessage(view, clarifyingTurn());
  applyUserText(view, "Delta Dental");
  assert.deepEqual(optionLabels(view), []);
});

test("baseline turns carry no decision chip", () => {
  const view = newView("s", "baseline");
  applyApiMessage(view, {
    reply: "Delta Airlines provides a dental plan for employees.",
    clarifying: false,
    context: { entity_id: "cust-003", display_name: "Delta Airlines" },
    decision: null,
    seq: 3,
  });
  assert.deepEqual(view.decisionChips, [null]);
});

test("chain of thought is hidden until the trace panel opens", () => {
  const view = newView("s", "tagged");
  for (const turn of demoTurns()) {
    applyApiMessage(view, turn);
  }
  const rendered = JSON.stringify(view.messages);
  assert.ok(!rendered.includes("chain"));
  assert.equal(view.traceEntries.length, 0);

  const decisions: TraceDecision[] = [
    {
      task_name: "IsCustomerConfirmed",
      decision: "Rejected",
      chain_of_thought:
        "User is naming ABCCompany, no current customer context is set, so we treat it as a new search.",
      raw_output: "<isCustomerConfirmed>no</isCustomerConfirmed>",
      candidate_entity: null,
    },
  ];
  openTracePanel(view, decisions);
  assert.ok(view.tracePanelOpen);
  assert.match(view.traceEntries[0]!.chain_of_thought!, /treat it as a new search/);

  closeTracePanel(view);
  assert.equal(view.traceEntries.length, 0);
});

test("reload reconstruction matches the live message list", () => {
  const live = newView("s", "tagged");
  const events: Parameters<typeof viewFromTranscript>[2] = [];
  let seq = 0;
  const utterances = [
    "Is ABCCompany a customer?",
    "What's their recent news?",
    "Actually show be XYZCompany info?",
  ];
  demoTurns().forEach((turn, index) => {
    const text = utterances[index]!;
    applyUserText(live, text);
    applyApiMessage(live, turn);
    events.push({
      seq: seq++,
      kind: "UserUtterance",
      payload: { text, meta: false },
      timestamp: "t",
    });
    events.push({
      seq: seq++,
      kind: "DecisionApplied",
      payload: { decision: turn.decision!.decision },
      timestamp: "t",
    });
    events.push({
      seq: seq++,
      kind: "SystemReply",
      payload: { text: turn.reply },
      timestamp: "t",
    });
  });

  const reloaded = viewFromTranscript(
    "s",
    "tagged",
    events,
    { entity_id: "cust-002", display_name: "XYZCompany" },
  );
  assert.deepEqual(reloaded.messages, live.messages);
  assert.deepEqual(reloaded.decisionChips, live.decisionChips);
  assert.equal(reloaded.contextBadge, live.contextBadge);
});

test("badgeFor maps null context to none", () => {
  assert.equal(badgeFor(null), "none");
  assert.equal(badgeFor({ entity_id: "x", display_name: "Delta Dental" }), "Delta Dental");
});
