/** Demo replay: a stub-backed customer session driven through the canonical
 * three-turn conversation, returning the badge after each exchange. */

import { FormflowClient } from "./api.js";
import { applyApiMessage, applyUserText, newView, UiSessionView } from "./model.js";

export const DEMO_UTTERANCES = [
  "Is ABCCompany a customer?",
  "What's their recent news?",
  "Actually show be XYZCompany info?",
];

export interface DemoResult {
  view: UiSessionView;
  badgeSequence: string[];
}

export async function runDemo(client: FormflowClient): Promise<DemoResult> {
  const sessionId = await client.createSession("CustomerMgmt", "tagged", "stub");
  const view = newView(sessionId, "tagged");
  const badgeSequence = [view.contextBadge];
  for (const utterance of DEMO_UTTERANCES) {
    applyUserText(view, utterance);
    const message = await client.sendMessage(sessionId, utterance);
    applyApiMessage(view, message);
    badgeSequence.push(view.contextBadge);
  }
  return { view, badgeSequence };
}
