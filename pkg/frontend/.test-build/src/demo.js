"use strict";
/** Demo replay: a stub-backed customer session driven through the canonical
 * three-turn conversation, returning the badge after each exchange. */
Object.defineProperty(exports, "__esModule", { value: true });
exports.DEMO_UTTERANCES = void 0;
exports.runDemo = runDemo;
const model_js_1 = require("./model.js");
exports.DEMO_UTTERANCES = [
    "Is ABCCompany a customer?",
    "What's their recent news?",
    "Actually show be XYZCompany info?",
];
async function runDemo(client) {
    const sessionId = await client.createSession("CustomerMgmt", "tagged", "stub");
    const view = (0, model_js_1.newView)(sessionId, "tagged");
    const badgeSequence = [view.contextBadge];
    for (const utterance of exports.DEMO_UTTERANCES) {
        (0, model_js_1.applyUserText)(view, utterance);
        const message = await client.sendMessage(sessionId, utterance);
        (0, model_js_1.applyApiMessage)(view, message);
        badgeSequence.push(view.contextBadge);
    }
    return { view, badgeSequence };
}
