"use strict";
var __importDefault = (this && this.__importDefault) || function (mod) {
    return (mod && mod.__esModule) ? mod : { "default": mod };
};
Object.defineProperty(exports, "__esModule", { value: true });
const strict_1 = __importDefault(require("node:assert/strict"));
const node_test_1 = require("node:test");
const api_js_1 = require("../src/api.js");
const demo_js_1 = require("../src/demo.js");
const fake_service_js_1 = require("./fake_service.js");
(0, node_test_1.test)("demo replay walks the badge through none, ABCCompany, ABCCompany, XYZCompany", async () => {
    const service = new fake_service_js_1.FakeService();
    service.pendingTurns = (0, fake_service_js_1.demoTurns)();
    const client = new api_js_1.FormflowClient("http://svc.test", service.fetch, async () => { });
    const result = await (0, demo_js_1.runDemo)(client);
    strict_1.default.deepEqual(result.badgeSequence, ["none", "ABCCompany", "ABCCompany", "XYZCompany"]);
    strict_1.default.equal(result.view.messages.length, demo_js_1.DEMO_UTTERANCES.length * 2);
    strict_1.default.deepEqual(result.view.decisionChips, ["Rejected", "Confirmed", "Rejected"]);
});
(0, node_test_1.test)("demo creates a stub-backed tagged customer session", async () => {
    const service = new fake_service_js_1.FakeService();
    service.pendingTurns = (0, fake_service_js_1.demoTurns)();
    const client = new api_js_1.FormflowClient("http://svc.test", service.fetch, async () => { });
    await (0, demo_js_1.runDemo)(client);
    const create = service.requests.find((r) => r.url.endsWith("/v1/sessions"));
    strict_1.default.deepEqual(create.body, { domain: "CustomerMgmt", mode: "tagged", backend: "stub" });
});
