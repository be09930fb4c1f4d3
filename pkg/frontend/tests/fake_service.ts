/** Minimal in-memory stand-in for the session service, for client tests. */

import type { ApiMessage } from "../src/api.js";

interface FakeSession {
  id: string;
  turns: ApiMessage[];
  served: number;
  events: unknown[];
  context: { entity_id: string; display_name: string } | null;
  trace: unknown[];
}

export class FakeService {
  sessions = new Map<string, FakeSession>();
  nextId = 1;
  conflictsBeforeSuccess = 0;
  requests: { method: string; url: string; body: unknown }[] = [];

  /** Queue the scripted message responses the next created session will serve. */
  pendingTurns: ApiMessage[] = [];
  pendingTrace: unknown[] = [];

  fetch = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    this.requests.push({ method, url, body });

    const sessionsMatch = url.match(/\/v1\/sessions$/);
    if (sessionsMatch && method === "POST") {
      const id = `fake-${this.nextId++}`;
      this.sessions.set(id, {
        id,
        turns: [...this.pendingTurns],
        served: 0,
        events: [],
        context: null,
        trace: [...this.pendingTrace],
      });
      return jsonResponse(201, { session_id: id });
    }

    const messageMatch = url.match(/\/v1\/sessions\/([^/]+)\/messages$/);
    if (messageMatch && method === "POST") {
      const session = this.sessions.get(messageMatch[1]!);
      if (!session) {
        return jsonResponse(404, errorBody("UnknownSession", "no such session"));
      }
      if (this.conflictsBeforeSuccess > 0) {
        this.conflictsBeforeSuccess -= 1;
        return jsonResponse(409, errorBody("TurnInFlight", "busy"));
      }
      const turn = session.turns[session.served];
      if (!turn) {
        return jsonResponse(502, errorBody("BackendFailure", "script exhausted"));
      }
      session.served += 1;
      session.context = turn.context;
      const seq = session.events.length;
      session.events.push({
        seq,
        kind: "UserUtterance",
        payload: { text: body.text, meta: false },
        timestamp: "1970-01-01T00:00:00.000+00:00",
      });
      if (turn.decision) {
        session.events.push({
          seq: seq + 1,
          kind: "DecisionApplied",
          payload: { decision: turn.decision.decision },
          timestamp: "1970-01-01T00:00:00.000+00:00",
        });
      }
      session.events.push({
        seq: session.events.length,
        kind: turn.clarifying ? "ClarifyingQuestion" : "SystemReply",
        payload: { text: turn.reply },
        timestamp: "1970-01-01T00:00:00.000+00:00",
      });
      return jsonResponse(200, turn);
    }

    const traceMatch = url.match(/\/v1\/sessions\/([^/]+)\/trace$/);
    if (traceMatch && method === "GET") {
      const session = this.sessions.get(traceMatch[1]!);
      if (!session) {
        return jsonResponse(404, errorBody("UnknownSession", "no such session"));
      }
      return jsonResponse(200, { session_id: session.id, decisions: session.trace });
    }

    const sessionMatch = url.match(/\/v1\/sessions\/([^/]+)$/);
    if (sessionMatch && method === "GET") {
      const session = this.sessions.get(sessionMatch[1]!);
      if (!session) {
        return jsonResponse(404, errorBody("UnknownSession", "no such session"));
      }
      return jsonResponse(200, {
        session_id: session.id,
        domain: "CustomerMgmt",
        mode: "tagged",
        lifecycle: "Active",
        backend: "stub",
        created_at: "1970-01-01T00:00:00.000+00:00",
        updated_at: "1970-01-01T00:00:00.000+00:00",
        context: session.context,
        events: session.events,
      });
    }
    if (sessionMatch && method === "DELETE") {
      if (!this.sessions.delete(sessionMatch[1]!)) {
        return jsonResponse(404, errorBody("UnknownSession", "no such session"));
      }
      return new Response(null, { status: 204 });
    }

    return jsonResponse(404, errorBody("NoRoute", `no route for ${method} ${url}`));
  };
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function errorBody(code: string, message: string) {
  return { error: { code, message } };
}

export function demoTurns(): ApiMessage[] {
  return [
    {
      reply: "Yes, ABCCompany is a customer. What would you like to know?",
      clarifying: false,
      context: { entity_id: "cust-001", display_name: "ABCCompany" },
      decision: { task_name: "IsCustomerConfirmed", decision: "Rejected", cot_present: true },
      seq: 1,
    },
    {
      reply: "ABCCompany announced a new regional distribution center.",
      clarifying: false,
      context: { entity_id: "cust-001", display_name: "ABCCompany" },
      decision: { task_name: "IsCustomerConfirmed", decision: "Confirmed", cot_present: true },
      seq: 5,
    },
    {
      reply: "Understood. Let's talk about XYZCompany.",
      clarifying: false,
      context: { entity_id: "cust-002", display_name: "XYZCompany" },
      decision: { task_name: "IsCustomerConfirmed", decision: "Rejected", cot_present: true },
      seq: 9,
    },
  ];
}

export function clarifyingTurn(): ApiMessage {
  return {
    reply:
      "Are you referring to Delta Dental as a new customer, or do you mean the dental plan from Delta Airlines?",
    clarifying: true,
    context: { entity_id: "cust-003", display_name: "Delta Airlines" },
    decision: { task_name: "IsCustomerConfirmed", decision: "Rejected", cot_present: true },
    seq: 5,
    options: [
      {
        kind: "switch",
        entity_id: "cust-004",
        display_name: "Delta Dental",
        label: "Delta Dental",
      },
      {
        kind: "keep",
        entity_id: "cust-003",
        display_name: "Delta Airlines",
        label: "keep Delta Airlines",
      },
    ],
  };
}
