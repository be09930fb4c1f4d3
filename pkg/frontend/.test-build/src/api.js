"use strict";
/** Typed client for the formflow session service HTTP API. */
Object.defineProperty(exports, "__esModule", { value: true });
exports.FormflowClient = exports.ApiError = void 0;
class ApiError extends Error {
    constructor(status, code, message) {
        super(message);
        this.status = status;
        this.code = code;
        this.name = "ApiError";
    }
}
exports.ApiError = ApiError;
const defaultSleep = (ms) => new Promise((resolve) => setTimeout(resolve, ms));
/** One turn may be in flight per session; a 409 is retried briefly. */
const CONFLICT_RETRIES = 3;
const CONFLICT_DELAY_MS = 300;
async function parseError(response) {
    let code = "Unknown";
    let message = `HTTP ${response.status}`;
    try {
        const body = await response.json();
        if (body && body.error) {
            code = body.error.code ?? code;
            message = body.error.message ?? message;
        }
    }
    catch {
        // non-JSON error body: keep the generic message
    }
    return new ApiError(response.status, code, message);
}
class FormflowClient {
    constructor(baseUrl, fetchFn = (input, init) => fetch(input, init), sleep = defaultSleep) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn;
        this.sleep = sleep;
        this.baseUrl = baseUrl.replace(/\/+$/, "");
    }
    async request(path, init) {
        const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
        if (!response.ok) {
            throw await parseError(response);
        }
        if (response.status === 204) {
            return undefined;
        }
        return (await response.json());
    }
    async createSession(domain, mode, backend) {
        const body = await this.request("/v1/sessions", {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify({ domain, mode, backend }),
        });
        return body.session_id;
    }
    async sendMessage(sessionId, text) {
        for (let attempt = 0;; attempt++) {
            const response = await this.fetchFn(`${this.baseUrl}/v1/sessions/${sessionId}/messages`, {
                method: "POST",
                headers: { "Content-Type": "application/json" },
                body: JSON.stringify({ text }),
            });
            if (response.status === 409 && attempt < CONFLICT_RETRIES) {
                await this.sleep(CONFLICT_DELAY_MS);
                continue;
            }
            if (!response.ok) {
                throw await parseError(response);
            }
            return (await response.json());
        }
    }
    getSession(sessionId) {
        return this.request(`/v1/sessions/${sessionId}`);
    }
    getTrace(sessionId) {
        return this.request(`/v1/sessions/${sessionId}/trace`);
    }
    deleteSession(sessionId) {
        return this.request(`/v1/sessions/${sessionId}`, { method: "DELETE" });
    }
}
exports.FormflowClient = FormflowClient;
