"""Completion backends behind one contract: real HTTP, scripted stub, rule oracle.

The stub and oracle are deterministic stand-ins for a model, so the whole
pipeline (tests, evaluation, CI) runs with no network and no credentials. The
HTTP backend speaks the chat-completions wire shape; the role header lives
here in the request builder, never in prompt templates.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass
from importlib import resources

import httpx

from .catalog import tokenize
from .prompts import PromptTask
from .tags import extract_tag

DEFAULT_TIMEOUT_MS = 30_000
DEFAULT_MAX_OUTPUT_CHARS = 8_000
RETRY_LIMIT = 2
BACKOFF_BASE_MS = 250

#: Wording that signals the user is steering toward a different entity.
SWITCH_PHRASES = ("the one", "i meant", "i am looking for")


class BackendError(RuntimeError):
    pass


class Timeout(BackendError):
    pass


class TransportError(BackendError):
    pass


class RemoteError(BackendError):
    def __init__(self, status: int, body_excerpt: str):
        super().__init__(f"remote returned {status}: {body_excerpt}")
        self.status = status
        self.body_excerpt = body_excerpt


class ScriptExhausted(BackendError):
    pass


class ScriptMismatch(BackendError):
    pass


class UnparseablePrompt(BackendError):
    pass


class BackendConfigError(BackendError):
    pass


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    temperature: float = 0.0
    max_output_chars: int = DEFAULT_MAX_OUTPUT_CHARS
    timeout_ms: int = DEFAULT_TIMEOUT_MS

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    latency_ms: int
    backend_id: str


@dataclass(frozen=True)
class ScriptEntry:
    response_text: str
    expect_substring: str | None = None


def load_script(path: str) -> list[ScriptEntry]:
    with open(path, encoding="utf-8") as fh:
        return parse_script(json.load(fh))


def parse_script(entries: list[dict]) -> list[ScriptEntry]:
    script = []
    for entry in entries:
        script.append(
            ScriptEntry(
                response_text=entry["response_text"],
                expect_substring=entry.get("expect_substring"),
            )
        )
    return script


def demo_script() -> list[ScriptEntry]:
    """The shipped three-turn customer demo script."""
    data = (
        resources.files("formflow.fixtures")
        .joinpath("script_customer_demo.json")
        .read_text(encoding="utf-8")
    )
    return parse_script(json.loads(data))


class ScriptedStubBackend:
    """Replays a fixed list of responses in order; one instance per scenario.

    Entries may pin an ``expect_substring`` that the incoming prompt must
    contain, which catches scripts drifting out of step with the conversation.
    """

    backend_id = "stub"

    def __init__(self, script: list[ScriptEntry]):
        self._script = list(script)
        self._position = 0
        self._lock = threading.Lock()

    @property
    def position(self) -> int:
        return self._position

    def seek(self, position: int) -> None:
        self._position = position

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        with self._lock:
            if self._position >= len(self._script):
                raise ScriptExhausted(
                    f"script has {len(self._script)} entries; call {self._position + 1} requested"
                )
            entry = self._script[self._position]
            if entry.expect_substring and entry.expect_substring not in request.prompt:
                raise ScriptMismatch(
                    f"script entry {self._position} expects {entry.expect_substring!r} in prompt"
                )
            self._position += 1
        return CompletionResponse(text=entry.response_text, latency_ms=0, backend_id=self.backend_id)


class RuleOracleBackend:
    """Deterministic classifier that answers a rendered task prompt.

    Applies the confirmation guidelines as literal rules: a query naming a
    different catalog entity, or using a switch phrase, classifies as "no";
    everything else is "yes". Emits the decision tag plus a one-sentence
    chain of thought naming the rule that fired.
    """

    backend_id = "oracle"

    def __init__(
        self,
        task: PromptTask,
        entity_names: list[str],
        switch_phrases: tuple[str, ...] = SWITCH_PHRASES,
    ):
        self.task = task
        self.switch_phrases = tuple(p.lower() for p in switch_phrases)
        self._entity_tokens: dict[str, list[str]] = {
            name: tokenize(name) for name in entity_names
        }

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        return CompletionResponse(
            text=self.classify(request.prompt), latency_ms=0, backend_id=self.backend_id
        )

    def classify(self, prompt: str) -> str:
        query_spans = [s for s in extract_tag(prompt, self.task.query_tag) if s.well_formed]
        entity_spans = [s for s in extract_tag(prompt, self.task.entity_tag) if s.well_formed]
        if not query_spans or not entity_spans:
            raise UnparseablePrompt(
                f"prompt lacks <{self.task.query_tag}> or <{self.task.entity_tag}> elements"
            )
        query = query_spans[0].value
        current = entity_spans[0].value

        query_tokens = set(tokenize(query))
        current_tokens = set(tokenize(current))

        foreign_token = None
        for name, name_tokens in self._entity_tokens.items():
            if name == current:
                continue
            hits = (query_tokens & set(name_tokens)) - current_tokens
            if hits:
                foreign_token = sorted(hits)[0]
                break
        if foreign_token is not None:
            cot = (
                f"The query mentions '{foreign_token}', which points away from"
                f" {current or 'the empty context'}, so this is a switch."
            )
            return self._render("no", cot)

        lowered = query.lower()
        for phrase in self.switch_phrases:
            if phrase in lowered:
                cot = (
                    f"The query uses the phrase '{phrase}', which signals a switch"
                    f" away from {current or 'the empty context'}."
                )
                return self._render("no", cot)

        cot = f"The query asks about {current or 'the current context'} with no sign of a switch."
        return self._render("yes", cot)

    def _render(self, decision: str, cot: str) -> str:
        return (
            f"<{self.task.decision_tag}>{decision}</{self.task.decision_tag}>\n"
            f"<{self.task.cot_tag}>{cot}</{self.task.cot_tag}>"
        )


class HttpBackend:
    """Chat-completions client with bounded retries on transport failures.

    Remote 4xx/5xx responses are never retried; only transport-level failures
    are, up to RETRY_LIMIT times with exponential backoff.
    """

    backend_id = "http"

    def __init__(
        self,
        endpoint: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        client: httpx.Client | None = None,
        sleep=time.sleep,
    ):
        self.endpoint = endpoint or os.environ.get("LLM_ENDPOINT", "")
        self.api_key = api_key if api_key is not None else os.environ.get("LLM_API_KEY", "")
        self.model = model or os.environ.get("LLM_MODEL", "")
        if not self.endpoint:
            raise BackendConfigError("LLM_ENDPOINT is not configured")
        if not self.model:
            raise BackendConfigError("LLM_MODEL is not configured")
        self._client = client or httpx.Client()
        self._sleep = sleep

    def build_payload(self, request: CompletionRequest) -> dict:
        # Single user message; role framing belongs to the transport, not the template.
        return {
            "model": self.model,
            "temperature": request.temperature,
            "messages": [{"role": "user", "content": request.prompt}],
        }

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        url = self.endpoint.rstrip("/") + "/chat/completions"
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        started = time.monotonic()

        last_transport_error: Exception | None = None
        for attempt in range(RETRY_LIMIT + 1):
            if attempt:
                self._sleep(BACKOFF_BASE_MS * (2 ** (attempt - 1)) / 1000.0)
            try:
                response = self._client.post(
                    url,
                    json=self.build_payload(request),
                    headers=headers,
                    timeout=request.timeout_ms / 1000.0,
                )
            except httpx.TimeoutException as exc:
                raise Timeout(f"no response within {request.timeout_ms} ms") from exc
            except httpx.HTTPError as exc:
                last_transport_error = exc
                continue

            if response.status_code >= 400:
                raise RemoteError(response.status_code, response.text[:200])
            try:
                body = response.json()
                text = body["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise RemoteError(response.status_code, response.text[:200]) from exc
            latency_ms = int((time.monotonic() - started) * 1000)
            return CompletionResponse(
                text=text[: request.max_output_chars],
                latency_ms=latency_ms,
                backend_id=self.backend_id,
            )

        raise TransportError(
            f"transport failed after {RETRY_LIMIT + 1} attempts: {last_transport_error}"
        )


def oracle_classify(prompt: str, task: PromptTask, entity_names: list[str]) -> str:
    """One-shot oracle run over an already-rendered prompt."""
    return RuleOracleBackend(task, entity_names).classify(prompt)
