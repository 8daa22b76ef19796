"""Chat-completion backends, code extraction, and the bounded repair loop.

The live backend speaks the common chat-completions JSON shape over HTTP.
Tests and offline runs use the deterministic mock backends; a module-level
counter proves no live call ever happens in the offline suite.
"""

from __future__ import annotations

import os
import re
import threading
import time
from dataclasses import dataclass, field

import requests

from . import dsl
from .prompts import ChatMessage, PromptBundle, render_conversation


RETRY_BACKOFF = (0.5, 2.0)  # seconds before 2nd and 3rd attempt

# Incremented on every outbound HTTP completion call; the offline acceptance
# suite asserts this stays at zero.
_live_calls = 0
_live_lock = threading.Lock()


def live_call_count() -> int:
    return _live_calls


def _note_live_call() -> None:
    global _live_calls
    with _live_lock:
        _live_calls += 1


class TransportFailure(Exception):
    """Network-level failure talking to the completion endpoint."""


class EmptyReply(Exception):
    """The model returned no content."""


class NoCodeFound(Exception):
    def __init__(self, reply: str):
        excerpt = reply.strip().replace("\n", " ")[:120]
        self.excerpt = excerpt
        super().__init__(f"no code block or call lines in reply: {excerpt!r}")


@dataclass(frozen=True)
class CompletionRequest:
    messages: tuple[ChatMessage, ...]
    model: str = "planner"
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self):
        if not self.messages or self.messages[0].role != "system":
            raise ValueError("messages must be non-empty and start with a system message")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature out of [0, 2]")


class HttpBackend:
    """Live chat-completions adapter.

    Credential is read from the environment variable named by
    ``api_key_env`` at call time and never logged.
    """

    def __init__(self, endpoint: str, model: str = "planner",
                 api_key_env: str = "LLM_API_KEY", timeout: float = 60.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout

    def complete(self, request: CompletionRequest) -> str:
        _note_live_call()
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.model or request.model,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        try:
            resp = requests.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            data = resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise TransportFailure(str(exc)) from exc
        try:
            return data["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportFailure(f"malformed completion response: {exc}") from exc


class MockBackend:
    """Pattern-matched canned replies keyed on the last user message."""

    def __init__(self, patterns: list[tuple[str, str]]):
        self.patterns = list(patterns)
        self._lock = threading.Lock()
        self.calls = 0

    def complete(self, request: CompletionRequest) -> str:
        with self._lock:
            self.calls += 1
        last_user = next(
            (m.content for m in reversed(request.messages) if m.role == "user"), ""
        )
        needle = last_user.lower()
        for pattern, reply in self.patterns:
            if pattern.lower() in needle:
                return reply
        return ""


class ScriptedBackend:
    """Replays a fixed reply sequence; used to exercise repair rounds."""

    def __init__(self, replies: list[str]):
        self.replies = list(replies)
        self._lock = threading.Lock()
        self.calls = 0

    def complete(self, request: CompletionRequest) -> str:
        with self._lock:
            self.calls += 1
            if not self.replies:
                raise TransportFailure("scripted backend exhausted")
            return self.replies.pop(0)


def complete(request: CompletionRequest, backend,
             backoff: tuple[float, ...] = RETRY_BACKOFF) -> str:
    """One completion with up to ``len(backoff)`` retries on transport failure."""
    last: TransportFailure | None = None
    for attempt in range(len(backoff) + 1):
        try:
            reply = backend.complete(request)
        except TransportFailure as exc:
            last = exc
            if attempt < len(backoff):
                time.sleep(backoff[attempt])
            continue
        if not reply.strip():
            raise EmptyReply("model returned no content")
        return reply
    raise last  # type: ignore[misc]


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
_CALL_LINE_RE = re.compile(r"^\s*[A-Za-z_]\w*\s*\(.*\)\s*(#.*)?$")


def extract_code(reply: str) -> str:
    """Pull the DSL source out of a model reply.

    First fenced code block wins; with no fence, the whole reply is accepted
    if at least one line looks like a call.  Output never contains fence
    markers.
    """
    match = _FENCE_RE.search(reply)
    if match:
        return match.group(1).strip()
    if any(_CALL_LINE_RE.match(line) for line in reply.splitlines()):
        return reply.strip()
    raise NoCodeFound(reply)


class PlanningFailure(Exception):
    def __init__(self, stage: str, details: list[str], replies: list[str]):
        self.stage = stage  # transport | extract | parse | validate
        self.details = details
        self.replies = replies
        super().__init__(f"planning failed at {stage}: " + "; ".join(details))


@dataclass(frozen=True)
class PlanningResult:
    plan: dsl.Plan
    repairs_used: int
    replies: tuple[str, ...]


REPAIR_INSTRUCTION = (
    "Your code had these errors:\n{errors}\n"
    "Re-emit a corrected full program as a single fenced code block."
)


def plan_with_repair(bundle: PromptBundle, fleet_ids, backend,
                     max_repairs: int = 1, model: str = "planner",
                     temperature: float = 0.0,
                     backoff: tuple[float, ...] = RETRY_BACKOFF) -> PlanningResult:
    """complete -> extract -> parse -> validate, with a bounded repair loop.

    On a failed round with repairs remaining, the raw reply and the full
    error list are appended to the conversation (exactly two messages) and
    the model is asked once more for a corrected full program.
    """
    replies: list[str] = []
    all_details: list[str] = []
    stage = "transport"
    for attempt in range(max_repairs + 1):
        messages = tuple(render_conversation(bundle))
        request = CompletionRequest(messages=messages, model=model, temperature=temperature)
        try:
            reply = complete(request, backend, backoff=backoff)
        except (TransportFailure, EmptyReply) as exc:
            raise PlanningFailure("transport", all_details + [str(exc)], replies) from exc
        replies.append(reply)

        details: list[str]
        try:
            source = extract_code(reply)
            stage = "parse"
            raw = dsl.parse(dsl.tokenize(source))
            stage = "validate"
            plan = dsl.validate_plan(raw, fleet_ids)
            return PlanningResult(plan, repairs_used=attempt, replies=tuple(replies))
        except NoCodeFound as exc:
            stage = "extract"
            details = [str(exc)]
        except (dsl.DslSyntaxError, dsl.DslParseError) as exc:
            stage = "parse"
            details = [str(exc)]
        except dsl.PlanValidationError as exc:
            stage = "validate"
            details = [str(i) for i in exc.issues]

        all_details.extend(details)
        if attempt < max_repairs:
            bundle.history.append(ChatMessage("assistant", reply))
            bundle.history.append(
                ChatMessage("user", REPAIR_INSTRUCTION.format(errors="\n".join(details)))
            )
    raise PlanningFailure(stage, all_details, replies)
