import pytest

from fleetpilot import dsl, llm
from fleetpilot.llm import (
    CompletionRequest,
    EmptyReply,
    MockBackend,
    NoCodeFound,
    PlanningFailure,
    ScriptedBackend,
    TransportFailure,
    complete,
    extract_code,
    plan_with_repair,
)
from fleetpilot.prompts import ChatMessage, make_bundle


FLEET = {1, 2}
NO_BACKOFF = (0.0, 0.0)


def request(task="take off drone 1"):
    from fleetpilot.prompts import render_conversation

    return CompletionRequest(messages=tuple(render_conversation(make_bundle(task))))


class FailingBackend:
    def __init__(self, failures, reply="```\ntakeoff(1)\n```"):
        self.failures = failures
        self.reply = reply
        self.calls = 0

    def complete(self, request):
        self.calls += 1
        if self.calls <= self.failures:
            raise TransportFailure("boom")
        return self.reply


class TestComplete:
    def test_mock_pattern_match(self):
        backend = MockBackend([("take off", "```\ntakeoff(1)\n```")])
        assert "takeoff(1)" in complete(request(), backend, backoff=NO_BACKOFF)

    def test_retry_then_success(self):
        backend = FailingBackend(failures=2)
        assert complete(request(), backend, backoff=NO_BACKOFF)
        assert backend.calls == 3

    def test_transport_failure_after_three_attempts(self):
        backend = FailingBackend(failures=10)
        with pytest.raises(TransportFailure):
            complete(request(), backend, backoff=NO_BACKOFF)
        assert backend.calls == 3

    def test_empty_reply(self):
        backend = MockBackend([])  # no pattern matches -> empty content
        with pytest.raises(EmptyReply):
            complete(request(), backend, backoff=NO_BACKOFF)

    def test_unreachable_http_endpoint(self):
        backend = llm.HttpBackend("http://127.0.0.1:9/never", timeout=0.2)
        before = llm.live_call_count()
        with pytest.raises(TransportFailure):
            complete(request(), backend, backoff=NO_BACKOFF)
        assert llm.live_call_count() == before + 3

    def test_request_requires_system_first(self):
        with pytest.raises(ValueError):
            CompletionRequest(messages=(ChatMessage("user", "hi"),))


class TestExtractCode:
    def test_plain_fence(self):
        assert extract_code("```\ntakeoff(1)\n```") == "takeoff(1)"

    def test_language_tagged_fence(self):
        assert extract_code("```python\nland(1)\n```") == "land(1)"

    def test_first_fence_only(self):
        reply = "Sure! ```\nland(1)\n``` Done. ```\ntakeoff(1)\n```"
        assert extract_code(reply) == "land(1)"

    def test_bare_call_lines_accepted(self):
        assert extract_code("takeoff(1)\nland(1)") == "takeoff(1)\nland(1)"

    def test_prose_rejected(self):
        with pytest.raises(NoCodeFound):
            extract_code("I cannot help with that.")

    def test_never_contains_fence_markers(self):
        for reply in ("```\ntakeoff(1)\n```", "```py\nfly(1, up, 30)\n```\ntail"):
            assert "```" not in extract_code(reply)


class TestPlanWithRepair:
    def test_happy_path_zero_repairs(self):
        bundle = make_bundle("take off drone 1")
        backend = ScriptedBackend(["```\ntakeoff(1)\n```"])
        result = plan_with_repair(bundle, FLEET, backend, backoff=NO_BACKOFF)
        assert result.repairs_used == 0
        assert len(result.plan.statements) == 1
        assert bundle.history == []

    def test_one_repair_round(self):
        bundle = make_bundle("take off drone 1")
        backend = ScriptedBackend(["```\njump(1)\n```", "```\ntakeoff(1)\n```"])
        before = len(bundle.history)
        result = plan_with_repair(bundle, FLEET, backend, backoff=NO_BACKOFF)
        assert result.repairs_used == 1
        assert len(bundle.history) - before == 2
        assert bundle.history[-2].role == "assistant"
        assert bundle.history[-1].role == "user"
        assert "jump" in bundle.history[-1].content  # errors fed back

    def test_repair_budget_exhausted(self):
        bundle = make_bundle("take off drone 1")
        backend = ScriptedBackend(["```\njump(1)\n```", "```\njump(1)\n```"])
        with pytest.raises(PlanningFailure) as exc:
            plan_with_repair(bundle, FLEET, backend, max_repairs=1, backoff=NO_BACKOFF)
        assert exc.value.stage == "validate"
        assert len(exc.value.replies) == 2
        assert any("jump" in d for d in exc.value.details)

    def test_no_code_reply(self):
        bundle = make_bundle("take off drone 1")
        backend = ScriptedBackend(["I cannot help.", "Still no."])
        with pytest.raises(PlanningFailure) as exc:
            plan_with_repair(bundle, FLEET, backend, backoff=NO_BACKOFF)
        assert exc.value.stage == "extract"

    def test_repair_never_mutates_earlier_messages(self):
        bundle = make_bundle("take off drone 1")
        bundle.history.append(ChatMessage("user", "prior"))
        snapshot = list(bundle.history)
        backend = ScriptedBackend(["```\njump(1)\n```", "```\ntakeoff(1)\n```"])
        plan_with_repair(bundle, FLEET, backend, backoff=NO_BACKOFF)
        assert bundle.history[: len(snapshot)] == snapshot

    def test_mock_backend_counts_calls(self):
        backend = MockBackend([("take off", "```\ntakeoff(1)\n```")])
        bundle = make_bundle("take off drone 1")
        plan_with_repair(bundle, FLEET, backend, backoff=NO_BACKOFF)
        assert backend.calls == 1
