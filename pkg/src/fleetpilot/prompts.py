"""Prompt construction: system prompt, function-library preamble, rendering.

The library preamble is generated from the live function registry, so the
text the planner sees can never drift from what the validator accepts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import dsl
from .motion import FunctionSpec


ROLE_SENTENCE = "You are an assistant helping me with drones."
RESTRICTION_SENTENCE = "You are only allowed to use the functions I have defined for you."

DEFAULT_SYSTEM_TEMPLATE = """\
{{role_sentence}}
{{restriction_sentence}}
Do not use any other functions, libraries, variables, loops or arithmetic.
When I give you a task, reply with exactly one fenced code block containing
only calls to the defined functions, one call per line, and nothing else.
The task may be written in any language; always reply with code only, using
the exact call syntax of the defined functions.
{{extra_rules}}"""

DEFAULT_USER_TEMPLATE = """\
{{library_preamble}}

Task: {{task}}"""


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"bad role {self.role!r}")
        if not self.content:
            raise ValueError("empty message content")


@dataclass
class PromptBundle:
    """Everything needed to render one planning conversation."""

    system_text: str
    library_preamble: str
    task_text: str
    history: list[ChatMessage] = field(default_factory=list)


def _fill(template: str, values: dict[str, str]) -> str:
    out = template
    for key, value in values.items():
        out = out.replace("{{" + key + "}}", value)
    return out


def build_system_prompt(persona: dict | None = None, template_path: str | None = None) -> str:
    """Render the system prompt.

    ``persona`` may override ``role_sentence`` or add ``extra_rules``; an
    empty dict yields the default text.  ``template_path`` points at a plain
    text file with ``{{placeholder}}`` markers; the built-in template is the
    fallback.
    """
    persona = persona or {}
    template = DEFAULT_SYSTEM_TEMPLATE
    if template_path:
        template = Path(template_path).read_text(encoding="utf-8")
    text = _fill(
        template,
        {
            "role_sentence": persona.get("role_sentence", ROLE_SENTENCE),
            "restriction_sentence": RESTRICTION_SENTENCE,
            "extra_rules": persona.get("extra_rules", ""),
        },
    )
    return text.strip() + "\n"


def _param_doc(spec: FunctionSpec) -> str:
    notes = []
    for p in spec.params:
        if p.kind == "drone":
            notes.append(f"{p.name} is the drone id (1-based)")
        elif p.kind == "choice":
            notes.append(f"{p.name} is one of {', '.join(p.choices)}")
        elif p.kind in ("int", "decimal"):
            unit = "an integer" if p.kind == "int" else "a decimal"
            notes.append(f"{p.name} is {unit} between {p.minimum:g} and {p.maximum:g}")
    return ("; ".join(notes) + ". ") if notes else ""


def build_library_preamble(registry: dict[str, FunctionSpec] | None = None) -> str:
    """One line per whitelisted function: signature, ranges, short doc.

    Output order is alphabetical regardless of registry order.
    """
    registry = registry if registry is not None else dsl.REGISTRY
    lines = ["These are the only functions you may call:"]
    for name in sorted(registry):
        spec = registry[name]
        lines.append(f"{spec.signature()} -- {_param_doc(spec)}{spec.doc}")
    return "\n".join(lines)


def render_conversation(bundle: PromptBundle) -> list[ChatMessage]:
    """System message, then history, then the current user turn.

    The library preamble is re-sent on every turn so mid-session tasks stay
    grounded in the whitelist.
    """
    user_text = _fill(
        DEFAULT_USER_TEMPLATE,
        {"library_preamble": bundle.library_preamble, "task": bundle.task_text},
    )
    return [
        ChatMessage("system", bundle.system_text),
        *bundle.history,
        ChatMessage("user", user_text),
    ]


def make_bundle(task_text: str, persona: dict | None = None,
                history: list[ChatMessage] | None = None,
                system_template_path: str | None = None) -> PromptBundle:
    return PromptBundle(
        system_text=build_system_prompt(persona, system_template_path),
        library_preamble=build_library_preamble(),
        task_text=task_text,
        history=history if history is not None else [],
    )
