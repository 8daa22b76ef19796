"""Prompt-driven multi-drone task planning and execution.

Natural-language tasks become validated plans in a restricted drone command
language, executed over a Tello-compatible UDP protocol against real or
simulated fleets, with a mandatory human approval gate.
"""

from .dsl import Plan, Schedule, compile_plan, parse_plan
from .motion import Ack, ActionKind, DroneAction, encode_action, validate_action

__all__ = [
    "Ack",
    "ActionKind",
    "DroneAction",
    "Plan",
    "Schedule",
    "compile_plan",
    "encode_action",
    "parse_plan",
    "validate_action",
]

__version__ = "0.1.0"
