"""Closed set of drone motion commands: parameter contracts and wire encoding.

Every action the planner may emit is one of the six kinds below.  The wire
format is the Tello SDK 2.0 text command set; ``encode_action`` produces one
ASCII line per action and ``decode_response`` classifies the drone's reply.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


FLY_DIRECTIONS = ("left", "right", "forward", "back", "up", "down")
FLIP_DIRECTIONS = ("left", "right", "forward", "back")
ROTATE_DIRECTIONS = ("cw", "ccw")

DISTANCE_CM_MIN, DISTANCE_CM_MAX = 20, 500
DEGREES_MIN, DEGREES_MAX = 1, 360
HOVER_SECONDS_MIN, HOVER_SECONDS_MAX = 0.1, 30.0

SESSION_ENTRY_COMMAND = "command"
BATTERY_QUERY = "battery?"

_FLIP_LETTER = {"left": "l", "right": "r", "forward": "f", "back": "b"}
FLIP_LETTER_TO_DIRECTION = {v: k for k, v in _FLIP_LETTER.items()}


class ActionKind(enum.Enum):
    TAKEOFF = "takeoff"
    LAND = "land"
    FLY = "fly"
    FLIP = "flip"
    ROTATE = "rotate"
    HOVER = "hover"


class ValidationError(Exception):
    """An action violates the motion library's parameter contract."""


class RangeViolation(ValidationError):
    def __init__(self, field: str, value, minimum, maximum):
        self.field = field
        self.value = value
        self.minimum = minimum
        self.maximum = maximum
        super().__init__(f"{field}={value} outside allowed range [{minimum}, {maximum}]")


class InvalidDirection(ValidationError):
    def __init__(self, token: str, allowed: tuple[str, ...]):
        self.token = token
        self.allowed = allowed
        super().__init__(f"invalid direction {token!r}; allowed: {', '.join(allowed)}")


class FieldMismatch(ValidationError):
    def __init__(self, kind: "ActionKind", field: str, problem: str):
        self.kind = kind
        self.field = field
        super().__init__(f"{kind.value}: field {field!r} {problem}")


class EmptyResponse(Exception):
    """The drone reply contained zero bytes after trimming."""


@dataclass(frozen=True)
class DroneAction:
    """One validated motion command for one drone.

    Only the fields belonging to ``kind`` may be set; use the classmethod
    constructors rather than filling fields by hand.
    """

    drone: int
    kind: ActionKind
    direction: str | None = None
    distance_cm: int | None = None
    degrees: int | None = None
    seconds: float | None = None

    @classmethod
    def takeoff(cls, drone: int) -> "DroneAction":
        return cls(drone, ActionKind.TAKEOFF)

    @classmethod
    def land(cls, drone: int) -> "DroneAction":
        return cls(drone, ActionKind.LAND)

    @classmethod
    def fly(cls, drone: int, direction: str, distance_cm: int) -> "DroneAction":
        return cls(drone, ActionKind.FLY, direction=direction, distance_cm=distance_cm)

    @classmethod
    def flip(cls, drone: int, direction: str) -> "DroneAction":
        return cls(drone, ActionKind.FLIP, direction=direction)

    @classmethod
    def rotate(cls, drone: int, direction: str, degrees: int) -> "DroneAction":
        return cls(drone, ActionKind.ROTATE, direction=direction, degrees=degrees)

    @classmethod
    def hover(cls, drone: int, seconds: float) -> "DroneAction":
        return cls(drone, ActionKind.HOVER, seconds=round(float(seconds), 1))

    def describe(self) -> str:
        """Human-readable one-liner for plan previews."""
        k = self.kind
        if k is ActionKind.TAKEOFF:
            return f"drone {self.drone}: take off"
        if k is ActionKind.LAND:
            return f"drone {self.drone}: land"
        if k is ActionKind.FLY:
            return f"drone {self.drone}: fly {self.direction} {self.distance_cm} cm"
        if k is ActionKind.FLIP:
            return f"drone {self.drone}: flip {self.direction}"
        if k is ActionKind.ROTATE:
            return f"drone {self.drone}: rotate {self.direction} {self.degrees} deg"
        return f"drone {self.drone}: hover {self.seconds:g} s"


class AckKind(enum.Enum):
    OK = "ok"
    ERROR = "error"
    VALUE = "value"


@dataclass(frozen=True)
class Ack:
    """The drone's textual reply to exactly one command."""

    kind: AckKind
    text: str = ""
    value: int | None = None
    latency: float = 0.0

    @property
    def is_ok(self) -> bool:
        return self.kind is AckKind.OK


# field names that may be populated for each kind
_ALLOWED_FIELDS = {
    ActionKind.TAKEOFF: (),
    ActionKind.LAND: (),
    ActionKind.FLY: ("direction", "distance_cm"),
    ActionKind.FLIP: ("direction",),
    ActionKind.ROTATE: ("direction", "degrees"),
    ActionKind.HOVER: ("seconds",),
}


def validate_action(action: DroneAction) -> DroneAction:
    """Return the action unchanged iff it satisfies the library contract.

    Raises :class:`ValidationError` naming the offending field otherwise.
    """
    if not isinstance(action.drone, int) or isinstance(action.drone, bool) or action.drone < 1:
        raise RangeViolation("drone", action.drone, 1, "unbounded")

    allowed = _ALLOWED_FIELDS[action.kind]
    for field in ("direction", "distance_cm", "degrees", "seconds"):
        value = getattr(action, field)
        if field in allowed:
            if value is None:
                raise FieldMismatch(action.kind, field, "is required")
        elif value is not None:
            raise FieldMismatch(action.kind, field, "must not be set")

    kind = action.kind
    if kind is ActionKind.FLY:
        if action.direction not in FLY_DIRECTIONS:
            raise InvalidDirection(str(action.direction), FLY_DIRECTIONS)
        if not isinstance(action.distance_cm, int) or isinstance(action.distance_cm, bool):
            raise FieldMismatch(kind, "distance_cm", "must be an integer")
        if not DISTANCE_CM_MIN <= action.distance_cm <= DISTANCE_CM_MAX:
            raise RangeViolation("distance_cm", action.distance_cm, DISTANCE_CM_MIN, DISTANCE_CM_MAX)
    elif kind is ActionKind.FLIP:
        if action.direction not in FLIP_DIRECTIONS:
            raise InvalidDirection(str(action.direction), FLIP_DIRECTIONS)
    elif kind is ActionKind.ROTATE:
        if action.direction not in ROTATE_DIRECTIONS:
            raise InvalidDirection(str(action.direction), ROTATE_DIRECTIONS)
        if not isinstance(action.degrees, int) or isinstance(action.degrees, bool):
            raise FieldMismatch(kind, "degrees", "must be an integer")
        if not DEGREES_MIN <= action.degrees <= DEGREES_MAX:
            raise RangeViolation("degrees", action.degrees, DEGREES_MIN, DEGREES_MAX)
    elif kind is ActionKind.HOVER:
        if not HOVER_SECONDS_MIN <= float(action.seconds) <= HOVER_SECONDS_MAX:
            raise RangeViolation("seconds", action.seconds, HOVER_SECONDS_MIN, HOVER_SECONDS_MAX)
    return action


def encode_action(action: DroneAction) -> str:
    """Encode a validated action as one ASCII command line (no newline).

    Hover has no wire form; callers execute it as a local delay.
    """
    kind = action.kind
    if kind is ActionKind.TAKEOFF:
        return "takeoff"
    if kind is ActionKind.LAND:
        return "land"
    if kind is ActionKind.FLY:
        return f"{action.direction} {action.distance_cm}"
    if kind is ActionKind.FLIP:
        return f"flip {_FLIP_LETTER[action.direction]}"
    if kind is ActionKind.ROTATE:
        return f"{action.direction} {action.degrees}"
    raise ValueError("hover has no wire form")


def decode_response(raw: bytes) -> Ack:
    """Classify a raw control-port reply.

    "ok" (case-insensitive) -> OK; a decimal integer -> VALUE; any other
    non-empty text -> ERROR.  Zero bytes after trimming raises
    :class:`EmptyResponse`.
    """
    text = raw.decode("ascii", errors="replace").strip()
    if not text:
        raise EmptyResponse("empty reply datagram")
    if text.lower() == "ok":
        return Ack(AckKind.OK, text="ok")
    try:
        return Ack(AckKind.VALUE, text=text, value=int(text))
    except ValueError:
        return Ack(AckKind.ERROR, text=text)


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str  # "drone" | "choice" | "int" | "decimal"
    choices: tuple[str, ...] = ()
    minimum: float | None = None
    maximum: float | None = None


@dataclass(frozen=True)
class FunctionSpec:
    """Signature and one-line doc for one whitelisted plan function."""

    name: str
    params: tuple[ParamSpec, ...]
    doc: str

    def signature(self) -> str:
        return f"{self.name}({', '.join(p.name for p in self.params)})"


_DRONE = ParamSpec("drone", "drone", minimum=1)

MOTION_FUNCTIONS: dict[str, FunctionSpec] = {
    "takeoff": FunctionSpec(
        "takeoff", (_DRONE,), "The drone takes off and climbs to hover height."
    ),
    "land": FunctionSpec("land", (_DRONE,), "The drone descends and lands."),
    "fly": FunctionSpec(
        "fly",
        (
            _DRONE,
            ParamSpec("direction", "choice", choices=FLY_DIRECTIONS),
            ParamSpec("distance_cm", "int", minimum=DISTANCE_CM_MIN, maximum=DISTANCE_CM_MAX),
        ),
        "The drone moves distance_cm centimeters in the given direction "
        "(left, right, forward, back, up or down).",
    ),
    "flip": FunctionSpec(
        "flip",
        (_DRONE, ParamSpec("direction", "choice", choices=FLIP_DIRECTIONS)),
        "The drone performs a flip toward the given direction "
        "(left, right, forward or back).",
    ),
    "rotate": FunctionSpec(
        "rotate",
        (
            _DRONE,
            ParamSpec("direction", "choice", choices=ROTATE_DIRECTIONS),
            ParamSpec("degrees", "int", minimum=DEGREES_MIN, maximum=DEGREES_MAX),
        ),
        "The drone rotates in place by degrees, cw for clockwise or ccw for "
        "counter-clockwise.",
    ),
    "hover": FunctionSpec(
        "hover",
        (_DRONE, ParamSpec("seconds", "decimal", minimum=HOVER_SECONDS_MIN, maximum=HOVER_SECONDS_MAX)),
        "The drone holds its position for the given number of seconds.",
    ),
}
