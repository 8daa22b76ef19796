"""The restricted plan language: tokenizer, parser, validator and compiler.

Plans are straight-line programs, one call per line, drawn from the motion
function whitelist plus ``barrier()``.  No variables, loops or arithmetic:
repetition is the planner's job at generation time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import motion
from .motion import ActionKind, DroneAction, FunctionSpec, ParamSpec


WHITELIST = frozenset(motion.MOTION_FUNCTIONS)

BARRIER_SPEC = FunctionSpec(
    "barrier",
    (),
    "Every drone must finish all of its earlier actions before any drone "
    "starts an action written after this point.",
)

REGISTRY: dict[str, FunctionSpec] = {**motion.MOTION_FUNCTIONS, "barrier": BARRIER_SPEC}


class DslSyntaxError(Exception):
    def __init__(self, line: int, column: int, offending: str):
        self.line = line
        self.column = column
        self.offending = offending
        super().__init__(f"line {line}, column {column}: unexpected {offending!r}")


class DslParseError(Exception):
    def __init__(self, line: int, expected: str, found: str):
        self.line = line
        self.expected = expected
        self.found = found
        super().__init__(f"line {line}: expected {expected}, found {found}")


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT | INT | DECIMAL | LPAREN | RPAREN | COMMA
    value: object
    line: int
    column: int


def tokenize(source: str) -> list[Token]:
    """Split plan source into tokens; ``#`` comments and blank lines vanish."""
    tokens: list[Token] = []
    for lineno, line in enumerate(source.splitlines(), start=1):
        i = 0
        n = len(line)
        while i < n:
            ch = line[i]
            if ch == "#":
                break
            if ch in " \t\r":
                i += 1
                continue
            col = i + 1
            if ch == "(":
                tokens.append(Token("LPAREN", "(", lineno, col))
                i += 1
            elif ch == ")":
                tokens.append(Token("RPAREN", ")", lineno, col))
                i += 1
            elif ch == ",":
                tokens.append(Token("COMMA", ",", lineno, col))
                i += 1
            elif ch.isalpha() or ch == "_":
                j = i
                while j < n and (line[j].isalnum() or line[j] == "_"):
                    j += 1
                tokens.append(Token("IDENT", line[i:j], lineno, col))
                i = j
            elif ch.isdigit():
                j = i
                while j < n and line[j].isdigit():
                    j += 1
                kind = "INT"
                if j < n and line[j] == ".":
                    j += 1
                    if j >= n or not line[j].isdigit():
                        raise DslSyntaxError(lineno, j, line[j] if j < n else "end of line")
                    while j < n and line[j].isdigit():
                        j += 1
                    kind = "DECIMAL"
                if j < n and (line[j].isalnum() or line[j] in "._"):
                    raise DslSyntaxError(lineno, j + 1, line[j])
                text = line[i:j]
                tokens.append(
                    Token(kind, int(text) if kind == "INT" else float(text), lineno, col)
                )
                i = j
            else:
                raise DslSyntaxError(lineno, col, ch)
    return tokens


@dataclass(frozen=True)
class RawStatement:
    """One parsed source line before semantic validation."""

    name: str
    args: tuple
    line: int


def parse(tokens: list[Token]) -> list[RawStatement]:
    """Parse tokens into raw statements; grammar is ``ident '(' args? ')'``."""
    statements: list[RawStatement] = []
    by_line: dict[int, list[Token]] = {}
    for tok in tokens:
        by_line.setdefault(tok.line, []).append(tok)

    for lineno in sorted(by_line):
        toks = by_line[lineno]
        pos = 0

        def peek() -> Token | None:
            return toks[pos] if pos < len(toks) else None

        def take(kind: str, expected: str) -> Token:
            nonlocal pos
            tok = peek()
            if tok is None:
                raise DslParseError(lineno, expected, "end of line")
            if tok.kind != kind:
                raise DslParseError(lineno, expected, repr(tok.value))
            pos += 1
            return tok

        name = take("IDENT", "function name")
        take("LPAREN", "'('")
        args: list = []
        tok = peek()
        if tok is not None and tok.kind != "RPAREN":
            while True:
                tok = peek()
                if tok is None:
                    raise DslParseError(lineno, "argument", "end of line")
                if tok.kind not in ("IDENT", "INT", "DECIMAL"):
                    raise DslParseError(lineno, "argument", repr(tok.value))
                args.append(tok.value)
                pos += 1
                tok = peek()
                if tok is None or tok.kind != "COMMA":
                    break
                pos += 1
        take("RPAREN", "')'")
        if peek() is not None:
            raise DslParseError(lineno, "end of line", repr(peek().value))
        statements.append(RawStatement(str(name.value), tuple(args), lineno))
    return statements


# ---------------------------------------------------------------------------
# validation issues


@dataclass(frozen=True)
class PlanIssue:
    line: int | None = None

    def _loc(self) -> str:
        return f"line {self.line}: " if self.line else ""


@dataclass(frozen=True)
class UnknownFunction(PlanIssue):
    name: str = ""

    def __str__(self) -> str:
        return f"{self._loc()}unknown function {self.name!r}; allowed: " + ", ".join(
            sorted(REGISTRY)
        )


@dataclass(frozen=True)
class ArityMismatch(PlanIssue):
    name: str = ""
    expected: int = 0
    got: int = 0

    def __str__(self) -> str:
        return f"{self._loc()}{self.name} takes {self.expected} argument(s), got {self.got}"


@dataclass(frozen=True)
class BadArgument(PlanIssue):
    name: str = ""
    param: str = ""
    detail: str = ""

    def __str__(self) -> str:
        return f"{self._loc()}{self.name}: argument {self.param!r} {self.detail}"


@dataclass(frozen=True)
class UnknownDrone(PlanIssue):
    drone: int = 0

    def __str__(self) -> str:
        return f"{self._loc()}drone {self.drone} is not in the fleet"


@dataclass(frozen=True)
class RangeIssue(PlanIssue):
    field: str = ""
    value: object = None
    minimum: object = None
    maximum: object = None

    def __str__(self) -> str:
        return (
            f"{self._loc()}{self.field}={self.value} outside allowed range "
            f"[{self.minimum}, {self.maximum}]"
        )


@dataclass(frozen=True)
class EmptyPlan(PlanIssue):
    def __str__(self) -> str:
        return "plan is empty"


@dataclass(frozen=True)
class BarrierPlacement(PlanIssue):
    reason: str = ""

    def __str__(self) -> str:
        return f"{self._loc()}bad barrier placement: {self.reason}"


class PlanValidationError(Exception):
    """Carries every issue found in one validation pass."""

    def __init__(self, issues: list[PlanIssue]):
        self.issues = issues
        super().__init__("; ".join(str(i) for i in issues))


# ---------------------------------------------------------------------------
# validated plan model


@dataclass(frozen=True)
class Call:
    action: DroneAction


@dataclass(frozen=True)
class Barrier:
    pass


Statement = Call | Barrier


@dataclass(frozen=True)
class Plan:
    statements: tuple[Statement, ...]
    referenced_drones: frozenset[int]

    def to_text(self) -> str:
        """Canonical DSL text; parsing it back yields an equal plan."""
        lines = []
        for st in self.statements:
            if isinstance(st, Barrier):
                lines.append("barrier()")
                continue
            a = st.action
            k = a.kind
            if k is ActionKind.TAKEOFF:
                lines.append(f"takeoff({a.drone})")
            elif k is ActionKind.LAND:
                lines.append(f"land({a.drone})")
            elif k is ActionKind.FLY:
                lines.append(f"fly({a.drone}, {a.direction}, {a.distance_cm})")
            elif k is ActionKind.FLIP:
                lines.append(f"flip({a.drone}, {a.direction})")
            elif k is ActionKind.ROTATE:
                lines.append(f"rotate({a.drone}, {a.direction}, {a.degrees})")
            else:
                lines.append(f"hover({a.drone}, {a.seconds:g})")
        return "\n".join(lines)


def _build_action(raw: RawStatement, spec: FunctionSpec, issues: list[PlanIssue]) -> DroneAction | None:
    """Map raw arguments through the function spec; collect issues, not raise."""
    values: dict[str, object] = {}
    ok = True
    for param, arg in zip(spec.params, raw.args):
        if param.kind in ("drone", "int"):
            if not isinstance(arg, int):
                issues.append(BadArgument(raw.line, spec.name, param.name, "must be an integer"))
                ok = False
                continue
        elif param.kind == "decimal":
            if not isinstance(arg, (int, float)):
                issues.append(BadArgument(raw.line, spec.name, param.name, "must be a number"))
                ok = False
                continue
        elif param.kind == "choice":
            if not isinstance(arg, str):
                issues.append(
                    BadArgument(
                        raw.line, spec.name, param.name,
                        "must be one of " + ", ".join(param.choices),
                    )
                )
                ok = False
                continue
        values[param.name] = arg
    if not ok:
        return None

    name = spec.name
    if name == "takeoff":
        return DroneAction.takeoff(values["drone"])
    if name == "land":
        return DroneAction.land(values["drone"])
    if name == "fly":
        return DroneAction.fly(values["drone"], values["direction"], values["distance_cm"])
    if name == "flip":
        return DroneAction.flip(values["drone"], values["direction"])
    if name == "rotate":
        return DroneAction.rotate(values["drone"], values["direction"], values["degrees"])
    return DroneAction.hover(values["drone"], float(values["seconds"]))


def validate_plan(raw_statements: list[RawStatement], fleet_ids) -> Plan:
    """Check every statement against the whitelist and the fleet.

    All issues are collected in one pass (not fail-fast) so the full list can
    be handed back to the planner for a single repair round.  Raises
    :class:`PlanValidationError` if any issue exists.
    """
    fleet = set(fleet_ids)
    issues: list[PlanIssue] = []
    statements: list[Statement] = []
    drones: set[int] = set()

    if not raw_statements:
        issues.append(EmptyPlan())

    for raw in raw_statements:
        if raw.name == "barrier":
            if raw.args:
                issues.append(ArityMismatch(raw.line, "barrier", 0, len(raw.args)))
                continue
            statements.append(Barrier())
            continue
        spec = REGISTRY.get(raw.name)
        if spec is None:
            issues.append(UnknownFunction(raw.line, raw.name))
            continue
        if len(raw.args) != len(spec.params):
            issues.append(ArityMismatch(raw.line, raw.name, len(spec.params), len(raw.args)))
            continue
        action = _build_action(raw, spec, issues)
        if action is None:
            continue
        try:
            motion.validate_action(action)
        except motion.RangeViolation as exc:
            issues.append(RangeIssue(raw.line, exc.field, exc.value, exc.minimum, exc.maximum))
            continue
        except motion.ValidationError as exc:
            issues.append(BadArgument(raw.line, raw.name, "", str(exc)))
            continue
        if action.drone not in fleet:
            issues.append(UnknownDrone(raw.line, action.drone))
            continue
        drones.add(action.drone)
        statements.append(Call(action))

    # barrier placement checks run on the accepted statement sequence
    if statements:
        if isinstance(statements[0], Barrier):
            issues.append(BarrierPlacement(raw_statements[0].line, "plan starts with a barrier"))
        if isinstance(statements[-1], Barrier):
            issues.append(BarrierPlacement(raw_statements[-1].line, "plan ends with a barrier"))
        for prev, cur in zip(statements, statements[1:]):
            if isinstance(prev, Barrier) and isinstance(cur, Barrier):
                issues.append(BarrierPlacement(None, "two adjacent barriers"))
                break
    elif not issues:
        issues.append(EmptyPlan())

    if issues:
        raise PlanValidationError(issues)
    return Plan(tuple(statements), frozenset(drones))


def parse_plan(source: str, fleet_ids) -> Plan:
    """Tokenize, parse and validate in one step."""
    return validate_plan(parse(tokenize(source)), fleet_ids)


@dataclass(frozen=True)
class Schedule:
    """Executable form of a plan: per-drone FIFO queues plus barrier indices.

    ``barriers[d]`` holds, for each barrier in plan order, the index into
    ``queues[d]`` before which drone ``d`` must rendezvous with all others.
    All drones agree on the number of barriers.
    """

    queues: dict[int, tuple[DroneAction, ...]]
    barriers: dict[int, tuple[int, ...]]

    @property
    def barrier_count(self) -> int:
        return len(next(iter(self.barriers.values()), ()))

    def segments(self) -> list[dict[int, list[DroneAction]]]:
        """Split queues at barrier points: one dict of per-drone action runs
        per barrier segment."""
        nseg = self.barrier_count + 1
        out: list[dict[int, list[DroneAction]]] = [
            {d: [] for d in self.queues} for _ in range(nseg)
        ]
        for drone, queue in self.queues.items():
            cuts = list(self.barriers[drone]) + [len(queue)]
            start = 0
            for seg, cut in enumerate(cuts):
                out[seg][drone] = list(queue[start:cut])
                start = cut
        return out


def compile_plan(plan: Plan) -> Schedule:
    """Partition plan statements into per-drone queues with rendezvous points.

    Within one barrier segment different drones' actions are concurrent;
    same-drone actions keep plan order.
    """
    queues: dict[int, list[DroneAction]] = {d: [] for d in plan.referenced_drones}
    barriers: dict[int, list[int]] = {d: [] for d in plan.referenced_drones}
    for st in plan.statements:
        if isinstance(st, Barrier):
            for d in plan.referenced_drones:
                barriers[d].append(len(queues[d]))
        else:
            queues[st.action.drone].append(st.action)
    return Schedule(
        {d: tuple(q) for d, q in queues.items()},
        {d: tuple(b) for d, b in barriers.items()},
    )
