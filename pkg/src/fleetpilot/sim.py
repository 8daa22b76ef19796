"""Protocol-faithful virtual drone fleet over loopback UDP.

Each simulated drone binds its own control socket, parses the same wire
command set the link layer emits, advances a simple kinematic model over
scaled maneuver durations, replies "ok"/"error", and broadcasts telemetry.
A fault script can suppress or corrupt specific replies to exercise the
timeout and abort paths.
"""

from __future__ import annotations

import json
import math
import socket
import threading
from dataclasses import dataclass, field, replace

from .motion import (
    BATTERY_QUERY,
    FLIP_LETTER_TO_DIRECTION,
    FLY_DIRECTIONS,
    ROTATE_DIRECTIONS,
    SESSION_ENTRY_COMMAND,
    DroneAction,
)


TAKEOFF_ALTITUDE_CM = 100
TAKEOFF_SECONDS = 2.0
LAND_SECONDS = 2.0
FLIP_SECONDS = 1.0
LINEAR_SPEED_CM_S = 50.0
ANGULAR_SPEED_DEG_S = 90.0
BATTERY_SECONDS_PER_PERCENT = 10.0
TELEMETRY_INTERVAL_S = 0.1


class BindFailure(Exception):
    def __init__(self, address: tuple[str, int]):
        self.address = address
        super().__init__(f"cannot bind {address[0]}:{address[1]}")


@dataclass(frozen=True)
class SimDroneState:
    """Ground-truth state of one simulated drone.

    Position is tracked in exact floating-point centimeters internally and
    reported as integer centimeters; world frame is x right, y forward,
    z up, origin at the start point.  Heading 0 faces +y, clockwise
    positive, always normalized to [0, 360).
    """

    fx: float = 0.0
    fy: float = 0.0
    fz: float = 0.0
    heading: int = 0
    airborne: bool = False
    flight_seconds: float = 0.0

    @property
    def x(self) -> int:
        return round(self.fx)

    @property
    def y(self) -> int:
        return round(self.fy)

    @property
    def z(self) -> int:
        return round(self.fz)

    @property
    def position(self) -> tuple[int, int, int]:
        return (self.x, self.y, self.z)

    @property
    def battery(self) -> int:
        return max(0, 100 - int(self.flight_seconds // BATTERY_SECONDS_PER_PERCENT))


def _body_to_world(bx: float, by: float, heading_deg: float) -> tuple[float, float]:
    """Rotate a body-frame (x right, y forward) vector into the world frame
    for a clockwise-positive heading measured from +y."""
    h = math.radians(heading_deg)
    return (bx * math.cos(h) + by * math.sin(h), -bx * math.sin(h) + by * math.cos(h))


def _parse_line(command: str) -> tuple | None:
    """Split a wire line into a command tuple, or None when unparseable."""
    parts = command.strip().split()
    if not parts:
        return None
    head = parts[0]
    if head == SESSION_ENTRY_COMMAND and len(parts) == 1:
        return ("command",)
    if head == BATTERY_QUERY and len(parts) == 1:
        return ("battery?",)
    if head in ("takeoff", "land") and len(parts) == 1:
        return (head,)
    if head in FLY_DIRECTIONS and len(parts) == 2:
        try:
            return ("move", head, int(parts[1]))
        except ValueError:
            return None
    if head in ROTATE_DIRECTIONS and len(parts) == 2:
        try:
            return ("rotate", head, int(parts[1]))
        except ValueError:
            return None
    if head == "flip" and len(parts) == 2 and parts[1] in FLIP_LETTER_TO_DIRECTION:
        return ("flip", FLIP_LETTER_TO_DIRECTION[parts[1]])
    return None


def wire_to_action(command: str, drone_id: int) -> DroneAction:
    """Reconstruct the motion action a wire line encodes (round-trip check)."""
    parsed = _parse_line(command)
    if parsed is None:
        raise ValueError(f"unparseable wire command {command!r}")
    head = parsed[0]
    if head == "takeoff":
        return DroneAction.takeoff(drone_id)
    if head == "land":
        return DroneAction.land(drone_id)
    if head == "move":
        return DroneAction.fly(drone_id, parsed[1], parsed[2])
    if head == "rotate":
        return DroneAction.rotate(drone_id, parsed[1], parsed[2])
    if head == "flip":
        return DroneAction.flip(drone_id, parsed[1])
    raise ValueError(f"{command!r} is not a motion command")


def apply_command(state: SimDroneState, command: str) -> tuple[SimDroneState, str, float]:
    """Advance one drone state by one wire command.

    Returns (new state, reply text, maneuver duration in unscaled seconds).
    Every input yields a reply; unparseable or not-airborne motion commands
    reply "error" and leave the state unchanged.
    """
    parsed = _parse_line(command)
    if parsed is None:
        return (state, "error", 0.0)
    head = parsed[0]

    if head == "command":
        return (state, "ok", 0.0)
    if head == "battery?":
        return (state, str(state.battery), 0.0)

    if head == "takeoff":
        if state.airborne:
            return (state, "ok", 0.0)
        new = replace(state, airborne=True, fz=float(TAKEOFF_ALTITUDE_CM),
                      flight_seconds=state.flight_seconds + TAKEOFF_SECONDS)
        return (new, "ok", TAKEOFF_SECONDS)
    if head == "land":
        if not state.airborne:
            return (state, "ok", 0.0)
        new = replace(state, airborne=False, fz=0.0,
                      flight_seconds=state.flight_seconds + LAND_SECONDS)
        return (new, "ok", LAND_SECONDS)

    # everything below is a motion command requiring flight
    if not state.airborne:
        return (state, "error", 0.0)

    if head == "move":
        direction, d = parsed[1], parsed[2]
        duration = d / LINEAR_SPEED_CM_S
        if direction == "up":
            new = replace(state, fz=state.fz + d)
        elif direction == "down":
            new = replace(state, fz=state.fz - d)
        else:
            body = {
                "left": (-d, 0.0),
                "right": (d, 0.0),
                "forward": (0.0, d),
                "back": (0.0, -d),
            }[direction]
            wx, wy = _body_to_world(body[0], body[1], state.heading)
            new = replace(state, fx=state.fx + wx, fy=state.fy + wy)
        new = replace(new, flight_seconds=new.flight_seconds + duration)
        return (new, "ok", duration)

    if head == "rotate":
        direction, g = parsed[1], parsed[2]
        duration = g / ANGULAR_SPEED_DEG_S
        delta = g if direction == "cw" else -g
        new = replace(state, heading=(state.heading + delta) % 360,
                      flight_seconds=state.flight_seconds + duration)
        return (new, "ok", duration)

    # flip: position unchanged
    new = replace(state, flight_seconds=state.flight_seconds + FLIP_SECONDS)
    return (new, "ok", FLIP_SECONDS)


@dataclass(frozen=True)
class Fault:
    drone: int
    ordinal: int  # 1-based index of the received command datagram
    kind: str  # drop_reply | reply_error

    @staticmethod
    def load_script(path: str) -> tuple["Fault", ...]:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return tuple(Fault(int(f["drone"]), int(f["ordinal"]), f["kind"]) for f in raw)


@dataclass(frozen=True)
class SimDroneSpec:
    id: int
    host: str = "127.0.0.1"
    port: int = 0  # 0 = ephemeral


@dataclass
class SimConfig:
    drones: list[SimDroneSpec]
    time_scale: float = 1.0
    telemetry_addr: tuple[str, int] | None = None
    telemetry_interval: float = TELEMETRY_INTERVAL_S
    faults: tuple[Fault, ...] = ()

    def __post_init__(self):
        if self.time_scale <= 0:
            raise ValueError("time_scale must be positive")


class _SimDrone:
    def __init__(self, spec: SimDroneSpec, config: SimConfig, stop: threading.Event):
        self.spec = spec
        self.config = config
        self._stop = stop
        self._state = SimDroneState()
        self._state_lock = threading.Lock()
        self._received = 0
        try:
            self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            self.sock.bind((spec.host, spec.port))
        except OSError as exc:
            raise BindFailure((spec.host, spec.port)) from exc
        self.address: tuple[str, int] = self.sock.getsockname()
        self.thread = threading.Thread(target=self._run, daemon=True,
                                       name=f"sim-drone-{spec.id}")

    @property
    def state(self) -> SimDroneState:
        with self._state_lock:
            return self._state

    def _fault_for(self, ordinal: int) -> Fault | None:
        for fault in self.config.faults:
            if fault.drone == self.spec.id and fault.ordinal == ordinal:
                return fault
        return None

    def _run(self) -> None:
        # short receive timeout so the loop notices the stop flag promptly
        self.sock.settimeout(0.1)
        while not self._stop.is_set():
            try:
                data, sender = self.sock.recvfrom(2048)
            except socket.timeout:
                continue
            except OSError:
                break
            self._received += 1
            fault = self._fault_for(self._received)
            command = data.decode("ascii", errors="replace")

            if fault is not None and fault.kind == "reply_error":
                self.sock.sendto(b"error", sender)
                continue

            new_state, reply, duration = apply_command(self.state, command)
            if duration > 0:
                # one command at a time, like the real device
                self._stop.wait(duration * self.config.time_scale)
            with self._state_lock:
                self._state = new_state
            if fault is not None and fault.kind == "drop_reply":
                continue
            try:
                self.sock.sendto(reply.encode("ascii"), sender)
            except OSError:
                break

    def emit_telemetry(self) -> None:
        if self.config.telemetry_addr is None:
            return
        s = self.state
        line = f"pitch:0;roll:0;yaw:{s.heading};h:{s.z};bat:{s.battery};"
        try:
            self.sock.sendto(line.encode("ascii"), self.config.telemetry_addr)
        except OSError:
            pass

    def close(self) -> None:
        self.sock.close()


class SimFleet:
    """Handle over a running set of simulated drones."""

    def __init__(self, config: SimConfig):
        self.config = config
        self._stop = threading.Event()
        self._drones: dict[int, _SimDrone] = {}
        self._telemetry_thread = threading.Thread(
            target=self._telemetry_loop, daemon=True, name="sim-telemetry"
        )
        try:
            for spec in config.drones:
                self._drones[spec.id] = _SimDrone(spec, config, self._stop)
        except BindFailure:
            self.stop()
            raise

    def start(self) -> "SimFleet":
        for drone in self._drones.values():
            drone.thread.start()
        self._telemetry_thread.start()
        return self

    def _telemetry_loop(self) -> None:
        interval = max(0.01, self.config.telemetry_interval * self.config.time_scale)
        while not self._stop.wait(interval):
            for drone in self._drones.values():
                drone.emit_telemetry()

    def address(self, drone_id: int) -> tuple[str, int]:
        return self._drones[drone_id].address

    def state(self, drone_id: int) -> SimDroneState:
        return self._drones[drone_id].state

    def states(self) -> dict[int, SimDroneState]:
        return {did: d.state for did, d in self._drones.items()}

    def stop(self) -> None:
        self._stop.set()
        for drone in self._drones.values():
            drone.close()
        for drone in self._drones.values():
            if drone.thread.is_alive():
                drone.thread.join(timeout=1.0)
        if self._telemetry_thread.is_alive():
            self._telemetry_thread.join(timeout=1.0)

    def __enter__(self) -> "SimFleet":
        return self

    def __exit__(self, *exc) -> None:
        self.stop()


def spawn_fleet(config: SimConfig) -> SimFleet:
    """Bind and start every simulated drone; raises BindFailure if any
    address is taken."""
    return SimFleet(config).start()
