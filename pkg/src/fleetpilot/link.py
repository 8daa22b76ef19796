"""Per-drone UDP control sessions and telemetry parsing.

One socket per drone keeps reply correlation unambiguous.  Dispatch is
strictly at-most-one-in-flight per session; motion commands are never
retried (re-sending a motion command to a moving aircraft is unsafe), only
the idempotent handshake and battery query retry.
"""

from __future__ import annotations

import configparser
import enum
import socket
import threading
import time
from dataclasses import dataclass, field

from . import motion
from .motion import Ack, AckKind, ActionKind, DroneAction


DEFAULT_CONTROL_PORT = 8889
DEFAULT_TELEMETRY_PORT = 8890
DEFAULT_COMMAND_TIMEOUT = 10.0
HANDSHAKE_RETRIES = 2


class LinkError(Exception):
    pass


class HandshakeTimeout(LinkError):
    pass


class HandshakeNack(LinkError):
    pass


class NotReady(LinkError):
    pass


class DispatchTimeout(LinkError):
    pass


class Nack(LinkError):
    def __init__(self, text: str):
        self.text = text
        super().__init__(f"drone replied {text!r}")


class MalformedTelemetry(Exception):
    pass


@dataclass(frozen=True)
class FleetEntry:
    id: int
    host: str
    port: int = DEFAULT_CONTROL_PORT

    @property
    def address(self) -> tuple[str, int]:
        return (self.host, self.port)


@dataclass
class FleetConfig:
    entries: list[FleetEntry]
    telemetry_port: int = DEFAULT_TELEMETRY_PORT
    command_timeout: float = DEFAULT_COMMAND_TIMEOUT

    def __post_init__(self):
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate drone ids in fleet config")
        addrs = [e.address for e in self.entries]
        if len(set(addrs)) != len(addrs):
            raise ValueError("duplicate drone addresses in fleet config")

    @property
    def ids(self) -> frozenset[int]:
        return frozenset(e.id for e in self.entries)

    def entry(self, drone_id: int) -> FleetEntry:
        for e in self.entries:
            if e.id == drone_id:
                return e
        raise KeyError(drone_id)

    @classmethod
    def load(cls, path: str) -> "FleetConfig":
        """Read the INI-style fleet file: one ``[drone N]`` section per drone
        with an ``address`` (host or host:port), plus an optional ``[fleet]``
        section for telemetry_port and command_timeout."""
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise FileNotFoundError(path)
        entries = []
        telemetry_port = DEFAULT_TELEMETRY_PORT
        command_timeout = DEFAULT_COMMAND_TIMEOUT
        for section in parser.sections():
            if section == "fleet":
                telemetry_port = parser.getint(section, "telemetry_port", fallback=telemetry_port)
                command_timeout = parser.getfloat(
                    section, "command_timeout", fallback=command_timeout
                )
                continue
            if not section.startswith("drone"):
                raise ValueError(f"unexpected section [{section}] in {path}")
            drone_id = parser.getint(section, "id", fallback=None)
            if drone_id is None:
                drone_id = int(section.split()[1])
            address = parser.get(section, "address")
            if ":" in address:
                host, port_text = address.rsplit(":", 1)
                port = int(port_text)
            else:
                host, port = address, DEFAULT_CONTROL_PORT
            entries.append(FleetEntry(drone_id, host, port))
        return cls(entries, telemetry_port=telemetry_port, command_timeout=command_timeout)


class SessionStatus(enum.Enum):
    DISCONNECTED = "disconnected"
    READY = "ready"
    BUSY = "busy"


class DroneSession:
    """Control-link state for one drone; owns its UDP socket."""

    def __init__(self, drone_id: int, address: tuple[str, int], sock: socket.socket,
                 timeout: float = DEFAULT_COMMAND_TIMEOUT):
        self.id = drone_id
        self.address = address
        self.timeout = timeout
        self.status = SessionStatus.DISCONNECTED
        self.last_ack: Ack | None = None
        self.commands_sent = 0
        self._sock = sock
        self._lock = threading.Lock()

    def close(self) -> None:
        self.status = SessionStatus.DISCONNECTED
        self._sock.close()

    # -- low-level send/await, caller holds the lock --------------------

    def _await_reply(self, deadline: float) -> bytes:
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise socket.timeout()
            self._sock.settimeout(remaining)
            data, addr = self._sock.recvfrom(2048)
            # a reply from any other address never resolves this command
            if addr[1] == self.address[1] and addr[0] in (self.address[0], "127.0.0.1"):
                return data

    def _exchange(self, line: str) -> Ack:
        start = time.monotonic()
        try:
            self._sock.sendto(line.encode("ascii"), self.address)
            data = self._await_reply(start + self.timeout)
        except socket.timeout:
            raise
        except OSError:
            # the session was closed out from under us (shutdown race);
            # indistinguishable from a dead link, so treat it as one
            raise socket.timeout() from None
        ack = motion.decode_response(data)
        return Ack(ack.kind, ack.text, ack.value, latency=time.monotonic() - start)


def connect(entry: FleetEntry, timeout: float = DEFAULT_COMMAND_TIMEOUT,
            retries: int = HANDSHAKE_RETRIES) -> DroneSession:
    """Open a control session: send the SDK-mode entry command, await "ok".

    The handshake is idempotent, so it retries up to ``retries`` times on
    timeout.  An explicit error reply is surfaced immediately as
    :class:`HandshakeNack`.
    """
    sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    sock.bind(("0.0.0.0", 0))
    session = DroneSession(entry.id, entry.address, sock, timeout=timeout)
    try:
        for attempt in range(retries + 1):
            try:
                ack = session._exchange(motion.SESSION_ENTRY_COMMAND)
            except socket.timeout:
                continue
            if ack.kind is AckKind.OK:
                session.status = SessionStatus.READY
                session.last_ack = ack
                return session
            raise HandshakeNack(ack.text)
        raise HandshakeTimeout(f"no handshake reply from {entry.address} "
                               f"after {retries + 1} attempts")
    except LinkError:
        sock.close()
        raise


def dispatch(session: DroneSession, action: DroneAction) -> Ack:
    """Send one motion command and await its ack.

    Rejected with :class:`NotReady` if another command is in flight.  A
    timeout disconnects the session and is never retried.  An error reply
    raises :class:`Nack` (the session stays usable).
    """
    if action.kind is ActionKind.HOVER:
        raise ValueError("hover is executor-local and has no wire form")
    if not session._lock.acquire(blocking=False):
        raise NotReady(f"drone {session.id}: command already in flight")
    try:
        if session.status is not SessionStatus.READY:
            raise NotReady(f"drone {session.id}: session {session.status.value}")
        line = motion.encode_action(motion.validate_action(action))
        session.status = SessionStatus.BUSY
        session.commands_sent += 1
        try:
            ack = session._exchange(line)
        except socket.timeout:
            session.status = SessionStatus.DISCONNECTED
            raise DispatchTimeout(
                f"drone {session.id}: no reply to {line!r} within {session.timeout}s"
            ) from None
        session.last_ack = ack
        session.status = SessionStatus.READY
        if ack.kind is AckKind.ERROR:
            raise Nack(ack.text)
        return ack
    finally:
        session._lock.release()


def query_battery(session: DroneSession, retries: int = 2) -> int:
    """Read-only battery query; idempotent, so it may retry on timeout."""
    if not session._lock.acquire(blocking=False):
        raise NotReady(f"drone {session.id}: command already in flight")
    try:
        if session.status is not SessionStatus.READY:
            raise NotReady(f"drone {session.id}: session {session.status.value}")
        session.status = SessionStatus.BUSY
        try:
            for attempt in range(retries + 1):
                try:
                    ack = session._exchange(motion.BATTERY_QUERY)
                except socket.timeout:
                    continue
                session.last_ack = ack
                if ack.kind is AckKind.VALUE:
                    return int(ack.value)
                raise Nack(ack.text)
            session.status = SessionStatus.DISCONNECTED
            raise DispatchTimeout(f"drone {session.id}: battery query timed out")
        finally:
            if session.status is SessionStatus.BUSY:
                session.status = SessionStatus.READY
    finally:
        session._lock.release()


@dataclass(frozen=True)
class StateReport:
    """One parsed telemetry datagram."""

    source: tuple[str, int] | None
    pitch: int | None = None
    roll: int | None = None
    yaw: int | None = None
    height: int | None = None
    battery: int | None = None
    extras: dict = field(default_factory=dict)
    received_at: float = 0.0


_KNOWN_KEYS = {"pitch": "pitch", "roll": "roll", "yaw": "yaw", "h": "height", "bat": "battery"}


def parse_state(datagram: bytes, source: tuple[str, int] | None = None) -> StateReport:
    """Parse a ``key:value;`` telemetry datagram.

    Known keys are typed as integers; unknown keys pass through as text.
    Raises :class:`MalformedTelemetry` when no pair parses at all.
    """
    text = datagram.decode("ascii", errors="replace").strip()
    fields: dict[str, int] = {}
    extras: dict[str, str] = {}
    found = False
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk or ":" not in chunk:
            continue
        key, value = chunk.split(":", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            continue
        found = True
        target = _KNOWN_KEYS.get(key)
        if target is not None:
            try:
                number = int(value)
            except ValueError:
                extras[key] = value
                continue
            if target == "battery" and not 0 <= number <= 100:
                extras[key] = value
                continue
            fields[target] = number
        else:
            extras[key] = value
    if not found:
        raise MalformedTelemetry(f"no key:value pair in {text!r}")
    return StateReport(source=source, extras=extras, received_at=time.time(), **fields)


class TelemetryListener:
    """Best-effort shared telemetry receiver, demultiplexed by source address.

    Missing or malformed telemetry never blocks anything; only the latest
    report per source is kept.
    """

    def __init__(self, host: str = "0.0.0.0", port: int = DEFAULT_TELEMETRY_PORT):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind((host, port))
        self.port = self._sock.getsockname()[1]
        self._latest: dict[tuple[str, int], StateReport] = {}
        self._lock = threading.Lock()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._running = True

    def start(self) -> "TelemetryListener":
        self._thread.start()
        return self

    def _run(self) -> None:
        try:
            self._sock.settimeout(0.1)
        except OSError:  # stopped before the thread got scheduled
            return
        while self._running:
            try:
                data, addr = self._sock.recvfrom(4096)
            except socket.timeout:
                continue
            except OSError:
                break
            try:
                report = parse_state(data, source=addr)
            except MalformedTelemetry:
                continue
            with self._lock:
                self._latest[addr] = report

    def latest(self, source: tuple[str, int]) -> StateReport | None:
        with self._lock:
            return self._latest.get(source)

    def snapshot(self) -> dict[tuple[str, int], StateReport]:
        with self._lock:
            return dict(self._latest)

    def stop(self) -> None:
        self._running = False
        self._sock.close()
        if self._thread.is_alive():
            self._thread.join(timeout=1.0)
