"""Concurrent schedule execution: per-drone dispatchers, barriers, abort.

One dispatcher thread per drone advances that drone's queue; a shared
reusable barrier realizes rendezvous points.  Any nack or timeout aborts the
whole plan and best-effort lands every drone believed airborne.
"""

from __future__ import annotations

import enum
import queue
import threading
import time
from dataclasses import dataclass, field

from . import link
from .dsl import Schedule
from .motion import ActionKind, DroneAction


class EventKind(enum.Enum):
    PLAN_STARTED = "plan_started"
    DISPATCHED = "dispatched"
    ACKED = "acked"
    BARRIER_REACHED = "barrier_reached"
    BARRIER_RELEASED = "barrier_released"
    HOVER_STARTED = "hover_started"
    FAILED = "failed"
    ABORT_ISSUED = "abort_issued"
    PLAN_COMPLETED = "plan_completed"


@dataclass(frozen=True)
class ExecutionEvent:
    kind: EventKind
    timestamp: float
    drone: int | None = None
    action: DroneAction | None = None
    detail: str = ""


@dataclass(frozen=True)
class Outcome:
    completed: bool
    reason: str = ""

    def __str__(self) -> str:
        return "completed" if self.completed else f"aborted: {self.reason}"


@dataclass
class ExecutionReport:
    events: list[ExecutionEvent]
    outcome: Outcome
    ack_counts: dict[int, int]
    cancelled: int


@dataclass(frozen=True)
class ExecutionPolicy:
    # wall-clock multiplier for hover waits, so scaled-time tests stay fast
    hover_scale: float = 1.0


class _EventSink:
    """Single ordered event stream with strictly increasing timestamps."""

    def __init__(self, listener=None):
        self._lock = threading.Lock()
        self._last_ts = 0.0
        self.events: list[ExecutionEvent] = []
        self._subscribers: list[queue.Queue] = []
        self._listener = listener

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._lock:
            self._subscribers.append(q)
        return q

    def emit(self, kind: EventKind, drone: int | None = None,
             action: DroneAction | None = None, detail: str = "") -> ExecutionEvent:
        with self._lock:
            ts = time.perf_counter()
            if ts <= self._last_ts:
                ts = self._last_ts + 1e-9
            self._last_ts = ts
            event = ExecutionEvent(kind, ts, drone, action, detail)
            self.events.append(event)
            subscribers = list(self._subscribers)
            listener = self._listener
        for q in subscribers:
            q.put(event)
        if listener is not None:
            listener(event)
        return event


class Execution:
    """A running plan; create, ``start()``, then ``join()`` for the report."""

    def __init__(self, schedule: Schedule, sessions: dict[int, link.DroneSession],
                 policy: ExecutionPolicy | None = None, listener=None):
        self.schedule = schedule
        self.sessions = sessions
        self.policy = policy or ExecutionPolicy()
        self._sink = _EventSink(listener)
        self._segments = schedule.segments()
        drones = sorted(schedule.queues)
        missing = [d for d in drones if d not in sessions]
        if missing:
            raise ValueError(f"no session for drones {missing}")
        self._drones = drones
        self._barrier = (
            threading.Barrier(len(drones), action=self._on_barrier_release)
            if schedule.barrier_count
            else None
        )
        self._abort_event = threading.Event()
        self._abort_reason: str | None = None
        self._abort_lock = threading.Lock()
        self._airborne: set[int] = set()
        self._airborne_lock = threading.Lock()
        self._dispatched = 0
        self._count_lock = threading.Lock()
        self._threads: list[threading.Thread] = []
        self._report: ExecutionReport | None = None
        self._done = threading.Event()

    # -- public surface --------------------------------------------------

    def subscribe(self) -> queue.Queue:
        return self._sink.subscribe()

    @property
    def events(self) -> list[ExecutionEvent]:
        return list(self._sink.events)

    def start(self) -> "Execution":
        self._sink.emit(EventKind.PLAN_STARTED,
                        detail=f"{sum(len(q) for q in self.schedule.queues.values())} actions, "
                               f"{self.schedule.barrier_count} barriers")
        for drone in self._drones:
            t = threading.Thread(target=self._worker, args=(drone,),
                                 daemon=True, name=f"dispatch-{drone}")
            self._threads.append(t)
            t.start()
        return self

    def abort(self, reason: str) -> None:
        self._trigger_abort(reason)

    def join(self, timeout: float | None = None) -> ExecutionReport:
        for t in self._threads:
            t.join(timeout)
        if self._report is None:
            self._report = self._finalize()
            self._done.set()
        return self._report

    def run(self) -> ExecutionReport:
        return self.start().join()

    # -- internals --------------------------------------------------------

    def _on_barrier_release(self) -> None:
        self._sink.emit(EventKind.BARRIER_RELEASED)

    def _trigger_abort(self, reason: str) -> None:
        with self._abort_lock:
            if self._abort_reason is None:
                self._abort_reason = reason
        self._abort_event.set()
        if self._barrier is not None:
            self._barrier.abort()

    def _note_airborne(self, drone: int, action: DroneAction) -> None:
        with self._airborne_lock:
            if action.kind is ActionKind.TAKEOFF:
                self._airborne.add(drone)
            elif action.kind is ActionKind.LAND:
                self._airborne.discard(drone)

    def _worker(self, drone: int) -> None:
        session = self.sessions[drone]
        last_segment = len(self._segments) - 1
        for seg_index, segment in enumerate(self._segments):
            for action in segment[drone]:
                if self._abort_event.is_set():
                    return
                if action.kind is ActionKind.HOVER:
                    self._sink.emit(EventKind.DISPATCHED, drone, action, detail="local hover")
                    with self._count_lock:
                        self._dispatched += 1
                    self._sink.emit(EventKind.HOVER_STARTED, drone, action,
                                    detail=f"{action.seconds:g} s")
                    interrupted = self._abort_event.wait(
                        action.seconds * self.policy.hover_scale
                    )
                    if interrupted:
                        return
                    self._sink.emit(EventKind.ACKED, drone, action, detail="hover complete")
                    continue
                self._sink.emit(EventKind.DISPATCHED, drone, action)
                with self._count_lock:
                    self._dispatched += 1
                try:
                    ack = link.dispatch(session, action)
                except link.LinkError as exc:
                    self._sink.emit(EventKind.FAILED, drone, action, detail=str(exc))
                    self._trigger_abort(f"drone {drone}: {exc}")
                    return
                self._note_airborne(drone, action)
                self._sink.emit(EventKind.ACKED, drone, action,
                                detail=f"{ack.text} ({ack.latency * 1000:.1f} ms)")
            if seg_index < last_segment:
                self._sink.emit(EventKind.BARRIER_REACHED, drone,
                                detail=f"barrier {seg_index + 1}")
                try:
                    self._barrier.wait()
                except threading.BrokenBarrierError:
                    return

    def _finalize(self) -> ExecutionReport:
        total = sum(len(q) for q in self.schedule.queues.values())
        aborted = self._abort_event.is_set()
        if aborted:
            self._safe_land_all()
            outcome = Outcome(False, self._abort_reason or "aborted")
        else:
            outcome = Outcome(True)
            self._sink.emit(EventKind.PLAN_COMPLETED)
        ack_counts: dict[int, int] = {d: 0 for d in self._drones}
        for event in self._sink.events:
            if event.kind is EventKind.ACKED and event.drone is not None:
                ack_counts[event.drone] = ack_counts.get(event.drone, 0) + 1
        return ExecutionReport(
            events=self.events,
            outcome=outcome,
            ack_counts=ack_counts,
            cancelled=total - self._dispatched,
        )

    def _safe_land_all(self) -> None:
        """Best-effort: one land per drone believed airborne; never retried."""
        with self._airborne_lock:
            airborne = sorted(self._airborne)
        for drone in airborne:
            land = DroneAction.land(drone)
            self._sink.emit(EventKind.ABORT_ISSUED, drone, land, detail="landing for safety")
            self._sink.emit(EventKind.DISPATCHED, drone, land, detail="abort land")
            try:
                link.dispatch(self.sessions[drone], land)
            except link.LinkError as exc:
                self._sink.emit(EventKind.FAILED, drone, land, detail=f"abort land: {exc}")
                continue
            self._sink.emit(EventKind.ACKED, drone, land, detail="abort land")


def execute(schedule: Schedule, sessions: dict[int, link.DroneSession],
            policy: ExecutionPolicy | None = None, listener=None) -> ExecutionReport:
    """Run a schedule to completion and return the full report."""
    return Execution(schedule, sessions, policy, listener).run()
