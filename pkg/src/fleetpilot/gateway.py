"""Operator-facing gateway: sessions, plan -> approve -> execute workflow,
transcript persistence, fleet status, and the HTTP/WebSocket API.

Human approval is mandatory between planning and flight.  Sessions share
one fleet; execution is globally exclusive (one plan flying at a time).
"""

from __future__ import annotations

import json
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from . import dsl, executor, link, llm, prompts
from .executor import Execution, ExecutionEvent, ExecutionPolicy
from .link import DroneSession, FleetConfig, SessionStatus, StateReport, TelemetryListener
from .prompts import ChatMessage


class GatewayError(Exception):
    pass


class UnknownSession(GatewayError):
    pass


class BusySession(GatewayError):
    pass


class FleetBusy(GatewayError):
    pass


class NoPendingPlan(GatewayError):
    pass


class FleetNotReady(GatewayError):
    def __init__(self, offline: list[int]):
        self.offline = offline
        super().__init__(f"drones not ready: {offline}")


@dataclass
class Session:
    id: str
    history: list[ChatMessage] = field(default_factory=list)
    pending_plan: dsl.Plan | None = None
    execution: Execution | None = None
    created_at: float = field(default_factory=time.time)
    subscribers: list[queue.Queue] = field(default_factory=list)
    last_outcome: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class Transcript:
    """Append-only line-delimited records, one file per day."""

    def __init__(self, directory: str | Path | None):
        self.directory = Path(directory) if directory else None
        if self.directory:
            self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.records: list[dict] = []

    def append(self, session_id: str, kind: str, payload: str) -> dict:
        record = {
            "timestamp": time.time(),
            "session": session_id,
            "kind": kind,
            "payload": payload,
        }
        with self._lock:
            self.records.append(record)
            if self.directory:
                path = self.directory / f"transcript-{date.today().isoformat()}.jsonl"
                with open(path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record) + "\n")
        return record


@dataclass(frozen=True)
class PlanPreview:
    plan_text: str
    actions: list[dict]
    repairs_used: int


@dataclass(frozen=True)
class DroneStatus:
    id: int
    status: str
    report: StateReport | None


def _event_payload(event: ExecutionEvent) -> dict:
    return {
        "kind": event.kind.value,
        "drone": event.drone,
        "action": event.action.describe() if event.action else None,
        "timestamp": event.timestamp,
        "detail": event.detail,
    }


class Gateway:
    """Owns the fleet sessions, the planner backend, and all operator state."""

    def __init__(self, fleet_config: FleetConfig, backend,
                 transcript_dir: str | Path | None = None,
                 persona: dict | None = None,
                 model: str = "planner",
                 max_repairs: int = 1,
                 hover_scale: float = 1.0,
                 llm_backoff: tuple[float, ...] = llm.RETRY_BACKOFF):
        self.fleet_config = fleet_config
        self.backend = backend
        self.persona = persona
        self.model = model
        self.max_repairs = max_repairs
        self.policy = ExecutionPolicy(hover_scale=hover_scale)
        self.llm_backoff = llm_backoff
        self.transcript = Transcript(transcript_dir)
        self.sessions: dict[str, Session] = {}
        self.drone_sessions: dict[int, DroneSession] = {}
        self.telemetry: TelemetryListener | None = None
        self._lock = threading.Lock()
        self._flight_lock = threading.Lock()

    # -- fleet lifecycle --------------------------------------------------

    def connect_fleet(self) -> None:
        for entry in self.fleet_config.entries:
            self.drone_sessions[entry.id] = link.connect(
                entry, timeout=self.fleet_config.command_timeout
            )
        self.telemetry = TelemetryListener(port=self.fleet_config.telemetry_port).start()

    def shutdown(self) -> None:
        for session in self.drone_sessions.values():
            session.close()
        if self.telemetry:
            self.telemetry.stop()

    # -- session workflow ---------------------------------------------------

    def create_session(self) -> Session:
        session = Session(id=uuid.uuid4().hex)
        with self._lock:
            self.sessions[session.id] = session
        return session

    def _get(self, session_id: str) -> Session:
        with self._lock:
            try:
                return self.sessions[session_id]
            except KeyError:
                raise UnknownSession(session_id) from None

    def submit_task(self, session_id: str, task_text: str) -> PlanPreview:
        """Plan a task; on success the plan is held pending approval."""
        session = self._get(session_id)
        with session.lock:
            if session.execution is not None:
                raise BusySession("a plan is executing for this session")
            self.transcript.append(session.id, "task", task_text)
            bundle = prompts.make_bundle(task_text, persona=self.persona,
                                         history=session.history)
            try:
                result = llm.plan_with_repair(
                    bundle, self.fleet_config.ids, self.backend,
                    max_repairs=self.max_repairs, model=self.model,
                    backoff=self.llm_backoff,
                )
            except llm.PlanningFailure as exc:
                for reply in exc.replies:
                    self.transcript.append(session.id, "llm_reply", reply)
                self.transcript.append(session.id, "validation_errors",
                                       "\n".join(exc.details))
                raise
            for reply in result.replies:
                self.transcript.append(session.id, "llm_reply", reply)
            plan_text = result.plan.to_text()
            self.transcript.append(session.id, "plan", plan_text)
            session.pending_plan = result.plan
            session.history.append(ChatMessage("user", task_text))
            session.history.append(ChatMessage("assistant", result.replies[-1]))
            actions = [
                {"drone": st.action.drone, "description": st.action.describe()}
                if isinstance(st, dsl.Call)
                else {"drone": None, "description": "all drones synchronize"}
                for st in result.plan.statements
            ]
            return PlanPreview(plan_text, actions, result.repairs_used)

    def approve_and_execute(self, session_id: str) -> Execution:
        """Compile and fly the pending plan; events stream to subscribers."""
        session = self._get(session_id)
        with session.lock:
            if session.pending_plan is None:
                raise NoPendingPlan("nothing to approve")
            plan = session.pending_plan
            offline = [
                d for d in sorted(plan.referenced_drones)
                if self.drone_sessions.get(d) is None
                or self.drone_sessions[d].status is not SessionStatus.READY
            ]
            if offline:
                raise FleetNotReady(offline)
            if not self._flight_lock.acquire(blocking=False):
                raise FleetBusy("another plan is already flying")
            session.pending_plan = None
            schedule = dsl.compile_plan(plan)

            def listener(event: ExecutionEvent) -> None:
                payload = _event_payload(event)
                self.transcript.append(session.id, "event", json.dumps(payload))
                # plain list copy: may run on the thread already holding
                # session.lock during start(), so no lock here
                for q in list(session.subscribers):
                    q.put(payload)

            execution = Execution(schedule, self.drone_sessions,
                                  policy=self.policy, listener=listener)
            session.execution = execution
            session.last_outcome = None
            execution.start()

        def reap() -> None:
            try:
                report = execution.join()
                self.transcript.append(session.id, "outcome", str(report.outcome))
                if not report.outcome.completed:
                    # successful runs end with plan_completed from the
                    # executor; aborted runs need a terminal frame too so
                    # subscribers know the flight is over
                    payload = {"kind": "plan_aborted", "drone": None,
                               "action": None, "timestamp": time.perf_counter(),
                               "detail": report.outcome.reason}
                    for q in list(session.subscribers):
                        q.put(payload)
                with session.lock:
                    session.last_outcome = str(report.outcome)
            finally:
                with session.lock:
                    session.execution = None
                self._flight_lock.release()

        threading.Thread(target=reap, daemon=True, name="execution-reaper").start()
        return execution

    def reject_plan(self, session_id: str, feedback: str | None = None) -> None:
        session = self._get(session_id)
        with session.lock:
            if session.pending_plan is None:
                raise NoPendingPlan("nothing to reject")
            session.pending_plan = None
            self.transcript.append(session.id, "outcome", "plan rejected")
            if feedback:
                session.history.append(ChatMessage("user", feedback))

    def abort(self, session_id: str, reason: str = "operator abort") -> None:
        session = self._get(session_id)
        with session.lock:
            execution = session.execution
        if execution is None:
            raise GatewayError("no execution in progress")
        execution.abort(reason)

    def subscribe(self, session_id: str) -> queue.Queue:
        session = self._get(session_id)
        q: queue.Queue = queue.Queue()
        with session.lock:
            session.subscribers.append(q)
        return q

    def unsubscribe(self, session_id: str, q: queue.Queue) -> None:
        session = self._get(session_id)
        with session.lock:
            if q in session.subscribers:
                session.subscribers.remove(q)

    # -- fleet status -------------------------------------------------------

    def fleet_status(self) -> list[DroneStatus]:
        """Non-blocking snapshot: link status plus latest telemetry if any."""
        out = []
        for entry in self.fleet_config.entries:
            session = self.drone_sessions.get(entry.id)
            status = session.status.value if session else "disconnected"
            report = None
            if self.telemetry is not None:
                report = self.telemetry.latest(entry.address)
            out.append(DroneStatus(entry.id, status, report))
        return out


# ---------------------------------------------------------------------------
# HTTP / WebSocket surface

# these live at module level so FastAPI can resolve the endpoint annotations,
# which PEP 563 turns into strings evaluated against module globals
from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from fastapi.concurrency import run_in_threadpool
from pydantic import BaseModel


class TaskBody(BaseModel):
    text: str


class RejectBody(BaseModel):
    feedback: str | None = None


def create_app(gateway: Gateway, frontend_dir: str | Path | None = None):
    """Build the FastAPI app exposing the documented operator API."""
    app = FastAPI(title="fleetpilot gateway")

    def _status_payload() -> dict:
        drones = []
        for st in gateway.fleet_status():
            entry = {"id": st.id, "status": st.status}
            if st.report is not None:
                entry.update(
                    battery=st.report.battery,
                    height=st.report.height,
                    yaw=st.report.yaw,
                    age=time.time() - st.report.received_at,
                )
            drones.append(entry)
        return {"drones": drones}

    @app.post("/sessions")
    def create_session():
        return {"session_id": gateway.create_session().id}

    @app.post("/sessions/{session_id}/task")
    def submit_task(session_id: str, body: TaskBody):
        try:
            preview = gateway.submit_task(session_id, body.text)
        except UnknownSession:
            raise HTTPException(404, "unknown session")
        except BusySession as exc:
            raise HTTPException(409, str(exc))
        except llm.PlanningFailure as exc:
            return {"errors": exc.details, "stage": exc.stage}
        return {
            "plan_text": preview.plan_text,
            "actions": preview.actions,
            "repairs_used": preview.repairs_used,
        }

    @app.post("/sessions/{session_id}/approve")
    def approve(session_id: str):
        try:
            execution = gateway.approve_and_execute(session_id)
        except UnknownSession:
            raise HTTPException(404, "unknown session")
        except NoPendingPlan as exc:
            raise HTTPException(409, str(exc))
        except FleetNotReady as exc:
            raise HTTPException(409, str(exc))
        except FleetBusy as exc:
            raise HTTPException(409, str(exc))
        return {"execution_id": id(execution)}

    @app.post("/sessions/{session_id}/reject")
    def reject(session_id: str, body: RejectBody | None = None):
        try:
            gateway.reject_plan(session_id, body.feedback if body else None)
        except UnknownSession:
            raise HTTPException(404, "unknown session")
        except NoPendingPlan as exc:
            raise HTTPException(409, str(exc))
        return {"status": "rejected"}

    @app.post("/sessions/{session_id}/abort")
    def abort(session_id: str):
        try:
            gateway.abort(session_id)
        except UnknownSession:
            raise HTTPException(404, "unknown session")
        except GatewayError as exc:
            raise HTTPException(409, str(exc))
        return {"status": "aborting"}

    @app.get("/fleet")
    def fleet():
        return _status_payload()

    @app.websocket("/sessions/{session_id}/events")
    async def events(websocket: WebSocket, session_id: str):
        await websocket.accept()
        try:
            q = gateway.subscribe(session_id)
        except UnknownSession:
            await websocket.close(code=4404)
            return
        try:
            last_telemetry = 0.0
            while True:
                try:
                    payload = await run_in_threadpool(q.get, True, 0.25)
                    await websocket.send_json({"type": "event", **payload})
                except queue.Empty:
                    pass
                now = time.time()
                if now - last_telemetry >= 1.0:
                    last_telemetry = now
                    await websocket.send_json({"type": "telemetry", **_status_payload()})
        except WebSocketDisconnect:
            pass
        finally:
            gateway.unsubscribe(session_id, q)

    if frontend_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(frontend_dir), html=True), name="console")

    return app
