"""Acceptance criteria: scenario replays plus property checks, one test per
criterion, each printing a pass line with its measured budget."""

import random
import string
import time

import pytest

from fleetpilot import dsl, llm, sim
from fleetpilot.executor import EventKind, execute
from fleetpilot.llm import MockBackend, ScriptedBackend, plan_with_repair
from fleetpilot.motion import ActionKind, DroneAction, encode_action
from fleetpilot.prompts import make_bundle
from fleetpilot.sim import SimDroneState, apply_command

from conftest import S1_SCRIPT, S2_SCRIPT, S3_SCRIPT, connected_fleet
from test_sim import float_oracle, random_sequence


LIVE_CALLS_AT_START = llm.live_call_count()
NO_BACKOFF = (0.0, 0.0)


def fenced(script):
    return f"```\n{script}\n```"


def plan_via_mock(task, reply, fleet_ids):
    backend = MockBackend([(task, reply)])
    bundle = make_bundle(task)
    result = plan_with_repair(bundle, fleet_ids, backend, backoff=NO_BACKOFF)
    return result.plan


def timed(budget_s):
    """Context manager asserting wall-clock budget."""
    class _Timer:
        def __enter__(self):
            self.start = time.monotonic()
            return self

        def __exit__(self, *exc):
            self.elapsed = time.monotonic() - self.start
            if exc[0] is None:
                assert self.elapsed < budget_s, (
                    f"runtime {self.elapsed:.2f}s exceeded {budget_s}s budget"
                )

    return _Timer()


def report_pass(cid, detail=""):
    print(f"[acceptance] {cid}: PASS {detail}".rstrip())


def test_s1_single_drone_scenario():
    """S1: canonical single-drone script replay, exact final state."""
    with timed(5.0) as t:
        with connected_fleet(1, time_scale=0.01) as (fleet, sessions):
            plan = plan_via_mock("single drone routine", fenced(S1_SCRIPT), {1})
            assert len(plan.statements) == 6
            report = execute(dsl.compile_plan(plan), sessions)
            state = fleet.state(1)
    assert report.outcome.completed
    assert state.position == (-50, 50, 0)  # exact, integer cm
    assert not state.airborne
    assert report.ack_counts == {1: 6}
    report_pass("S1", f"final {state.position}, 6 acks, {t.elapsed:.2f}s")


def test_s2_synchronous_scenario():
    """S2: two drones, no barriers; simultaneous takeoff, mirrored finals."""
    with timed(5.0) as t:
        with connected_fleet(2, time_scale=0.01) as (fleet, sessions):
            plan = plan_via_mock("mirror routine", fenced(S2_SCRIPT), {1, 2})
            report = execute(dsl.compile_plan(plan), sessions)
            states = fleet.states()
    assert report.outcome.completed

    takeoff_dispatches = [
        e for e in report.events
        if e.kind is EventKind.DISPATCHED and e.action.kind is ActionKind.TAKEOFF
    ]
    assert len(takeoff_dispatches) == 2
    gap = abs(takeoff_dispatches[0].timestamp - takeoff_dispatches[1].timestamp)
    assert gap <= 0.050

    # both airborne at the same instant: both takeoffs acked before any land
    # is dispatched
    takeoff_acked = [
        e.timestamp for e in report.events
        if e.kind is EventKind.ACKED and e.action.kind is ActionKind.TAKEOFF
    ]
    land_dispatched = [
        e.timestamp for e in report.events
        if e.kind is EventKind.DISPATCHED and e.action.kind is ActionKind.LAND
    ]
    assert max(takeoff_acked) < min(land_dispatched)

    # mirrored script -> mirrored final positions (kinematics oracle:
    # left 50 for drone 1, right 50 for drone 2, at heading 0)
    assert states[1].position == (-50, 0, 0)
    assert states[2].position == (50, 0, 0)
    report_pass("S2", f"takeoff gap {gap * 1000:.1f} ms, {t.elapsed:.2f}s")


def test_s3_asynchronous_scenario():
    """S3: barrier script; drone 2 strictly after drone 1's pre-barrier acks."""
    with timed(5.0) as t:
        with connected_fleet(2, time_scale=0.01) as (fleet, sessions):
            plan = plan_via_mock("staged routine", fenced(S3_SCRIPT), {1, 2})
            report = execute(dsl.compile_plan(plan), sessions)
            states = fleet.states()
    assert report.outcome.completed
    drone1_prebarrier_acked = [
        e.timestamp for e in report.events
        if e.kind is EventKind.ACKED and e.drone == 1
    ][:3]
    drone2_dispatched = [
        e.timestamp for e in report.events
        if e.kind is EventKind.DISPATCHED and e.drone == 2
    ]
    assert min(drone2_dispatched) > max(drone1_prebarrier_acked)  # zero tolerance
    assert not states[1].airborne and not states[2].airborne
    report_pass("S3", f"{t.elapsed:.2f}s")


def test_p1_whitelist_totality():
    """P1: 1,000 programs with one random non-whitelist identifier each."""
    rng = random.Random(0xF1EE7)
    rejected = 0
    with timed(2.0) as t:
        for _ in range(1000):
            name = "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(1, 12)))
            if name in dsl.REGISTRY:
                name += "x"
            program = f"takeoff(1)\n{name}(1)\nland(1)"
            try:
                dsl.parse_plan(program, {1})
            except dsl.PlanValidationError as exc:
                if any(isinstance(i, dsl.UnknownFunction) for i in exc.issues):
                    rejected += 1
    assert rejected == 1000
    report_pass("P1", f"1000/1000 rejected, {t.elapsed:.2f}s")


def test_p2_protocol_closure():
    """P2: every encodable action accepted by the simulator under valid
    preconditions; boundary plus random magnitudes, >= 200 cases."""
    rng = random.Random(2024)
    actions = [DroneAction.takeoff(1), DroneAction.land(1)]
    for direction in ("left", "right", "forward", "back", "up", "down"):
        for d in (20, 500, *(rng.randrange(20, 501) for _ in range(20))):
            actions.append(DroneAction.fly(1, direction, d))
    for direction in ("left", "right", "forward", "back"):
        for _ in range(10):
            actions.append(DroneAction.flip(1, direction))
    for direction in ("cw", "ccw"):
        for g in (1, 360, *(rng.randrange(1, 361) for _ in range(28))):
            actions.append(DroneAction.rotate(1, direction, g))
    assert len(actions) >= 200

    airborne, _, _ = apply_command(SimDroneState(), "takeoff")
    with timed(2.0) as t:
        for action in actions:
            base = SimDroneState() if action.kind is ActionKind.TAKEOFF else airborne
            _, reply, _ = apply_command(base, encode_action(action))
            assert reply == "ok", encode_action(action)
    report_pass("P2", f"{len(actions)} cases, {t.elapsed:.2f}s")


def test_p3_kinematics_oracle_equivalence():
    """P3: 500 random maneuver sequences vs independent float replay,
    within +/- 1 cm per axis."""
    rng = random.Random(31337)
    with timed(10.0) as t:
        for _ in range(500):
            commands = random_sequence(rng, max_len=20)
            state = SimDroneState()
            for command in commands:
                state, reply, _ = apply_command(state, command)
                assert reply == "ok"
            ox, oy, oz = float_oracle(commands)
            assert abs(state.x - ox) <= 1
            assert abs(state.y - oy) <= 1
            assert abs(state.z - oz) <= 1
    report_pass("P3", f"500 sequences, {t.elapsed:.2f}s")


def test_p4_abort_safety():
    """P4: mid-plan nack in a 2-drone run aborts and lands every airborne
    drone exactly once; no post-abort dispatch except the land safes."""
    faults = [sim.Fault(drone=2, ordinal=4, kind="reply_error")]  # drone 2's flip
    with timed(5.0) as t:
        with connected_fleet(2, time_scale=0.01, faults=faults) as (fleet, sessions):
            plan = plan_via_mock("mirror routine", fenced(S2_SCRIPT), {1, 2})
            report = execute(dsl.compile_plan(plan), sessions)
            time.sleep(0.05)
            states = fleet.states()
    assert not report.outcome.completed

    abort_lands = [e for e in report.events
                   if e.kind is EventKind.DISPATCHED and e.detail == "abort land"]
    assert sorted(e.drone for e in abort_lands) == [1, 2]  # exactly one each

    failed_at = next(e.timestamp for e in report.events if e.kind is EventKind.FAILED)
    post_abort = [e for e in report.events
                  if e.kind is EventKind.DISPATCHED and e.timestamp > failed_at]
    assert all(e.detail == "abort land" for e in post_abort)
    assert not states[1].airborne and not states[2].airborne
    report_pass("P4", f"{t.elapsed:.2f}s")


def test_p5_repair_loop():
    """P5: invalid-then-corrected scripted mock; exactly 1 repair and
    exactly 2 extra conversation messages."""
    backend = ScriptedBackend(["```\njump(1)\n```", fenced(S1_SCRIPT)])
    bundle = make_bundle("single drone routine")
    before = len(bundle.history)
    result = plan_with_repair(bundle, {1}, backend, max_repairs=1, backoff=NO_BACKOFF)
    assert result.repairs_used == 1
    assert len(bundle.history) - before == 2
    assert len(result.plan.statements) == 6
    report_pass("P5", "1 repair, +2 messages")


def test_p6_no_network_guarantee():
    """P6: the whole S/P suite above ran on mock LLM + loopback UDP; the
    live-backend call counter never moved."""
    assert llm.live_call_count() == LIVE_CALLS_AT_START
    report_pass("P6", "0 live LLM calls")
