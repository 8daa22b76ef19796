"""Command-line entry points: serve, sim, plan, run, repl."""

from __future__ import annotations

import argparse
import json
import queue
import sys
import time

from . import gateway as gw
from . import link, llm, sim


def _add_llm_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--llm-endpoint", help="chat-completions HTTP endpoint")
    parser.add_argument("--llm-model", default="planner", help="model name")
    parser.add_argument("--llm-key-env", default="LLM_API_KEY",
                        help="environment variable holding the API credential")
    parser.add_argument("--mock-llm", metavar="SCRIPT",
                        help="JSON file of {pattern, reply} entries; no network")


def _make_backend(args) -> object:
    if args.mock_llm:
        with open(args.mock_llm, encoding="utf-8") as fh:
            entries = json.load(fh)
        return llm.MockBackend([(e["pattern"], e["reply"]) for e in entries])
    if not args.llm_endpoint:
        raise SystemExit("either --llm-endpoint or --mock-llm is required")
    return llm.HttpBackend(args.llm_endpoint, model=args.llm_model,
                           api_key_env=args.llm_key_env)


def _make_gateway(args) -> gw.Gateway:
    fleet = link.FleetConfig.load(args.fleet)
    gateway = gw.Gateway(fleet, _make_backend(args),
                         transcript_dir=args.transcripts, model=args.llm_model)
    gateway.connect_fleet()
    return gateway


def cmd_serve(args) -> int:
    import uvicorn

    gateway = _make_gateway(args)
    app = gw.create_app(gateway, frontend_dir=args.frontend)
    host, _, port = args.listen.partition(":")
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))
    finally:
        gateway.shutdown()
    return 0


def cmd_sim(args) -> int:
    faults = sim.Fault.load_script(args.faults) if args.faults else ()
    specs = [
        sim.SimDroneSpec(i + 1, port=args.base_port + i if args.base_port else 0)
        for i in range(args.drones)
    ]
    config = sim.SimConfig(
        specs,
        time_scale=args.time_scale,
        telemetry_addr=("127.0.0.1", args.telemetry_port),
        faults=faults,
    )
    fleet = sim.spawn_fleet(config)
    for drone_id in sorted(s.id for s in specs):
        host, port = fleet.address(drone_id)
        print(f"drone {drone_id}: {host}:{port}")
    print("simulated fleet running; Ctrl+C to stop")
    try:
        while True:
            time.sleep(1.0)
    except KeyboardInterrupt:
        pass
    finally:
        fleet.stop()
    return 0


def _plan_once(gateway: gw.Gateway, task: str):
    session = gateway.create_session()
    try:
        preview = gateway.submit_task(session.id, task)
    except llm.PlanningFailure as exc:
        print(f"planning failed at {exc.stage}:", file=sys.stderr)
        for detail in exc.details:
            print(f"  - {detail}", file=sys.stderr)
        return session, None
    print("plan:")
    for line in preview.plan_text.splitlines():
        print(f"  {line}")
    print("actions:")
    for action in preview.actions:
        print(f"  {action['description']}")
    return session, preview


def cmd_plan(args) -> int:
    gateway = _make_gateway(args)
    try:
        _, preview = _plan_once(gateway, args.task)
        return 0 if preview else 1
    finally:
        gateway.shutdown()


def _execute_and_stream(gateway: gw.Gateway, session_id: str) -> int:
    q = gateway.subscribe(session_id)
    gateway.approve_and_execute(session_id)
    while True:
        try:
            event = q.get(timeout=0.5)
        except queue.Empty:
            session = gateway.sessions[session_id]
            if session.execution is None:
                break
            continue
        drone = f"drone {event['drone']}" if event["drone"] else "fleet"
        print(f"  [{event['kind']}] {drone} {event['action'] or ''} {event['detail']}".rstrip())
        if event["kind"] in ("plan_completed",):
            break
    outcome = gateway.sessions[session_id].last_outcome
    # outcome is written by the reaper thread just after the last event
    for _ in range(50):
        if outcome is not None:
            break
        time.sleep(0.1)
        outcome = gateway.sessions[session_id].last_outcome
    print(f"outcome: {outcome or 'unknown'}")
    return 0 if outcome == "completed" else 1


def cmd_run(args) -> int:
    if not args.yes:
        raise SystemExit("run executes without interactive approval; pass --yes to confirm")
    gateway = _make_gateway(args)
    try:
        session, preview = _plan_once(gateway, args.task)
        if preview is None:
            return 1
        return _execute_and_stream(gateway, session.id)
    finally:
        gateway.shutdown()


def cmd_repl(args) -> int:
    gateway = _make_gateway(args)
    session = gateway.create_session()
    print("interactive planner; empty line or Ctrl+D to exit")
    try:
        while True:
            try:
                task = input("task> ").strip()
            except EOFError:
                break
            if not task:
                break
            _, preview = _plan_once(gateway, task)
            if preview is None:
                continue
            answer = input("approve and fly? [y/N] ").strip().lower()
            if answer == "y":
                _execute_and_stream(gateway, session.id)
            else:
                feedback = input("feedback for the planner (optional)> ").strip()
                gateway.reject_plan(session.id, feedback or None)
                print("plan rejected")
    finally:
        gateway.shutdown()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fleetpilot",
        description="prompt-driven multi-drone planning and execution",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the operator gateway service")
    serve.add_argument("--fleet", required=True, help="fleet config file")
    serve.add_argument("--listen", default="127.0.0.1:8000", help="host:port")
    serve.add_argument("--transcripts", default="transcripts", help="transcript directory")
    serve.add_argument("--frontend", help="static console assets to serve at /")
    _add_llm_flags(serve)
    serve.set_defaults(func=cmd_serve)

    simp = sub.add_parser("sim", help="run a simulated fleet")
    simp.add_argument("--drones", type=int, default=2)
    simp.add_argument("--base-port", type=int, default=8889,
                      help="first control port; 0 for ephemeral")
    simp.add_argument("--telemetry-port", type=int, default=link.DEFAULT_TELEMETRY_PORT)
    simp.add_argument("--time-scale", type=float, default=1.0)
    simp.add_argument("--faults", help="JSON fault script file")
    simp.set_defaults(func=cmd_sim)

    for name, func, extra in (
        ("plan", cmd_plan, "print the generated plan without flying"),
        ("run", cmd_run, "plan and execute in one shot"),
        ("repl", cmd_repl, "interactive task loop"),
    ):
        p = sub.add_parser(name, help=extra)
        p.add_argument("--fleet", required=True, help="fleet config file")
        p.add_argument("--transcripts", default="transcripts", help="transcript directory")
        _add_llm_flags(p)
        if name in ("plan", "run"):
            p.add_argument("--task", required=True, help="natural-language task")
        if name == "run":
            p.add_argument("--yes", action="store_true",
                           help="confirm execution without interactive approval")
        p.set_defaults(func=func)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
