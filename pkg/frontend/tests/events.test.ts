import { describe, expect, it } from "vitest";

import { backoffDelay, EventStream, SocketLike, StreamStatus } from "../src/events.js";
import type { SocketFrame } from "../src/types.js";

class FakeSocket implements SocketLike {
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  closed = false;

  close(): void {
    this.closed = true;
    this.onclose?.();
  }

  serverSend(payload: unknown): void {
    this.onmessage?.({ data: JSON.stringify(payload) });
  }
}

interface Pending {
  fn: () => void;
  ms: number;
}

function harness() {
  const sockets: FakeSocket[] = [];
  const frames: SocketFrame[] = [];
  const statuses: StreamStatus[] = [];
  const timers: Pending[] = [];
  const stream = new EventStream("ws://test/sessions/x/events", {
    socketFactory: () => {
      const s = new FakeSocket();
      sockets.push(s);
      return s;
    },
    schedule: (fn, ms) => {
      timers.push({ fn, ms });
      return timers.length - 1;
    },
    cancel: () => undefined,
    onFrame: (f) => frames.push(f),
    onStatus: (s) => statuses.push(s),
  });
  return { stream, sockets, frames, statuses, timers };
}

describe("backoffDelay", () => {
  it("doubles and then caps", () => {
    expect([0, 1, 2, 3, 4, 5, 9].map(backoffDelay)).toEqual(
      [500, 1000, 2000, 4000, 8000, 8000, 8000],
    );
  });
});

describe("EventStream", () => {
  it("delivers parsed frames in order", () => {
    const h = harness();
    h.stream.start();
    h.sockets[0].onopen!();
    h.sockets[0].serverSend({ type: "event", kind: "plan_started", drone: null });
    h.sockets[0].serverSend({ type: "telemetry", drones: [] });
    expect(h.frames.map((f) => f.type)).toEqual(["event", "telemetry"]);
  });

  it("ignores undecodable datagrams without dropping the stream", () => {
    const h = harness();
    h.stream.start();
    h.sockets[0].onopen!();
    h.sockets[0].onmessage!({ data: "not json" });
    h.sockets[0].serverSend({ type: "event", kind: "acked" });
    expect(h.frames).toHaveLength(1);
  });

  it("announces a drop and schedules a backed-off reconnect", () => {
    const h = harness();
    h.stream.start();
    h.sockets[0].onopen!();
    h.sockets[0].onclose!();
    const last = h.statuses[h.statuses.length - 1];
    expect(last).toEqual({ kind: "reconnecting", attempt: 1, delayMs: 500 });
    expect(h.timers).toHaveLength(1);
    expect(h.timers[0].ms).toBe(500);

    // the retry opens a fresh socket; a second drop waits longer
    h.timers[0].fn();
    expect(h.sockets).toHaveLength(2);
    h.sockets[1].onclose!();
    expect(h.timers[1].ms).toBe(1000);
  });

  it("resets the backoff once a connection succeeds", () => {
    const h = harness();
    h.stream.start();
    h.sockets[0].onclose!();
    h.timers[0].fn();
    h.sockets[1].onopen!();
    h.sockets[1].onclose!();
    // attempt counter restarted, so the delay is back at the first rung
    expect(h.timers[1].ms).toBe(500);
  });

  it("stop closes the socket and does not reconnect", () => {
    const h = harness();
    h.stream.start();
    h.sockets[0].onopen!();
    h.stream.stop();
    expect(h.sockets[0].closed).toBe(true);
    expect(h.statuses[h.statuses.length - 1]).toEqual({ kind: "closed" });
    expect(h.timers).toHaveLength(0);
  });
});
