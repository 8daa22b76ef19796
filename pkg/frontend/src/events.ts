import type { SocketFrame } from "./types.js";

/** Exponential backoff schedule in milliseconds; the last value repeats. */
export const BACKOFF_MS = [500, 1000, 2000, 4000, 8000];

export function backoffDelay(attempt: number): number {
  return BACKOFF_MS[Math.min(attempt, BACKOFF_MS.length - 1)];
}

export type StreamStatus =
  | { kind: "connecting" }
  | { kind: "connected" }
  | { kind: "reconnecting"; attempt: number; delayMs: number }
  | { kind: "closed" };

/** The subset of the WebSocket interface the stream needs. */
export interface SocketLike {
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  close(): void;
}

export interface StreamOptions {
  socketFactory: (url: string) => SocketLike;
  schedule?: (fn: () => void, ms: number) => unknown;
  cancel?: (handle: unknown) => void;
  onFrame: (frame: SocketFrame) => void;
  onStatus: (status: StreamStatus) => void;
}

/**
 * Event WebSocket with automatic reconnect. A drop is never silent: every
 * state change goes through onStatus so the UI can show a banner, and the
 * stream keeps retrying with capped exponential backoff until stop().
 */
export class EventStream {
  private socket: SocketLike | null = null;
  private attempt = 0;
  private stopped = false;
  private timer: unknown = null;
  private readonly schedule: (fn: () => void, ms: number) => unknown;
  private readonly cancel: (handle: unknown) => void;

  constructor(private url: string, private opts: StreamOptions) {
    this.schedule = opts.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.cancel = opts.cancel ?? ((h) => clearTimeout(h as number));
  }

  start(): void {
    this.stopped = false;
    this.connect();
  }

  private connect(): void {
    this.opts.onStatus(
      this.attempt === 0
        ? { kind: "connecting" }
        : { kind: "reconnecting", attempt: this.attempt, delayMs: 0 },
    );
    const socket = this.opts.socketFactory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempt = 0;
      this.opts.onStatus({ kind: "connected" });
    };
    socket.onmessage = (ev) => {
      let frame: SocketFrame;
      try {
        frame = JSON.parse(ev.data);
      } catch {
        return; // not ours; ignore rather than tear down the stream
      }
      this.opts.onFrame(frame);
    };
    socket.onclose = () => {
      this.socket = null;
      if (this.stopped) {
        this.opts.onStatus({ kind: "closed" });
        return;
      }
      const delayMs = backoffDelay(this.attempt);
      this.attempt += 1;
      this.opts.onStatus({ kind: "reconnecting", attempt: this.attempt, delayMs });
      this.timer = this.schedule(() => this.connect(), delayMs);
    };
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      this.cancel(this.timer);
      this.timer = null;
    }
    if (this.socket !== null) {
      this.socket.close();
    } else {
      this.opts.onStatus({ kind: "closed" });
    }
  }
}
