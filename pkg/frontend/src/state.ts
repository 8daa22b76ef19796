import type { EventKind } from "./types.js";

/**
 * Session lifecycle. The whole safety story of the console hangs on two
 * rules enforced here rather than in the DOM: approve is legal only in
 * awaiting-approval, abort only in flying.
 */
export type FlightState =
  | "idle"
  | "planning"
  | "awaiting-approval"
  | "flying"
  | "aborted"
  | "completed";

export interface Controls {
  canSubmit: boolean;
  canApprove: boolean;
  canReject: boolean;
  canAbort: boolean;
}

export class IllegalTransition extends Error {
  constructor(from: FlightState, what: string) {
    super(`cannot ${what} while ${from}`);
  }
}

const RESTING: FlightState[] = ["idle", "aborted", "completed"];

export function controlsFor(state: FlightState): Controls {
  return {
    canSubmit: RESTING.includes(state),
    canApprove: state === "awaiting-approval",
    canReject: state === "awaiting-approval",
    canAbort: state === "flying",
  };
}

export class SessionStateMachine {
  state: FlightState = "idle";
  /** set when a failure was seen but the abort lands are still in flight */
  abortInProgress = false;

  get controls(): Controls {
    return controlsFor(this.state);
  }

  submitTask(): void {
    if (!this.controls.canSubmit) {
      throw new IllegalTransition(this.state, "submit a task");
    }
    this.state = "planning";
    this.abortInProgress = false;
  }

  planReceived(): void {
    if (this.state !== "planning") {
      throw new IllegalTransition(this.state, "receive a plan");
    }
    this.state = "awaiting-approval";
  }

  planFailed(): void {
    if (this.state !== "planning") {
      throw new IllegalTransition(this.state, "fail planning");
    }
    this.state = "idle";
  }

  approve(): void {
    if (!this.controls.canApprove) {
      throw new IllegalTransition(this.state, "approve");
    }
    this.state = "flying";
  }

  reject(): void {
    if (!this.controls.canReject) {
      throw new IllegalTransition(this.state, "reject");
    }
    this.state = "idle";
  }

  abortRequested(): void {
    if (!this.controls.canAbort) {
      throw new IllegalTransition(this.state, "abort");
    }
    this.abortInProgress = true;
  }

  /** Feed every execution event through; terminal kinds settle the state. */
  event(kind: EventKind): void {
    if (this.state !== "flying") {
      return; // late frames after a terminal state are harmless
    }
    if (kind === "failed" || kind === "abort_issued") {
      this.abortInProgress = true;
    } else if (kind === "plan_completed") {
      this.state = "completed";
      this.abortInProgress = false;
    } else if (kind === "plan_aborted") {
      this.state = "aborted";
      this.abortInProgress = false;
    }
  }
}
