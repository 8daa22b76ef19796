// Shapes of the gateway HTTP/WebSocket payloads. These mirror the server's
// JSON exactly; the console has no other source of truth.

export interface PlanAction {
  drone: number | null;
  description: string;
}

export interface PlanPreview {
  plan_text: string;
  actions: PlanAction[];
  repairs_used: number;
}

export interface PlanFailure {
  errors: string[];
  stage: string;
}

export type TaskResponse = PlanPreview | PlanFailure;

export function isPlanFailure(resp: TaskResponse): resp is PlanFailure {
  return "errors" in resp;
}

export interface DroneInfo {
  id: number;
  status: string;
  battery?: number | null;
  height?: number | null;
  yaw?: number | null;
  age?: number;
}

export interface FleetSnapshot {
  drones: DroneInfo[];
}

export type EventKind =
  | "plan_started"
  | "dispatched"
  | "acked"
  | "barrier_reached"
  | "barrier_released"
  | "hover_started"
  | "failed"
  | "abort_issued"
  | "plan_completed"
  | "plan_aborted";

export interface EventFrame {
  type: "event";
  kind: EventKind;
  drone: number | null;
  action: string | null;
  timestamp: number;
  detail: string;
}

export interface TelemetryFrame extends FleetSnapshot {
  type: "telemetry";
}

export type SocketFrame = EventFrame | TelemetryFrame;
