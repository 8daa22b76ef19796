import type { DroneInfo } from "./types.js";

/** Telemetry older than this is flagged as stale in the fleet table. */
export const STALE_AFTER_S = 2.0;

export interface FleetRow {
  id: number;
  badge: string;
  battery: string;
  height: string;
  yaw: string;
  age: string;
  stale: boolean;
}

function dash(value: number | null | undefined, unit = ""): string {
  return value === null || value === undefined ? "—" : `${value}${unit}`;
}

export function fleetRow(info: DroneInfo): FleetRow {
  const hasTelemetry = info.age !== undefined;
  const stale = !hasTelemetry || info.age! > STALE_AFTER_S;
  return {
    id: info.id,
    badge: info.status,
    battery: dash(info.battery, "%"),
    height: dash(info.height, " cm"),
    yaw: dash(info.yaw, "°"),
    age: hasTelemetry ? `${info.age!.toFixed(1)} s` : "no telemetry",
    stale,
  };
}

export function fleetRows(drones: DroneInfo[]): FleetRow[] {
  return [...drones].sort((a, b) => a.id - b.id).map(fleetRow);
}
