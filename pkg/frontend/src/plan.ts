import type { PlanAction, PlanFailure } from "./types.js";

export const BARRIER_LABEL = "all drones synchronize";

export interface PlanRow {
  drone: number;
  description: string;
}

/** Rows between barriers, in plan order. */
export interface PlanSegment {
  rows: PlanRow[];
}

export interface PlanPreviewModel {
  segments: PlanSegment[];
  barrierCount: number;
  drones: number[];
}

export function isBarrier(action: PlanAction): boolean {
  return action.drone === null;
}

/**
 * Split the gateway's flat action list into barrier-delimited segments for
 * rendering: each barrier becomes a horizontal separator between segments.
 */
export function buildPreview(actions: PlanAction[]): PlanPreviewModel {
  const segments: PlanSegment[] = [{ rows: [] }];
  const drones = new Set<number>();
  let barrierCount = 0;
  for (const action of actions) {
    if (isBarrier(action)) {
      barrierCount += 1;
      segments.push({ rows: [] });
      continue;
    }
    drones.add(action.drone as number);
    segments[segments.length - 1].rows.push({
      drone: action.drone as number,
      description: action.description,
    });
  }
  // a trailing barrier leaves an empty final segment; drop it
  while (segments.length > 1 && segments[segments.length - 1].rows.length === 0) {
    segments.pop();
  }
  return {
    segments,
    barrierCount,
    drones: [...drones].sort((a, b) => a - b),
  };
}

/** Rows of one segment grouped per drone, ordered by drone id. */
export function groupByDrone(segment: PlanSegment): Map<number, PlanRow[]> {
  const grouped = new Map<number, PlanRow[]>();
  for (const row of segment.rows) {
    if (!grouped.has(row.drone)) grouped.set(row.drone, []);
    grouped.get(row.drone)!.push(row);
  }
  return new Map([...grouped.entries()].sort((a, b) => a[0] - b[0]));
}

export function formatFailure(failure: PlanFailure): string[] {
  const header = `planning failed during ${failure.stage}`;
  return [header, ...failure.errors];
}
