/** Aggregation of completed session results.
 *
 * Means over the server-provided per-task numbers, formatted exactly like
 * the scoring CLI (two decimals, percentages), so the two agree
 * field-by-field on identical trajectories.
 */

import type { WireResult } from "./types.js";

export interface AggregateRow {
  n: number;
  success: string;
  oracleSuccess: string;
  spl: string;
  length: string;
  groundingSuccess: string;
}

function pct(values: number[]): string {
  const mean = values.reduce((a, b) => a + b, 0) / values.length;
  return (100 * mean).toFixed(2);
}

export function aggregateResults(results: WireResult[]): AggregateRow | null {
  if (results.length === 0) {
    return null;
  }
  return {
    n: results.length,
    success: pct(results.map((r) => (r.nav_success ? 1 : 0))),
    oracleSuccess: pct(results.map((r) => (r.oracle_success ? 1 : 0))),
    spl: pct(results.map((r) => r.spl_term)),
    length: (
      results.reduce((a, r) => a + r.path_length, 0) / results.length
    ).toFixed(2),
    groundingSuccess: pct(results.map((r) => (r.grounding_success ? 1 : 0))),
  };
}

export function reportLines(results: WireResult[]): string[] {
  const row = aggregateResults(results);
  if (row === null) {
    return ["no completed sessions yet (N=0)"];
  }
  return [
    `sessions: ${row.n}`,
    `Succ.: ${row.success}%`,
    `OSucc.: ${row.oracleSuccess}%`,
    `SPL: ${row.spl}%`,
    `Length: ${row.length} m`,
    `Grounding Succ.: ${row.groundingSuccess}%`,
  ];
}

/** Trajectory JSONL line for one result, matching the offline format. */
export function trajectoryLine(result: WireResult): string {
  const t = result.trajectory;
  return JSON.stringify({
    detection: t.detection,
    path: t.path,
    steps: t.steps,
    task_id: t.task_id,
  });
}
