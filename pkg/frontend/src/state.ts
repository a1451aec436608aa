/** UI session state: a pure reducer over server payloads.
 *
 * The UI never computes task outcomes; everything displayed derives from
 * the latest WireObservation/WireResult.
 */

import type { WireObservation, WireResult } from "./types.js";

export const VIEW_MIN = 1;
export const VIEW_MAX = 36;
export const HEADINGS = 12;

export interface UiSessionState {
  sessionId: string | null;
  taskId: string | null;
  observation: WireObservation | null;
  result: WireResult | null;
  selectedView: number;
  notice: string;
  busy: boolean;
}

export function initialState(): UiSessionState {
  return {
    sessionId: null,
    taskId: null,
    observation: null,
    result: null,
    selectedView: facingK(0, 0),
    notice: "",
    busy: false,
  };
}

/** View index for a heading/elevation in radians (k = 12e + h + 1). */
export function facingK(heading: number, elevation: number): number {
  const step = Math.PI / 6;
  const h = ((Math.round(heading / step) % HEADINGS) + HEADINGS) % HEADINGS;
  const e = Math.min(Math.max(Math.round(elevation / step), -1), 1) + 1;
  return HEADINGS * e + h + 1;
}

export function headingIndex(k: number): number {
  return (k - 1) % HEADINGS;
}

export function elevationIndex(k: number): number {
  return Math.floor((k - 1) / HEADINGS);
}

/** Clamp a requested view index into 1..36, noting when it was out of range. */
export function selectView(state: UiSessionState, k: number): UiSessionState {
  const clamped = Math.min(Math.max(Math.round(k), VIEW_MIN), VIEW_MAX);
  return {
    ...state,
    selectedView: clamped,
    notice: clamped === k ? "" : `view ${k} out of range; clamped to ${clamped}`,
  };
}

export function viewWithHeading(state: UiSessionState, headingIdx: number): UiSessionState {
  const e = elevationIndex(state.selectedView);
  const h = ((headingIdx % HEADINGS) + HEADINGS) % HEADINGS;
  return selectView(state, HEADINGS * e + h + 1);
}

export function viewWithElevation(state: UiSessionState, elevationIdx: number): UiSessionState {
  const e = Math.min(Math.max(elevationIdx, 0), 2);
  return selectView(state, HEADINGS * e + headingIndex(state.selectedView) + 1);
}

export function startedSession(
  state: UiSessionState,
  sessionId: string,
  taskId: string,
  observation: WireObservation,
): UiSessionState {
  return {
    ...state,
    sessionId,
    taskId,
    observation,
    result: null,
    selectedView: facingK(observation.heading, observation.elevation),
    notice: "",
    busy: false,
  };
}

export function appliedStep(
  state: UiSessionState,
  payload: { observation?: WireObservation; result?: WireResult },
): UiSessionState {
  if (payload.result) {
    return { ...state, result: payload.result, busy: false };
  }
  const obs = payload.observation!;
  return {
    ...state,
    observation: obs,
    selectedView: facingK(obs.heading, obs.elevation),
    busy: false,
  };
}

export function withBusy(state: UiSessionState, busy: boolean): UiSessionState {
  return { ...state, busy };
}

export function withNotice(state: UiSessionState, notice: string): UiSessionState {
  return { ...state, notice };
}
