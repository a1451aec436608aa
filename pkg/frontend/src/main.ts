/** Browser entry point: task picker, schematic panorama, heading dial,
 * click-to-move, click-to-point, and the aggregate report panel. */

import { ApiError, SessionClient } from "./api.js";
import { boxAt, markerAt } from "./hittest.js";
import { reportLines } from "./report.js";
import { drawView, elevationLabels, headingLabels } from "./render.js";
import {
  appliedStep,
  elevationIndex,
  headingIndex,
  initialState,
  selectView,
  startedSession,
  viewWithElevation,
  viewWithHeading,
  withBusy,
  withNotice,
  type UiSessionState,
} from "./state.js";
import type { WireResult, WireTaskEntry } from "./types.js";

const baseUrl = (window as any).REFNAV_BASE_URL ?? "http://127.0.0.1:8321";

let state: UiSessionState = initialState();
let client: SessionClient | null = null;
const completed: WireResult[] = [];

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

function setState(next: UiSessionState): void {
  state = next;
  repaint();
}

function repaint(): void {
  const canvas = $("view") as unknown as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  if (state.observation) {
    drawView(ctx, state.observation, state.selectedView);
  } else {
    ctx.clearRect(0, 0, canvas.width, canvas.height);
  }
  $("instruction").textContent = state.observation
    ? state.observation.instruction.join(" ")
    : "pick a task";
  $("status").textContent =
    state.notice ||
    (state.result
      ? `finished: grounding ${state.result.grounding_success ? "SUCCESS" : "FAILURE"}, ` +
        `navigation ${state.result.nav_success ? "success" : "failure"}, ` +
        `${state.result.path_length.toFixed(2)} m walked`
      : state.observation
        ? `at ${state.observation.viewpoint}, view ${state.selectedView}` +
          (state.observation.nav_finished ? " (navigation finished: click an object)" : "")
        : "");
  $("report").textContent = reportLines(completed).join("\n");
  const resultPanel = $("result-panel");
  resultPanel.style.display = state.result ? "block" : "none";
  if (state.result) {
    $("result-detail").textContent = JSON.stringify(
      {
        grounding_success: state.result.grounding_success,
        nav_success: state.result.nav_success,
        oracle_success: state.result.oracle_success,
        spl_term: state.result.spl_term,
        path_length: state.result.path_length,
      },
      null,
      2,
    );
  }
}

async function refreshTasks(): Promise<void> {
  const tasks = await SessionClient.listTasks(baseUrl);
  const picker = $("task-picker") as HTMLSelectElement;
  picker.innerHTML = "";
  for (const t of tasks) {
    const option = document.createElement("option");
    option.value = t.task_id;
    option.textContent = `${t.task_id}: ${t.instruction.join(" ")}`;
    picker.appendChild(option);
  }
}

async function startSession(taskId: string): Promise<void> {
  setState(withBusy(state, true));
  const { client: c, observation } = await SessionClient.create(baseUrl, taskId);
  client = c;
  setState(startedSession(state, c.sessionId, taskId, observation));
}

async function submit(action: Parameters<SessionClient["submit"]>[0]): Promise<void> {
  if (!client || state.busy || state.result) {
    return;
  }
  setState(withBusy(state, true));
  try {
    const payload = await client.submit(action);
    const next = appliedStep(state, payload);
    if (payload.result) {
      completed.push(payload.result);
    }
    setState(next);
  } catch (err) {
    if (err instanceof ApiError) {
      setState(withNotice(withBusy(state, false), `${err.status} ${err.code}: ${err.message}`));
    } else {
      throw err;
    }
  }
}

function onCanvasClick(ev: MouseEvent): void {
  if (!state.observation || state.result) {
    return;
  }
  const canvas = ev.currentTarget as HTMLCanvasElement;
  const rect = canvas.getBoundingClientRect();
  const x = ((ev.clientX - rect.left) / rect.width) * canvas.width;
  const y = ((ev.clientY - rect.top) / rect.height) * canvas.height;
  const k = String(state.selectedView);
  const marker = markerAt(state.observation.render.markers[k] ?? [], x, y);
  if (marker && !state.observation.nav_finished) {
    void submit({ type: "move", viewpoint_id: marker.viewpoint_id });
    return;
  }
  const box = boxAt(state.observation.render.boxes[k] ?? [], x, y);
  if (box) {
    const sure = window.confirm(
      `Point at "${box.label}"? You only get one detection per episode.`,
    );
    if (sure) {
      void submit({
        type: "detect",
        detection: { kind: "candidate", object_id: box.object_id },
      });
    }
  }
}

function buildDial(): void {
  const headings = $("headings");
  headingLabels().forEach((label, h) => {
    const b = document.createElement("button");
    b.textContent = label;
    b.addEventListener("click", () => setState(viewWithHeading(state, h)));
    headings.appendChild(b);
  });
  const elevations = $("elevations");
  elevationLabels().forEach((label, e) => {
    const b = document.createElement("button");
    b.textContent = label;
    b.addEventListener("click", () => setState(viewWithElevation(state, e)));
    elevations.appendChild(b);
  });
}

function wire(): void {
  buildDial();
  $("start").addEventListener("click", () => {
    const picker = $("task-picker") as HTMLSelectElement;
    if (picker.value) {
      void startSession(picker.value);
    }
  });
  $("stop").addEventListener("click", () => void submit({ type: "stop" }));
  ($("view") as unknown as HTMLCanvasElement).addEventListener("click", onCanvasClick);
  $("view-left").addEventListener("click", () =>
    setState(viewWithHeading(state, headingIndex(state.selectedView) - 1)));
  $("view-right").addEventListener("click", () =>
    setState(viewWithHeading(state, headingIndex(state.selectedView) + 1)));
  $("view-up").addEventListener("click", () =>
    setState(viewWithElevation(state, elevationIndex(state.selectedView) + 1)));
  $("view-down").addEventListener("click", () =>
    setState(viewWithElevation(state, elevationIndex(state.selectedView) - 1)));
  void refreshTasks();
  repaint();
}

wire();
