/** Schematic view rendering: labeled boxes and navigable markers on a
 * blank 640x480 canvas. Pixel positions come straight from the server's
 * render payload; the client applies no transforms. */

import { MARKER_RADIUS } from "./hittest.js";
import type { WireObservation } from "./types.js";

export const CANVAS_W = 640;
export const CANVAS_H = 480;

export function drawView(
  ctx: CanvasRenderingContext2D,
  obs: WireObservation,
  k: number,
): void {
  ctx.clearRect(0, 0, CANVAS_W, CANVAS_H);
  ctx.fillStyle = "#101418";
  ctx.fillRect(0, 0, CANVAS_W, CANVAS_H);

  const markers = obs.render.markers[String(k)] ?? [];
  for (const m of markers) {
    ctx.beginPath();
    ctx.arc(m.x, m.y, MARKER_RADIUS, 0, 2 * Math.PI);
    ctx.fillStyle = "rgba(80, 160, 255, 0.55)";
    ctx.fill();
    ctx.strokeStyle = "#9cf";
    ctx.stroke();
    ctx.fillStyle = "#dff";
    ctx.font = "11px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(`${m.viewpoint_id} (${m.distance.toFixed(1)} m)`, m.x, m.y - MARKER_RADIUS - 4);
  }

  const boxes = obs.render.boxes[String(k)] ?? [];
  for (const b of boxes) {
    const [x, y, w, h] = b.bbox;
    ctx.strokeStyle = b.color;
    ctx.lineWidth = 2;
    ctx.strokeRect(x, y, w, h);
    ctx.fillStyle = b.color;
    ctx.font = "12px sans-serif";
    ctx.textAlign = "left";
    ctx.fillText(b.label, x + 2, Math.max(y - 4, 12));
  }
}

/** Dial labels: twelve headings (degrees) and the three elevations. */
export function headingLabels(): string[] {
  return Array.from({ length: 12 }, (_, h) => `${h * 30}°`);
}

export function elevationLabels(): string[] {
  return ["-30°", "0°", "+30°"];
}
