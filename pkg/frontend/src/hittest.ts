/** Click hit-testing for boxes and navigable markers, pixel space. */

import type { WireBox, WireMarker } from "./types.js";

export const MARKER_RADIUS = 14;

export function boxAt(boxes: WireBox[], x: number, y: number): WireBox | null {
  // smallest box wins so nested boxes stay clickable
  let best: WireBox | null = null;
  for (const b of boxes) {
    const [bx, by, bw, bh] = b.bbox;
    if (x >= bx && x <= bx + bw && y >= by && y <= by + bh) {
      if (best === null || bw * bh < best.bbox[2] * best.bbox[3]) {
        best = b;
      }
    }
  }
  return best;
}

export function markerAt(markers: WireMarker[], x: number, y: number): WireMarker | null {
  let best: WireMarker | null = null;
  let bestDist = MARKER_RADIUS;
  for (const m of markers) {
    const d = Math.hypot(m.x - x, m.y - y);
    if (d <= bestDist) {
      best = m;
      bestDist = d;
    }
  }
  return best;
}
