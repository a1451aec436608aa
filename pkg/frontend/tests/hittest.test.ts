import { describe, expect, it } from "vitest";

import { boxAt, markerAt, MARKER_RADIUS } from "../src/hittest.js";
import type { WireBox, WireMarker } from "../src/types.js";

function box(id: string, bbox: [number, number, number, number]): WireBox {
  return { object_id: id, label: id, category: "c", bbox, depth: 1, color: "#fff" };
}

describe("boxAt", () => {
  const boxes = [box("outer", [0, 0, 100, 100]), box("inner", [20, 20, 30, 30])];

  it("misses outside every box", () => {
    expect(boxAt(boxes, 300, 300)).toBeNull();
  });

  it("hits the only box containing the point", () => {
    expect(boxAt(boxes, 80, 80)?.object_id).toBe("outer");
  });

  it("prefers the smallest box when nested", () => {
    expect(boxAt(boxes, 25, 25)?.object_id).toBe("inner");
  });

  it("treats edges as inside", () => {
    expect(boxAt(boxes, 0, 0)?.object_id).toBe("outer");
    expect(boxAt(boxes, 100, 100)?.object_id).toBe("outer");
  });
});

describe("markerAt", () => {
  const markers: WireMarker[] = [
    { viewpoint_id: "a", x: 100, y: 100, distance: 2 },
    { viewpoint_id: "b", x: 120, y: 100, distance: 3 },
  ];

  it("misses far away", () => {
    expect(markerAt(markers, 400, 400)).toBeNull();
  });

  it("hits within the marker radius", () => {
    expect(markerAt(markers, 102, 101)?.viewpoint_id).toBe("a");
  });

  it("prefers the nearest marker when overlapping", () => {
    expect(markerAt(markers, 112, 100)?.viewpoint_id).toBe("b");
  });

  it("boundary exactly at the radius still hits", () => {
    const lone: WireMarker[] = [{ viewpoint_id: "a", x: 100, y: 100, distance: 2 }];
    expect(markerAt(lone, 100 + MARKER_RADIUS, 100)?.viewpoint_id).toBe("a");
    expect(markerAt(lone, 100 + MARKER_RADIUS + 0.5, 100)).toBeNull();
  });
});
