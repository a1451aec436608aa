/** Wire payload shapes, mirroring the episode service JSON. */

export interface WireBox {
  object_id: string;
  label: string;
  category: string;
  bbox: [number, number, number, number];
  depth: number;
  color: string;
}

export interface WireMarker {
  viewpoint_id: string;
  x: number;
  y: number;
  distance: number;
}

export interface WireView {
  k: number;
  heading: number;
  elevation: number;
  feature: number[];
}

export interface WireNavigable {
  viewpoint_id: string;
  rel_heading: number;
  rel_elevation: number;
  distance: number;
  view_k: number;
}

export interface WireObservation {
  instruction: string[];
  viewpoint: string;
  heading: number;
  elevation: number;
  step_count: number;
  nav_finished: boolean;
  views: WireView[];
  navigable: WireNavigable[];
  candidates: Record<string, Omit<WireBox, "color">[]>;
  render: {
    boxes: Record<string, WireBox[]>;
    markers: Record<string, WireMarker[]>;
  };
}

export interface WireTrajectory {
  task_id: string;
  path: string[];
  detection: unknown;
  steps: number;
}

export interface WireResult {
  task_id: string;
  trajectory: WireTrajectory;
  nav_success: boolean;
  oracle_success: boolean;
  grounding_success: boolean;
  path_length: number;
  shortest_length: number;
  spl_term: number;
}

export interface WireTaskEntry {
  task_id: string;
  env_id: string;
  instruction: string[];
  start_viewpoint: string;
}

export type WireAction =
  | { type: "move"; viewpoint_id: string }
  | { type: "stop" }
  | {
      type: "detect";
      detection:
        | { kind: "candidate"; object_id: string }
        | { kind: "bbox"; view_k: number; bbox: [number, number, number, number] };
    };
