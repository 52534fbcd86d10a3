// Wire formats of the workstation service. The client renders these verbatim;
// it never derives poses or pixel coordinates on its own.

export interface Defect {
  id: string;
  kind: string;
  length_mm: number;
  status: string;
  zone_id: string;
  comment: string;
  polyline_m: number[][];
}

export interface Zone {
  id: string;
  name: string;
  max_removal_mm: number;
  boundary_m: number[][];
}

export interface Measurement {
  spot_id: string;
  location_m: number[];
  thickness_mm: number;
}

export interface DefectDetail {
  defect: Defect;
  zone: Zone;
  nearby_measurements: Measurement[];
}

export interface SessionPayload {
  state: "Idle" | "ObjectIdentified" | "DefectSelected" | "Documenting";
  serial: string | null;
  defect_id: string | null;
  stale: boolean;
  layers: string[];
  open_defects: Defect[];
  has_pose: boolean;
  last_error: string | null;
  detail: DefectDetail | null;
}

export interface OverlayPolyline {
  layer: string;
  label: string;
  highlighted: boolean;
  points: number[][];
}

export interface OverlayPoint {
  layer: string;
  u: number;
  v: number;
  label: string;
}

export interface OverlayFrame {
  camera_id: string;
  pose_time: number;
  stale: boolean;
  polylines: OverlayPolyline[];
  points: OverlayPoint[];
}

export interface DocumentationRecord {
  defect_id: string;
  worker_id: string;
  started_at_s: number;
  finished_at_s: number;
  duration_s: number;
  notes: string;
  outcome: "repaired" | "deferred";
}

export type PushEvent =
  | { type: "state"; payload: SessionPayload }
  | { type: "overlay"; payload: { pose_time: number; stale: boolean } }
  | { type: "error"; payload: { error: string } };
