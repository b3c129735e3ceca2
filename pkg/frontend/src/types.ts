/** JSON shapes exchanged with the run service. */

export interface Geometry {
  n_cols: number;
  n_rows: number;
  dx: number;
  dz: number;
}

export interface MisfitPoint {
  step: number;
  prior: number;
  posterior: number;
}

export interface Recommendation {
  action: string;
  scores: Record<string, number>;
  chosen_value: number;
}

export interface Score {
  achieved: number;
  oracle: number;
  straight_baseline: number;
}

export type RunStatus = "active" | "terminated";

export interface RunInfo {
  run_id: string;
  created_at: string;
  status: RunStatus;
  latest_step: number;
  termination_reason: string | null;
}

export interface Snapshot {
  run_id: string;
  step: number;
  status: RunStatus;
  termination_reason: string | null;
  geometry: Geometry;
  bit: [number, number];
  drilled_path: [number, number][];
  map: number[][];
  recommendation: Recommendation | null;
  applied: string | null;
  fan: [number, number][][];
  misfits: MisfitPoint[];
  score: Score | null;
  truth_cells?: number[][];
}

export type StepAction = "accept" | "up" | "hold" | "down" | "stop";

export const STEP_ACTIONS: StepAction[] = ["accept", "up", "hold", "down", "stop"];

export interface StepEventData {
  step: number;
  snapshot_step: number;
  action: string;
  applied: string;
  bit: [number, number];
  terminated: boolean;
}

export interface EndEventData {
  status: "terminated";
  reason: string | null;
  score: Score;
}

/** Step record returned by POST .../step; only the fields the UI reads. */
export interface StepResult {
  step: number;
  applied: string;
  decision: { action: string; scores: Record<string, number>; chosen_value: number };
  status: RunStatus;
}
