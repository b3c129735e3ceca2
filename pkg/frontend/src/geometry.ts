/** Grid to screen transforms and action admissibility.
 *
 * Mirrors the engine's movement rules: each drilled segment advances one
 * column and changes the row by -1 (up), 0 (hold), or +1 (down); moves
 * may not leave the grid, drilling past the last column is impossible,
 * and stopping is always allowed while the run is active.
 */

import type { Geometry, Snapshot, StepAction } from "./types.js";

export const ROW_OFFSETS: Record<"up" | "hold" | "down", number> = {
  up: -1,
  hold: 0,
  down: 1,
};

export function admissibleMoves(
  col: number,
  row: number,
  geometry: Geometry,
): StepAction[] {
  if (col >= geometry.n_cols - 1) return ["stop"];
  const moves: StepAction[] = [];
  if (row - 1 >= 0) moves.push("up");
  moves.push("hold");
  if (row + 1 <= geometry.n_rows - 1) moves.push("down");
  moves.push("stop");
  return moves;
}

/** Which control buttons are enabled for a snapshot. */
export function actionAvailability(snap: Snapshot): Record<StepAction, boolean> {
  const off: Record<StepAction, boolean> = {
    accept: false, up: false, hold: false, down: false, stop: false,
  };
  if (snap.status === "terminated") return off;
  const [col, row] = snap.bit;
  const moves = admissibleMoves(col, row, snap.geometry);
  for (const move of moves) off[move] = true;
  off.accept = true;
  return off;
}

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export function cellRect(col: number, row: number, cellSize: number): Rect {
  return { x: col * cellSize, y: row * cellSize, w: cellSize, h: cellSize };
}

export function cellCenter(col: number, row: number, cellSize: number): [number, number] {
  return [(col + 0.5) * cellSize, (row + 0.5) * cellSize];
}

export function pathPoints(
  path: ReadonlyArray<readonly [number, number]>,
  cellSize: number,
): Array<[number, number]> {
  return path.map(([c, r]) => cellCenter(c, r, cellSize));
}

export function canvasSize(geometry: Geometry, cellSize: number): [number, number] {
  return [geometry.n_cols * cellSize, geometry.n_rows * cellSize];
}
