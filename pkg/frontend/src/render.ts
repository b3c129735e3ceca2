/** Canvas renderer for run snapshots.
 *
 * Draws against a structural subset of CanvasRenderingContext2D so tests
 * can pass a recording stub. Returns draw statistics for the same
 * reason: assertions about what was rendered, not pixel scraping.
 */

import { cssColor } from "./colormap.js";
import { ROW_OFFSETS, cellCenter, cellRect, pathPoints } from "./geometry.js";
import type { Snapshot } from "./types.js";

export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  fill(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fillText(text: string, x: number, y: number): void;
  setLineDash(segments: number[]): void;
  save(): void;
  restore(): void;
}

export interface RenderOptions {
  cellSize: number;
  showFan: boolean;
  showTruth: boolean;
  showReward: boolean;
}

export interface RenderStats {
  cellsFilled: number;
  fanPolylines: number;
  pathPoints: number;
  markers: number;
  truthEdges: number;
  rewardCells: number;
  arrow: boolean;
}

export const DEFAULT_OPTIONS: RenderOptions = {
  cellSize: 10,
  showFan: true,
  showTruth: false,
  showReward: false,
};

const PATH_COLOR = "#ff5533";
const FAN_COLOR = "#ffffff";
const TRUTH_COLOR = "#ffffff";
const REWARD_COLOR = "#7dff8a";
const REWARD_THRESHOLD = 0.5;

function isSand(code: number | undefined): boolean {
  return code === 0 || code === 1;
}

export function renderSnapshot(
  ctx: Ctx2D,
  snap: Snapshot,
  options: Partial<RenderOptions> = {},
): RenderStats {
  const opts = { ...DEFAULT_OPTIONS, ...options };
  const cell = opts.cellSize;
  const { n_cols, n_rows } = snap.geometry;
  const stats: RenderStats = {
    cellsFilled: 0,
    fanPolylines: 0,
    pathPoints: 0,
    markers: 0,
    truthEdges: 0,
    rewardCells: 0,
    arrow: false,
  };

  ctx.save();
  ctx.clearRect(0, 0, n_cols * cell, n_rows * cell);

  for (let r = 0; r < n_rows; r++) {
    const row = snap.map[r] ?? [];
    for (let c = 0; c < n_cols; c++) {
      const rect = cellRect(c, r, cell);
      ctx.fillStyle = cssColor(row[c] ?? 0);
      ctx.fillRect(rect.x, rect.y, rect.w, rect.h);
      stats.cellsFilled++;
    }
  }

  if (opts.showReward) {
    ctx.globalAlpha = 0.5;
    ctx.fillStyle = REWARD_COLOR;
    for (let r = 0; r < n_rows; r++) {
      const row = snap.map[r] ?? [];
      for (let c = 0; c < n_cols; c++) {
        if ((row[c] ?? 0) >= REWARD_THRESHOLD) {
          const rect = cellRect(c, r, cell);
          ctx.fillRect(rect.x, rect.y, rect.w, rect.h);
          stats.rewardCells++;
        }
      }
    }
    ctx.globalAlpha = 1;
  }

  if (opts.showTruth && snap.truth_cells) {
    ctx.strokeStyle = TRUTH_COLOR;
    ctx.lineWidth = 1;
    const cells = snap.truth_cells;
    for (let r = 0; r < n_rows; r++) {
      for (let c = 0; c < n_cols; c++) {
        if (!isSand(cells[r]?.[c])) continue;
        const edge =
          !isSand(cells[r - 1]?.[c]) || !isSand(cells[r + 1]?.[c]) ||
          !isSand(cells[r]?.[c - 1]) || !isSand(cells[r]?.[c + 1]);
        if (edge) {
          const rect = cellRect(c, r, cell);
          ctx.strokeRect(rect.x, rect.y, rect.w, rect.h);
          stats.truthEdges++;
        }
      }
    }
  }

  if (opts.showFan) {
    ctx.strokeStyle = FAN_COLOR;
    ctx.lineWidth = 1;
    ctx.setLineDash([3, 3]);
    // constant low alpha per member, so stacked trajectories add up to
    // visibly thicker agglomerates
    ctx.globalAlpha = Math.min(1, 0.08 + 2 / Math.max(1, snap.fan.length));
    for (const member of snap.fan) {
      if (member.length < 2) continue;
      const pts = pathPoints(member, cell);
      ctx.beginPath();
      ctx.moveTo(pts[0]![0], pts[0]![1]);
      for (let i = 1; i < pts.length; i++) ctx.lineTo(pts[i]![0], pts[i]![1]);
      ctx.stroke();
      stats.fanPolylines++;
    }
    ctx.setLineDash([]);
    ctx.globalAlpha = 1;
  }

  const path = pathPoints(snap.drilled_path, cell);
  if (path.length >= 2) {
    ctx.strokeStyle = PATH_COLOR;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(path[0]![0], path[0]![1]);
    for (let i = 1; i < path.length; i++) ctx.lineTo(path[i]![0], path[i]![1]);
    ctx.stroke();
  }
  stats.pathPoints = path.length;
  ctx.fillStyle = PATH_COLOR;
  for (const [x, y] of path) {
    ctx.beginPath();
    ctx.arc(x, y, Math.max(2, cell * 0.18), 0, 2 * Math.PI);
    ctx.fill();
    stats.markers++;
  }

  const rec = snap.recommendation;
  if (snap.status === "active" && rec && rec.action !== "stop") {
    const offset = ROW_OFFSETS[rec.action as keyof typeof ROW_OFFSETS];
    if (offset !== undefined) {
      const [bc, br] = snap.bit;
      const [x0, y0] = cellCenter(bc, br, cell);
      const [x1, y1] = cellCenter(bc + 1, br + offset, cell);
      ctx.strokeStyle = "#ffe066";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(x0, y0);
      ctx.lineTo(x1, y1);
      ctx.stroke();
      const angle = Math.atan2(y1 - y0, x1 - x0);
      ctx.beginPath();
      ctx.moveTo(x1, y1);
      ctx.lineTo(x1 - 6 * Math.cos(angle - 0.4), y1 - 6 * Math.sin(angle - 0.4));
      ctx.lineTo(x1 - 6 * Math.cos(angle + 0.4), y1 - 6 * Math.sin(angle + 0.4));
      ctx.fill();
      stats.arrow = true;
    }
  }

  ctx.restore();
  return stats;
}

/** One-line numeric readout of the decision scores. */
export function scoreText(snap: Snapshot): string {
  const rec = snap.recommendation;
  if (!rec) return "no recommendation yet";
  const parts = Object.entries(rec.scores)
    .map(([name, value]) => `${name} ${value.toFixed(3)}`)
    .join("  ");
  return `recommend ${rec.action}  |  ${parts}`;
}
