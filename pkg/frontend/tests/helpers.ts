/** Shared test doubles: a recording canvas context, snapshot builders,
 * and a scripted fetch for exercising the SSE client offline. */

import type { Ctx2D } from "../src/render.js";
import type { Snapshot } from "../src/types.js";

export interface FillCall {
  x: number;
  y: number;
  w: number;
  h: number;
  style: string;
  alpha: number;
}

/** Records every draw call so tests can assert on what was painted. */
export class RecordingCtx implements Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern = "";
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  lineWidth = 1;
  globalAlpha = 1;
  font = "";

  fills: FillCall[] = [];
  strokeRects: FillCall[] = [];
  strokes = 0;
  pathFills = 0;
  arcs = 0;
  texts: string[] = [];
  clears = 0;
  dashes: number[][] = [];
  saves = 0;
  restores = 0;

  clearRect(): void {
    this.clears++;
  }
  fillRect(x: number, y: number, w: number, h: number): void {
    this.fills.push({ x, y, w, h, style: String(this.fillStyle), alpha: this.globalAlpha });
  }
  strokeRect(x: number, y: number, w: number, h: number): void {
    this.strokeRects.push({ x, y, w, h, style: String(this.strokeStyle), alpha: this.globalAlpha });
  }
  beginPath(): void {}
  moveTo(): void {}
  lineTo(): void {}
  stroke(): void {
    this.strokes++;
  }
  fill(): void {
    this.pathFills++;
  }
  arc(): void {
    this.arcs++;
  }
  fillText(text: string): void {
    this.texts.push(text);
  }
  setLineDash(segments: number[]): void {
    this.dashes.push(segments);
  }
  save(): void {
    this.saves++;
  }
  restore(): void {
    this.restores++;
  }
}

/** Small snapshot with sensible defaults; override any field. */
export function makeSnapshot(overrides: Partial<Snapshot> = {}): Snapshot {
  const nRows = overrides.geometry?.n_rows ?? 4;
  const nCols = overrides.geometry?.n_cols ?? 4;
  const map =
    overrides.map ??
    Array.from({ length: nRows }, (_, r) =>
      Array.from({ length: nCols }, (_, c) => (r + c) / (nRows + nCols - 2)),
    );
  return {
    run_id: "testrun",
    step: 0,
    status: "active",
    termination_reason: null,
    geometry: { n_cols: nCols, n_rows: nRows, dx: 10.0, dz: 0.5 },
    bit: [0, Math.floor(nRows / 2)],
    drilled_path: [[0, Math.floor(nRows / 2)]],
    map,
    recommendation: null,
    applied: null,
    fan: [],
    misfits: [],
    score: null,
    ...overrides,
  };
}

export interface ScriptedConnection {
  /** SSE chunks delivered in order on this connection attempt. */
  chunks: string[];
  /** Keep the connection open after the chunks (until aborted). */
  hang?: boolean;
  status?: number;
}

/** Fetch double that serves one scripted connection per call and records
 * the request headers, so reconnect behavior is observable. */
export function scriptedFetch(script: ScriptedConnection[]): {
  fetchImpl: typeof fetch;
  headers: Array<Record<string, string>>;
} {
  const headers: Array<Record<string, string>> = [];
  const encoder = new TextEncoder();
  const fetchImpl = (async (_url: unknown, init?: RequestInit) => {
    const conn = script[Math.min(headers.length, script.length - 1)]!;
    headers.push({ ...((init?.headers ?? {}) as Record<string, string>) });
    if (conn.status !== undefined && conn.status >= 400) {
      return new Response("", { status: conn.status });
    }
    const body = new ReadableStream<Uint8Array>({
      start(controller) {
        for (const chunk of conn.chunks) controller.enqueue(encoder.encode(chunk));
        if (conn.hang) {
          init?.signal?.addEventListener("abort", () => {
            try {
              controller.error(new Error("connection dropped"));
            } catch {
              // already closed
            }
          });
        } else {
          controller.close();
        }
      },
    });
    return new Response(body, { status: 200 });
  }) as typeof fetch;
  return { fetchImpl, headers };
}
