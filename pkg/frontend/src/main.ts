/** Browser bootstrap: wires the API client, event stream, reducer, and
 * renderer to the DOM. Everything testable lives in the other modules;
 * this file only adapts them to elements and timers.
 */

import { ApiClient, ApiError } from "./api.js";
import { EventStream } from "./sse.js";
import { actionAvailability, canvasSize } from "./geometry.js";
import { renderSnapshot, scoreText } from "./render.js";
import { canSubmit, initialState, reduce, type ViewState, type ViewAction } from "./state.js";
import type { Snapshot, StepAction, StepEventData, EndEventData } from "./types.js";
import { STEP_ACTIONS } from "./types.js";

const CELL = 10;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class App {
  private state: ViewState = initialState();
  private api = new ApiClient("");
  private stream: EventStream | null = null;
  private snapshotCache = new Map<number, Snapshot>();
  private autoTimer: number | null = null;

  private canvas = el<HTMLCanvasElement>("map");
  private misfitCanvas = el<HTMLCanvasElement>("misfits");
  private status = el<HTMLDivElement>("status");
  private scores = el<HTMLDivElement>("scores");
  private banner = el<HTMLDivElement>("banner");
  private toasts = el<HTMLDivElement>("toasts");
  private scrub = el<HTMLInputElement>("scrub");

  constructor() {
    el<HTMLButtonElement>("create").addEventListener("click", () => {
      void this.createRun();
    });
    for (const action of STEP_ACTIONS) {
      el<HTMLButtonElement>(`act-${action}`).addEventListener("click", () => {
        void this.submit(action);
      });
    }
    this.scrub.addEventListener("input", () => {
      this.dispatch({ type: "scrub", step: Number(this.scrub.value) });
      void this.refresh();
    });
    el<HTMLButtonElement>("follow").addEventListener("click", () => {
      this.dispatch({ type: "follow-live" });
      void this.refresh();
    });
    for (const layer of ["fan", "truth", "reward"] as const) {
      el<HTMLInputElement>(`toggle-${layer}`).addEventListener("change", () => {
        this.dispatch({ type: "toggle", layer });
        void this.refresh();
      });
    }
    el<HTMLInputElement>("autoplay").addEventListener("change", (ev) => {
      const on = (ev.target as HTMLInputElement).checked;
      this.dispatch({
        type: "playback",
        mode: on ? { kind: "auto", intervalMs: 1200 } : { kind: "manual" },
      });
      this.applyPlayback();
    });
    el<HTMLButtonElement>("export").addEventListener("click", () => {
      void this.download();
    });
  }

  private dispatch(action: ViewAction): void {
    this.state = reduce(this.state, action);
    this.syncControls();
  }

  private async createRun(): Promise<void> {
    const config: Record<string, unknown> = {};
    const seed = el<HTMLInputElement>("cfg-seed").value;
    const members = el<HTMLInputElement>("cfg-members").value;
    const steps = el<HTMLInputElement>("cfg-steps").value;
    if (seed !== "") config.seed = Number(seed);
    if (members !== "") config.ensemble_size = Number(members);
    if (steps !== "") config.max_steps = Number(steps);
    if (el<HTMLInputElement>("cfg-debug").checked) config.debug = true;
    try {
      const info = await this.api.createRun(config);
      this.snapshotCache.clear();
      this.stream?.stop();
      this.dispatch({ type: "run-created", runId: info.run_id });
      this.openStream(info.run_id);
      await this.refresh();
    } catch (error) {
      this.toast(error);
    }
  }

  private openStream(runId: string): void {
    this.stream = new EventStream(this.api.eventsUrl(runId), {
      onEvent: (event) => {
        if (event.event === "step") {
          const data = JSON.parse(event.data) as StepEventData;
          this.dispatch({ type: "step-event", data });
        } else if (event.event === "end") {
          const data = JSON.parse(event.data) as EndEventData;
          this.dispatch({ type: "end-event", data });
          this.applyPlayback();
        }
        void this.refresh();
      },
      onError: () => undefined,
    });
    void this.stream.start();
  }

  private async submit(action: StepAction): Promise<void> {
    if (!this.state.runId || !canSubmit(this.state)) return;
    this.dispatch({ type: "submit-started" });
    try {
      await this.api.postStep(this.state.runId, action);
      this.dispatch({ type: "submit-finished" });
    } catch (error) {
      this.dispatch({
        type: "submit-finished",
        error: error instanceof ApiError ? error.message : String(error),
      });
      this.renderToasts();
    }
  }

  private applyPlayback(): void {
    if (this.autoTimer !== null) {
      window.clearInterval(this.autoTimer);
      this.autoTimer = null;
    }
    if (this.state.playback.kind === "auto" && this.state.status === "active") {
      this.autoTimer = window.setInterval(() => {
        void this.submit("accept");
      }, this.state.playback.intervalMs);
    }
  }

  private async snapshotAt(step: number): Promise<Snapshot | null> {
    if (!this.state.runId) return null;
    const cached = this.snapshotCache.get(step);
    if (cached && !(cached.status === "active" && step === this.state.latestStep)) {
      return cached;
    }
    const snap = await this.api.getState(this.state.runId, step);
    this.snapshotCache.set(step, snap);
    return snap;
  }

  private async refresh(): Promise<void> {
    try {
      const snap = await this.snapshotAt(this.state.currentStep);
      if (!snap) return;
      this.draw(snap);
    } catch (error) {
      this.banner.textContent = `snapshot failed: ${String(error)}`;
      this.banner.hidden = false;
    }
  }

  private draw(snap: Snapshot): void {
    const [w, h] = canvasSize(snap.geometry, CELL);
    if (this.canvas.width !== w) this.canvas.width = w;
    if (this.canvas.height !== h) this.canvas.height = h;
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    renderSnapshot(ctx, snap, {
      cellSize: CELL,
      showFan: this.state.showFan,
      showTruth: this.state.showTruth,
      showReward: this.state.showReward,
    });
    this.scores.textContent = scoreText(snap);
    this.drawMisfits(snap);
    this.updateButtons(snap);
    const live = this.state.followLive ? " (live)" : "";
    this.status.textContent =
      `run ${snap.run_id}  step ${snap.step}/${this.state.latestStep}${live}  ${snap.status}`;
    if (snap.status === "terminated" && snap.score) {
      const s = snap.score;
      this.banner.hidden = false;
      this.banner.textContent =
        `${snap.termination_reason}: achieved ${s.achieved.toFixed(2)}, ` +
        `oracle ${s.oracle.toFixed(2)}, straight ${s.straight_baseline.toFixed(2)}`;
    } else {
      this.banner.hidden = true;
    }
  }

  private drawMisfits(snap: Snapshot): void {
    const ctx = this.misfitCanvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.misfitCanvas;
    ctx.clearRect(0, 0, width, height);
    const series = snap.misfits;
    if (series.length === 0) return;
    const top = Math.max(...series.map((m) => Math.max(m.prior, m.posterior)), 1);
    const x = (i: number) => (i / Math.max(1, series.length - 1)) * (width - 8) + 4;
    const y = (v: number) => height - 4 - (Math.log1p(v) / Math.log1p(top)) * (height - 8);
    for (const [key, color] of [["prior", "#888"], ["posterior", "#4cf"]] as const) {
      ctx.strokeStyle = color;
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      series.forEach((m, i) => {
        if (i === 0) ctx.moveTo(x(i), y(m[key]));
        else ctx.lineTo(x(i), y(m[key]));
      });
      ctx.stroke();
    }
  }

  private updateButtons(snap: Snapshot): void {
    const live = this.state.currentStep === this.state.latestStep;
    const enabled = actionAvailability(snap);
    for (const action of STEP_ACTIONS) {
      el<HTMLButtonElement>(`act-${action}`).disabled =
        !live || this.state.inFlight || !enabled[action];
    }
  }

  private syncControls(): void {
    this.scrub.max = String(this.state.latestStep);
    if (this.state.followLive) this.scrub.value = String(this.state.currentStep);
  }

  private async download(): Promise<void> {
    if (!this.state.runId) return;
    try {
      const bytes = await this.api.exportRun(this.state.runId);
      const blob = new Blob([bytes.buffer as ArrayBuffer], { type: "application/x-ndjson" });
      const url = URL.createObjectURL(blob);
      const link = document.createElement("a");
      link.href = url;
      link.download = `${this.state.runId}.ndjson`;
      link.click();
      URL.revokeObjectURL(url);
    } catch (error) {
      this.toast(error);
    }
  }

  private toast(error: unknown): void {
    const message = error instanceof ApiError ? error.message : String(error);
    this.dispatch({ type: "submit-finished", error: message });
    this.renderToasts();
  }

  private renderToasts(): void {
    this.toasts.textContent = this.state.toasts.join(" | ");
    if (this.state.toasts.length > 0) {
      window.setTimeout(() => {
        this.dispatch({ type: "toast-dismissed" });
        this.renderToasts();
      }, 4000);
    }
  }
}

if (typeof document !== "undefined") {
  window.addEventListener("DOMContentLoaded", () => new App());
}
