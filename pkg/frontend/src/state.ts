/** View state and its reducer.
 *
 * Pure state transitions so the invariants are testable without a DOM:
 * the viewed step never exceeds the latest step, a terminated run stays
 * terminated, and at most one step submission is in flight.
 */

import type { EndEventData, RunStatus, StepEventData } from "./types.js";

export type PlaybackMode =
  | { kind: "manual" }
  | { kind: "auto"; intervalMs: number };

export interface ViewState {
  runId: string | null;
  currentStep: number;
  latestStep: number;
  status: "idle" | RunStatus;
  terminationReason: string | null;
  /** Keep the view pinned to the newest step as events arrive. */
  followLive: boolean;
  showFan: boolean;
  showTruth: boolean;
  showReward: boolean;
  playback: PlaybackMode;
  inFlight: boolean;
  toasts: string[];
}

export type ViewAction =
  | { type: "run-created"; runId: string }
  | { type: "step-event"; data: StepEventData }
  | { type: "end-event"; data: EndEventData }
  | { type: "scrub"; step: number }
  | { type: "follow-live" }
  | { type: "toggle"; layer: "fan" | "truth" | "reward" }
  | { type: "playback"; mode: PlaybackMode }
  | { type: "submit-started" }
  | { type: "submit-finished"; error?: string }
  | { type: "toast-dismissed" };

export function initialState(): ViewState {
  return {
    runId: null,
    currentStep: 0,
    latestStep: 0,
    status: "idle",
    terminationReason: null,
    followLive: true,
    showFan: true,
    showTruth: false,
    showReward: false,
    playback: { kind: "manual" },
    inFlight: false,
    toasts: [],
  };
}

function clampStep(step: number, latest: number): number {
  return Math.min(Math.max(0, Math.floor(step)), latest);
}

export function reduce(state: ViewState, action: ViewAction): ViewState {
  switch (action.type) {
    case "run-created":
      return { ...initialState(), runId: action.runId, status: "active" };

    case "step-event": {
      const latest = Math.max(state.latestStep, action.data.snapshot_step);
      const terminated = action.data.terminated || state.status === "terminated";
      return {
        ...state,
        latestStep: latest,
        currentStep: state.followLive ? latest : state.currentStep,
        status: terminated ? "terminated" : state.status,
        playback: terminated ? { kind: "manual" } : state.playback,
      };
    }

    case "end-event":
      return {
        ...state,
        status: "terminated",
        terminationReason: action.data.reason,
        playback: { kind: "manual" },
      };

    case "scrub": {
      const step = clampStep(action.step, state.latestStep);
      return { ...state, currentStep: step, followLive: step === state.latestStep };
    }

    case "follow-live":
      return { ...state, followLive: true, currentStep: state.latestStep };

    case "toggle":
      if (action.layer === "fan") return { ...state, showFan: !state.showFan };
      if (action.layer === "truth") return { ...state, showTruth: !state.showTruth };
      return { ...state, showReward: !state.showReward };

    case "playback":
      return state.status === "terminated"
        ? { ...state, playback: { kind: "manual" } }
        : { ...state, playback: action.mode };

    case "submit-started":
      if (state.inFlight || state.status !== "active") return state;
      return { ...state, inFlight: true };

    case "submit-finished": {
      const toasts = action.error ? [...state.toasts, action.error] : state.toasts;
      return { ...state, inFlight: false, toasts };
    }

    case "toast-dismissed":
      return { ...state, toasts: state.toasts.slice(1) };
  }
}

/** True when the reducer accepted the submit (used as the single-flight gate). */
export function canSubmit(state: ViewState): boolean {
  return state.status === "active" && !state.inFlight;
}
