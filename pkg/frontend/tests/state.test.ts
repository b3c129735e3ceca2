import { describe, expect, it } from "vitest";

import {
  canSubmit,
  initialState,
  reduce,
  type ViewAction,
  type ViewState,
} from "../src/state.js";
import type { StepEventData } from "../src/types.js";

function stepData(snapshotStep: number, terminated = false): StepEventData {
  return {
    step: snapshotStep - 1,
    snapshot_step: snapshotStep,
    action: "hold",
    applied: "hold",
    bit: [snapshotStep, 32],
    terminated,
  };
}

function endData() {
  return {
    status: "terminated" as const,
    reason: "reached target depth",
    score: { achieved: 1.0, oracle: 2.0, straight_baseline: 0.5 },
  };
}

function apply(state: ViewState, ...actions: ViewAction[]): ViewState {
  return actions.reduce(reduce, state);
}

describe("reduce", () => {
  it("starts idle with nothing to show", () => {
    const s = initialState();
    expect(s.runId).toBeNull();
    expect(s.status).toBe("idle");
    expect(s.currentStep).toBe(0);
    expect(s.latestStep).toBe(0);
    expect(s.followLive).toBe(true);
    expect(canSubmit(s)).toBe(false);
  });

  it("run-created resets everything and goes active", () => {
    const dirty = apply(
      initialState(),
      { type: "run-created", runId: "aaa" },
      { type: "step-event", data: stepData(1) },
      { type: "toggle", layer: "truth" },
      { type: "submit-started" },
    );
    const fresh = reduce(dirty, { type: "run-created", runId: "bbb" });
    expect(fresh.runId).toBe("bbb");
    expect(fresh.status).toBe("active");
    expect(fresh.latestStep).toBe(0);
    expect(fresh.showTruth).toBe(false);
    expect(fresh.inFlight).toBe(false);
  });

  it("step events advance the latest step and follow live", () => {
    const s = apply(
      initialState(),
      { type: "run-created", runId: "r" },
      { type: "step-event", data: stepData(1) },
      { type: "step-event", data: stepData(2) },
    );
    expect(s.latestStep).toBe(2);
    expect(s.currentStep).toBe(2);
    expect(s.followLive).toBe(true);
  });

  it("out-of-order step events never move the latest step backward", () => {
    const s = apply(
      initialState(),
      { type: "run-created", runId: "r" },
      { type: "step-event", data: stepData(3) },
      { type: "step-event", data: stepData(1) },
    );
    expect(s.latestStep).toBe(3);
  });

  it("scrubbing back unfollows; scrubbing to the tip refollows", () => {
    const live = apply(
      initialState(),
      { type: "run-created", runId: "r" },
      { type: "step-event", data: stepData(1) },
      { type: "step-event", data: stepData(2) },
      { type: "step-event", data: stepData(3) },
    );
    const back = reduce(live, { type: "scrub", step: 1 });
    expect(back.currentStep).toBe(1);
    expect(back.followLive).toBe(false);

    const drifted = reduce(back, { type: "step-event", data: stepData(4) });
    expect(drifted.currentStep).toBe(1);
    expect(drifted.latestStep).toBe(4);

    const tip = reduce(drifted, { type: "scrub", step: 4 });
    expect(tip.followLive).toBe(true);
  });

  it("scrub clamps into [0, latest] and floors fractions", () => {
    const live = apply(
      initialState(),
      { type: "run-created", runId: "r" },
      { type: "step-event", data: stepData(3) },
    );
    expect(reduce(live, { type: "scrub", step: -5 }).currentStep).toBe(0);
    expect(reduce(live, { type: "scrub", step: 99 }).currentStep).toBe(3);
    expect(reduce(live, { type: "scrub", step: 1.7 }).currentStep).toBe(1);
  });

  it("follow-live jumps to the newest step", () => {
    const s = apply(
      initialState(),
      { type: "run-created", runId: "r" },
      { type: "step-event", data: stepData(1) },
      { type: "step-event", data: stepData(2) },
      { type: "scrub", step: 0 },
      { type: "follow-live" },
    );
    expect(s.currentStep).toBe(2);
    expect(s.followLive).toBe(true);
  });

  it("the end event terminates the run and cancels autoplay", () => {
    const s = apply(
      initialState(),
      { type: "run-created", runId: "r" },
      { type: "playback", mode: { kind: "auto", intervalMs: 500 } },
      { type: "end-event", data: endData() },
    );
    expect(s.status).toBe("terminated");
    expect(s.terminationReason).toBe("reached target depth");
    expect(s.playback).toEqual({ kind: "manual" });
  });

  it("a terminated run stays terminated through stale step events", () => {
    const s = apply(
      initialState(),
      { type: "run-created", runId: "r" },
      { type: "step-event", data: stepData(5, true) },
      { type: "step-event", data: stepData(4) },
    );
    expect(s.status).toBe("terminated");
  });

  it("autoplay cannot be enabled after termination", () => {
    const s = apply(
      initialState(),
      { type: "run-created", runId: "r" },
      { type: "end-event", data: endData() },
      { type: "playback", mode: { kind: "auto", intervalMs: 100 } },
    );
    expect(s.playback).toEqual({ kind: "manual" });
  });

  it("toggles flip layers independently", () => {
    const s = apply(
      initialState(),
      { type: "toggle", layer: "fan" },
      { type: "toggle", layer: "truth" },
      { type: "toggle", layer: "reward" },
    );
    expect(s.showFan).toBe(false);
    expect(s.showTruth).toBe(true);
    expect(s.showReward).toBe(true);
    expect(apply(s, { type: "toggle", layer: "truth" }).showTruth).toBe(false);
  });
});

describe("submit gating", () => {
  it("admits exactly one in-flight submission", () => {
    const active = reduce(initialState(), { type: "run-created", runId: "r" });
    expect(canSubmit(active)).toBe(true);
    const first = reduce(active, { type: "submit-started" });
    expect(first.inFlight).toBe(true);
    expect(canSubmit(first)).toBe(false);
    const second = reduce(first, { type: "submit-started" });
    expect(second).toBe(first);
  });

  it("refuses submissions when idle or terminated", () => {
    const idle = reduce(initialState(), { type: "submit-started" });
    expect(idle.inFlight).toBe(false);
    const done = apply(
      initialState(),
      { type: "run-created", runId: "r" },
      { type: "end-event", data: endData() },
      { type: "submit-started" },
    );
    expect(done.inFlight).toBe(false);
  });

  it("completion clears the gate; failures queue a toast", () => {
    const busy = apply(
      initialState(),
      { type: "run-created", runId: "r" },
      { type: "submit-started" },
    );
    const ok = reduce(busy, { type: "submit-finished" });
    expect(ok.inFlight).toBe(false);
    expect(ok.toasts).toEqual([]);

    const bad = reduce(busy, { type: "submit-finished", error: "action not admissible" });
    expect(bad.inFlight).toBe(false);
    expect(bad.toasts).toEqual(["action not admissible"]);
    expect(reduce(bad, { type: "toast-dismissed" }).toasts).toEqual([]);
  });
});

describe("invariants under random action sequences", () => {
  it("viewed step never passes the latest; termination is sticky", () => {
    // small deterministic LCG so the fuzz sequence is reproducible
    let rng = 12345;
    const next = (n: number) => {
      rng = (rng * 1103515245 + 12345) % 2147483648;
      return rng % n;
    };
    const actions: Array<() => ViewAction> = [
      () => ({ type: "run-created", runId: `r${next(3)}` }),
      () => ({ type: "step-event", data: stepData(next(12), next(10) === 0) }),
      () => ({ type: "end-event", data: endData() }),
      () => ({ type: "scrub", step: next(20) - 5 }),
      () => ({ type: "follow-live" }),
      () => ({ type: "toggle", layer: (["fan", "truth", "reward"] as const)[next(3)]! }),
      () => ({ type: "playback", mode: { kind: "auto", intervalMs: 100 } }),
      () => ({ type: "submit-started" }),
      () => ({ type: "submit-finished", error: next(2) ? "boom" : undefined }),
      () => ({ type: "toast-dismissed" }),
    ];
    let state = initialState();
    let wasTerminated = false;
    for (let i = 0; i < 500; i++) {
      const action = actions[next(actions.length)]!();
      state = reduce(state, action);
      expect(state.currentStep).toBeGreaterThanOrEqual(0);
      expect(state.currentStep).toBeLessThanOrEqual(state.latestStep);
      if (wasTerminated && action.type !== "run-created") {
        expect(state.status).toBe("terminated");
      }
      wasTerminated = state.status === "terminated";
      if (state.status === "terminated") {
        expect(state.playback).toEqual({ kind: "manual" });
      }
    }
  });
});
