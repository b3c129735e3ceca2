import { describe, expect, it } from "vitest";

import { STOPS, cssColor, probabilityColor } from "../src/colormap.js";

describe("probabilityColor", () => {
  it("hits the anchor stops exactly", () => {
    for (const [x, rgb] of STOPS) {
      expect(probabilityColor(x)).toEqual(rgb);
    }
  });

  it("clamps out-of-range and non-finite inputs", () => {
    expect(probabilityColor(-0.5)).toEqual(STOPS[0]![1]);
    expect(probabilityColor(1.5)).toEqual(STOPS[STOPS.length - 1]![1]);
    expect(probabilityColor(Number.NaN)).toEqual(STOPS[0]![1]);
    expect(probabilityColor(Number.POSITIVE_INFINITY)).toEqual(
      STOPS[STOPS.length - 1]![1],
    );
  });

  it("interpolates midway between stops", () => {
    const [r, g, b] = probabilityColor(0.25);
    const [r0, g0, b0] = STOPS[0]![1];
    const [r1, g1, b1] = STOPS[1]![1];
    expect(r).toBe(Math.round((r0 + r1) / 2));
    expect(g).toBe(Math.round((g0 + g1) / 2));
    expect(b).toBe(Math.round((b0 + b1) / 2));
  });

  it("ramps monotonically toward sand yellow in the red channel", () => {
    let prev = -1;
    for (let i = 0; i <= 100; i++) {
      const [r] = probabilityColor(i / 100);
      expect(r).toBeGreaterThanOrEqual(prev);
      prev = r;
    }
  });

  it("always returns integer channels in [0, 255]", () => {
    for (let i = 0; i <= 50; i++) {
      for (const ch of probabilityColor(i / 50)) {
        expect(Number.isInteger(ch)).toBe(true);
        expect(ch).toBeGreaterThanOrEqual(0);
        expect(ch).toBeLessThanOrEqual(255);
      }
    }
  });
});

describe("cssColor", () => {
  it("formats as an rgb() string", () => {
    expect(cssColor(0)).toBe("rgb(22,38,77)");
    expect(cssColor(1)).toBe("rgb(240,205,85)");
    expect(cssColor(0.5)).toMatch(/^rgb\(\d+,\d+,\d+\)$/);
  });
});
