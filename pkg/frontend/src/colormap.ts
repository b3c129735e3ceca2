/** Probability colormap: dark marine (shale) to sand yellow (pay). */

export type RGB = [number, number, number];

/** Anchor stops of the ramp, position in [0, 1]. */
export const STOPS: Array<[number, RGB]> = [
  [0.0, [22, 38, 77]],
  [0.5, [43, 131, 162]],
  [1.0, [240, 205, 85]],
];

function lerp(a: number, b: number, t: number): number {
  return a + (b - a) * t;
}

/** RGB for one probability; input clamped into [0, 1]. */
export function probabilityColor(p: number): RGB {
  const x = Number.isNaN(p) ? 0 : Math.min(1, Math.max(0, p));
  for (let i = 1; i < STOPS.length; i++) {
    const [x1, c1] = STOPS[i]!;
    const [x0, c0] = STOPS[i - 1]!;
    if (x <= x1) {
      const t = x1 === x0 ? 0 : (x - x0) / (x1 - x0);
      return [
        Math.round(lerp(c0[0], c1[0], t)),
        Math.round(lerp(c0[1], c1[1], t)),
        Math.round(lerp(c0[2], c1[2], t)),
      ];
    }
  }
  return STOPS[STOPS.length - 1]![1];
}

export function cssColor(p: number): string {
  const [r, g, b] = probabilityColor(p);
  return `rgb(${r},${g},${b})`;
}
