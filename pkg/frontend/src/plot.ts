/**
 * Minimal SVG curve plot: per-structure polylines, y autoscaled over all
 * channels, plus a vertical cursor at the animation's current frame.
 */

import type { StructureCurve } from "./api.js";

export interface PlotGeometry {
  width: number;
  height: number;
  padLeft: number;
  padRight: number;
  padTop: number;
  padBottom: number;
}

export const DEFAULT_GEOMETRY: PlotGeometry = {
  width: 460,
  height: 280,
  padLeft: 44,
  padRight: 10,
  padTop: 10,
  padBottom: 24,
};

export const STRUCTURE_COLORS: Record<string, string> = {
  lv_blood: "#d43d3d",
  lv_myo: "#3dae4e",
  rv_blood: "#4f74e3",
  aorta: "#d43d3d",
};

export function xForFrame(t: number, frames: number, g: PlotGeometry): number {
  const span = g.width - g.padLeft - g.padRight;
  if (frames <= 1) return g.padLeft;
  return g.padLeft + (t / (frames - 1)) * span;
}

export function yForValue(v: number, lo: number, hi: number, g: PlotGeometry): number {
  const span = g.height - g.padTop - g.padBottom;
  if (hi <= lo) return g.padTop + span / 2;
  return g.padTop + (1 - (v - lo) / (hi - lo)) * span;
}

export function valueRange(curves: StructureCurve[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const c of curves) {
    for (const v of c.values) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  if (!isFinite(lo)) return [0, 1];
  if (lo === hi) return [lo - 0.5, hi + 0.5];
  return [lo, hi];
}

export function polylinePoints(
  curve: StructureCurve,
  frames: number,
  lo: number,
  hi: number,
  g: PlotGeometry = DEFAULT_GEOMETRY,
): string {
  return curve.values
    .map((v, t) => `${xForFrame(t, frames, g).toFixed(1)},${yForValue(v, lo, hi, g).toFixed(1)}`)
    .join(" ");
}

/** Full SVG markup for the curves panel. */
export function renderPlotSvg(
  curves: StructureCurve[],
  frames: number,
  cursorFrame: number,
  g: PlotGeometry = DEFAULT_GEOMETRY,
): string {
  const [lo, hi] = valueRange(curves);
  const lines = curves
    .map((c) => {
      const color = STRUCTURE_COLORS[c.name] ?? "#888";
      return `<polyline fill="none" stroke="${color}" stroke-width="1.6" points="${polylinePoints(c, frames, lo, hi, g)}"/>`;
    })
    .join("");
  const cx = xForFrame(cursorFrame, frames, g).toFixed(1);
  const unit = curves.length > 0 ? curves[0].unit : "";
  const legend = curves
    .map((c, i) => {
      const color = STRUCTURE_COLORS[c.name] ?? "#888";
      const y = g.padTop + 14 + i * 14;
      return (
        `<rect x="${g.padLeft + 6}" y="${y - 8}" width="9" height="9" fill="${color}"/>` +
        `<text x="${g.padLeft + 19}" y="${y}" font-size="11">${c.name}</text>`
      );
    })
    .join("");
  return (
    `<svg viewBox="0 0 ${g.width} ${g.height}" xmlns="http://www.w3.org/2000/svg">` +
    `<rect x="0" y="0" width="${g.width}" height="${g.height}" fill="#fcfcfc"/>` +
    `<text x="4" y="${g.padTop + 10}" font-size="10" fill="#555">${unit}</text>` +
    lines +
    `<line x1="${cx}" y1="${g.padTop}" x2="${cx}" y2="${g.height - g.padBottom}" ` +
    `stroke="#222" stroke-dasharray="3,2"/>` +
    legend +
    `</svg>`
  );
}
