/** Funnel plot geometry.
 *
 * Turns a simulate response into per-edge SVG path data: the +-rho(t)
 * envelope and one error curve per dimension, scaled into a fixed
 * viewport. An edge is marked violating iff the summary's violation
 * events name it — those come from the exact per-step scan, so the flag
 * does not depend on the downsampled series.
 */

import type { SimulateResponse } from "./types.js";

export interface FunnelPlot {
  edgeId: number;
  violating: boolean;
  upperPath: string;
  lowerPath: string;
  curvePaths: string[];
  /** Symmetric y range the paths were scaled with. */
  yMax: number;
}

export interface PlotGeometry {
  width: number;
  height: number;
  pad: number;
}

export const DEFAULT_GEOMETRY: PlotGeometry = { width: 320, height: 160, pad: 10 };

function buildPath(xs: number[], ys: number[]): string {
  const parts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    parts.push(`${i === 0 ? "M" : "L"}${round2(xs[i])},${round2(ys[i])}`);
  }
  return parts.join("");
}

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}

/** Parse "Mx,yLx,y..." back into points; the tests use this to inspect
 * geometry without re-deriving the scaling. */
export function pathPoints(path: string): [number, number][] {
  const out: [number, number][] = [];
  for (const m of path.matchAll(/[ML](-?[\d.]+),(-?[\d.]+)/g)) {
    out.push([Number(m[1]), Number(m[2])]);
  }
  return out;
}

export function funnelPlots(
  sim: SimulateResponse,
  geometry: PlotGeometry = DEFAULT_GEOMETRY,
): FunnelPlot[] {
  const { width, height, pad } = geometry;
  const { times, edges } = sim.series;
  const violating = new Set(sim.summary.violations.map((v) => v.edge));

  const t0 = times[0] ?? 0;
  const t1 = times[times.length - 1] ?? 1;
  const span = t1 - t0 || 1;
  const xs = times.map((t) => pad + ((t - t0) / span) * (width - 2 * pad));
  const center = height / 2;
  const half = height / 2 - pad;

  const edgeIds = Object.keys(edges)
    .map(Number)
    .sort((a, b) => a - b);

  return edgeIds.map((edgeId) => {
    const data = edges[String(edgeId)];
    let yMax = 0;
    for (const r of data.radius) yMax = Math.max(yMax, Math.abs(r));
    for (const dim of data.errors) {
      for (const v of dim) yMax = Math.max(yMax, Math.abs(v));
    }
    if (yMax === 0) yMax = 1;

    const toY = (v: number) => center - (v / yMax) * half;
    return {
      edgeId,
      violating: violating.has(edgeId),
      upperPath: buildPath(xs, data.radius.map(toY)),
      lowerPath: buildPath(xs, data.radius.map((r) => toY(-r))),
      curvePaths: data.errors.map((dim) => buildPath(xs, dim.map(toY))),
      yMax,
    };
  });
}
