/** Pure view models: service payloads in, display data out.

Numbers pass through String() only, which keeps the shortest
round-trip rendering, so what the user reads is what the service sent.
*/

import type {
  CompareResponse,
  Explanation,
  KnobProfile,
} from "./types.js";

export function displayNumber(value: number): string {
  return String(value);
}

export interface ExplanationRow {
  text: string;
  weight: string;
}

/** Rows for the active-rule list, in the server's |weight| order. */
export function explanationRows(explanations: Explanation[]): ExplanationRow[] {
  return explanations.map((e) => ({
    text: e.member === undefined ? e.rule : `[${e.member}] ${e.rule}`,
    weight: displayNumber(e.weight),
  }));
}

export interface CompareVerdict {
  winner: "a" | "b" | null;
  label: string;
  a: string;
  b: string;
}

export function compareVerdict(resp: CompareResponse): CompareVerdict {
  const winner = resp.better === "tie" ? null : resp.better;
  return {
    winner,
    label: winner === null ? "tie" : `configuration ${winner} wins`,
    a: displayNumber(resp.predictions.a),
    b: displayNumber(resp.predictions.b),
  };
}

/** One flat piece of the knob's step curve, in knob units. */
export interface StepSegment {
  x0: number;
  x1: number;
  y: number;
}

export function profileSegments(profile: KnobProfile): StepSegment[] {
  const edges = [profile.lo, ...profile.breakpoints, profile.hi];
  if (profile.values.length !== edges.length - 1) {
    throw new Error("profile values do not match its breakpoints");
  }
  return profile.values.map((y, i) => ({ x0: edges[i], x1: edges[i + 1], y }));
}

/** SVG polyline points for the step curve in a width x height viewport,
y axis inverted for screen coordinates. A flat curve is centered. */
export function stepPolyline(
  segments: StepSegment[],
  width: number,
  height: number,
): string {
  if (segments.length === 0) return "";
  const xLo = segments[0].x0;
  const xHi = segments[segments.length - 1].x1;
  const ys = segments.map((s) => s.y);
  const yLo = Math.min(...ys);
  const yHi = Math.max(...ys);
  const toX = (x: number) => ((x - xLo) / (xHi - xLo)) * width;
  const toY = (y: number) =>
    yHi === yLo ? height / 2 : height - ((y - yLo) / (yHi - yLo)) * height;
  const points: string[] = [];
  for (const s of segments) {
    points.push(`${toX(s.x0)},${toY(s.y)}`);
    points.push(`${toX(s.x1)},${toY(s.y)}`);
  }
  return points.join(" ");
}
