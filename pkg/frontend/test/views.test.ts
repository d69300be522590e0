import { describe, expect, it } from "vitest";

import type { CompareResponse, KnobProfile } from "../src/types.js";
import {
  compareVerdict,
  displayNumber,
  explanationRows,
  profileSegments,
  stepPolyline,
} from "../src/views.js";

describe("displayNumber", () => {
  it("keeps the shortest round-trip rendering", () => {
    for (const value of [1.25, 0.1 + 0.2, 1.0000000000000002, 42, -0.5]) {
      expect(displayNumber(value)).toBe(String(value));
      expect(Number(displayNumber(value))).toBe(value);
    }
  });
});

describe("compare verdict", () => {
  const response = (better: CompareResponse["better"], a: number, b: number) =>
    compareVerdict({ better, predictions: { a, b } });

  it("matches the sign of the prediction difference", () => {
    const up = response("a", 1.5, 1.2);
    expect(up.winner).toBe("a");
    expect(up.a).toBe("1.5");
    expect(up.b).toBe("1.2");

    const down = response("b", 0.9, 1.1);
    expect(down.winner).toBe("b");

    const even = response("tie", 1.0, 1.0);
    expect(even.winner).toBeNull();
    expect(even.label).toBe("tie");
  });
});

describe("explanation rows", () => {
  it("keeps server order and tags member rules", () => {
    const rows = explanationRows([
      { rule: "a > 3", weight: -0.5, tree: 1, leaf: 2 },
      { rule: "always", weight: 0.25, tree: 0, leaf: 0, member: "tpcc-4" },
    ]);
    expect(rows).toEqual([
      { text: "a > 3", weight: "-0.5" },
      { text: "[tpcc-4] always", weight: "0.25" },
    ]);
  });
});

describe("profile step curve", () => {
  const profile: KnobProfile = {
    model: "m",
    knob: "work_mem",
    lo: 0,
    hi: 100,
    breakpoints: [40, 60],
    values: [1, 2, 3],
  };

  it("builds one segment per region between breakpoints", () => {
    expect(profileSegments(profile)).toEqual([
      { x0: 0, x1: 40, y: 1 },
      { x0: 40, x1: 60, y: 2 },
      { x0: 60, x1: 100, y: 3 },
    ]);
  });

  it("uses the response values verbatim as segment heights", () => {
    const values = [1.0625, 0.9375, 1.25];
    const segments = profileSegments({ ...profile, values });
    expect(segments.map((s) => s.y)).toEqual(values);
  });

  it("handles a flat profile with no breakpoints", () => {
    const flat = profileSegments({
      ...profile,
      breakpoints: [],
      values: [1.5],
    });
    expect(flat).toEqual([{ x0: 0, x1: 100, y: 1.5 }]);
    expect(stepPolyline(flat, 600, 200)).toBe("0,100 600,100");
  });

  it("rejects values that disagree with the breakpoints", () => {
    expect(() =>
      profileSegments({ ...profile, values: [1, 2] }),
    ).toThrow("profile values do not match");
  });

  it("maps segments into viewport coordinates", () => {
    const points = stepPolyline(profileSegments(profile), 100, 100);
    expect(points).toBe("0,100 40,100 40,50 60,50 60,0 100,0");
  });
});
