import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { Client } from "../src/api.js";
import { KnobPanel, type PanelView } from "../src/panel.js";
import type { EstimateResponse, KnobSpec } from "../src/types.js";
import { displayNumber } from "../src/views.js";

const SPECS: KnobSpec[] = [
  {
    name: "shared_buffers",
    kind: "integer",
    range: [64, 16384],
    default: 128,
    levels: [],
  },
  {
    name: "random_page_cost",
    kind: "continuous",
    range: [1, 8],
    default: 4,
    levels: [],
  },
];

function okResponse(body: unknown) {
  return { ok: true, status: 200, json: async () => body };
}

beforeEach(() => {
  vi.useFakeTimers();
});

afterEach(() => {
  vi.useRealTimers();
});

describe("knob panel", () => {
  it("displays five scripted edits verbatim from the service", async () => {
    const responses: EstimateResponse[] = [0, 1, 2, 3, 4].map((i) => ({
      prediction: 1.05 + i * 0.125 + 1e-9,
      explanations: [
        { rule: `shared_buffers > ${1000 + i}`, weight: 0.25 + i, tree: i, leaf: 2 * i },
      ],
    }));
    const bodies: unknown[] = [];
    const fetchFn = async (_url: string, init?: RequestInit) => {
      bodies.push(JSON.parse(String(init?.body)));
      return okResponse(responses[bodies.length - 1]);
    };
    const rendered: PanelView[] = [];
    const panel = new KnobPanel({
      client: new Client("http://svc", fetchFn),
      model: "tpcc-2",
      specs: SPECS,
      render: (view) => rendered.push(view),
    });

    for (let i = 0; i < 5; i++) {
      panel.setKnob("shared_buffers", 256 + i);
      await vi.advanceTimersByTimeAsync(150);
    }

    const shown = rendered.filter((v) => !v.pending && v.error === null);
    expect(shown).toHaveLength(5);
    expect(shown.map((v) => v.prediction)).toEqual(
      responses.map((r) => r.prediction),
    );
    expect(shown.map((v) => v.explanations)).toEqual(
      responses.map((r) => r.explanations),
    );
    expect(shown.map((v) => displayNumber(v.prediction as number))).toEqual(
      responses.map((r) => String(r.prediction)),
    );
    expect(
      bodies.map(
        (b) =>
          (b as { config: { assignments: Record<string, number> } }).config
            .assignments.shared_buffers,
      ),
    ).toEqual([256, 257, 258, 259, 260]);
  });

  it("coalesces edits inside the debounce window into one request", async () => {
    let requests = 0;
    const fetchFn = async () => {
      requests += 1;
      return okResponse({ prediction: 1, explanations: [] });
    };
    const panel = new KnobPanel({
      client: new Client("http://svc", fetchFn),
      model: "m",
      specs: SPECS,
      render: () => {},
    });
    panel.setKnob("shared_buffers", 200);
    await vi.advanceTimersByTimeAsync(50);
    panel.setKnob("shared_buffers", 300);
    await vi.advanceTimersByTimeAsync(50);
    panel.setKnob("random_page_cost", 2.5);
    await vi.advanceTimersByTimeAsync(150);
    expect(requests).toBe(1);
  });

  it("discards responses superseded by a newer request", async () => {
    type Pending = (value: {
      ok: boolean;
      status: number;
      json(): Promise<unknown>;
    }) => void;
    const pending: Pending[] = [];
    const fetchFn = () =>
      new Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>(
        (resolve) => pending.push(resolve),
      );
    const rendered: PanelView[] = [];
    const panel = new KnobPanel({
      client: new Client("http://svc", fetchFn),
      model: "m",
      specs: SPECS,
      render: (view) => rendered.push(view),
    });

    panel.setKnob("shared_buffers", 100);
    await vi.advanceTimersByTimeAsync(150);
    panel.setKnob("shared_buffers", 200);
    await vi.advanceTimersByTimeAsync(150);
    expect(pending).toHaveLength(2);

    pending[1](okResponse({ prediction: 22, explanations: [] }));
    await vi.advanceTimersByTimeAsync(0);
    pending[0](okResponse({ prediction: 11, explanations: [] }));
    await vi.advanceTimersByTimeAsync(0);

    const predictions = rendered
      .filter((v) => v.prediction !== null)
      .map((v) => v.prediction);
    expect(predictions).toEqual([22]);
    expect(panel.view().prediction).toBe(22);
  });

  it("switching models refreshes immediately and marks old requests stale", async () => {
    const served: Array<{ model: string; prediction: number }> = [];
    const fetchFn = async (_url: string, init?: RequestInit) => {
      const body = JSON.parse(String(init?.body)) as { model: string };
      const prediction = body.model === "t-new" ? 9 : 1;
      served.push({ model: body.model, prediction });
      return okResponse({ prediction, explanations: [] });
    };
    const rendered: PanelView[] = [];
    const panel = new KnobPanel({
      client: new Client("http://svc", fetchFn),
      model: "tpcc-2",
      specs: SPECS,
      render: (view) => rendered.push(view),
    });
    panel.switchModel("t-new");
    await vi.advanceTimersByTimeAsync(0);
    expect(served).toEqual([{ model: "t-new", prediction: 9 }]);
    expect(panel.view().model).toBe("t-new");
    expect(panel.view().prediction).toBe(9);
  });

  it("renders service errors instead of a prediction", async () => {
    const fetchFn = async () => ({
      ok: false,
      status: 422,
      json: async () => ({ code: 422, message: "unknown knobs: zz" }),
    });
    const panel = new KnobPanel({
      client: new Client("http://svc", fetchFn),
      model: "m",
      specs: SPECS,
      render: () => {},
    });
    panel.setKnob("shared_buffers", 512);
    await vi.advanceTimersByTimeAsync(150);
    expect(panel.view().error).toBe("unknown knobs: zz");
    expect(panel.view().pending).toBe(false);
  });

  it("rejects edits to knobs outside the universe", () => {
    const panel = new KnobPanel({
      client: new Client("http://svc", async () => okResponse({})),
      model: "m",
      specs: SPECS,
      render: () => {},
    });
    expect(() => panel.setKnob("nope", 1)).toThrow("unknown knob nope");
  });
});
