import { describe, expect, it } from "vitest";

import { ApiError, Client } from "../src/api.js";

interface Call {
  url: string;
  init?: RequestInit;
}

function fakeService(status: number, body: unknown) {
  const calls: Call[] = [];
  const fetchFn = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    return {
      ok: status >= 200 && status < 300,
      status,
      json: async () => body,
    };
  };
  return { calls, client: new Client("http://svc", fetchFn) };
}

describe("client", () => {
  it("posts estimate requests with the canonical config body", async () => {
    const payload = { prediction: 1.25, explanations: [] };
    const { calls, client } = fakeService(200, payload);
    const result = await client.estimate("tpcc-2", { work_mem: 64 });
    expect(result).toEqual(payload);
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("http://svc/v1/estimate");
    expect(calls[0].init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      model: "tpcc-2",
      config: { assignments: { work_mem: 64 } },
    });
  });

  it("posts both compare configurations", async () => {
    const payload = { better: "a", predictions: { a: 2, b: 1 } };
    const { calls, client } = fakeService(200, payload);
    await client.compare("m", { a: 1 }, { a: 2 });
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      model: "m",
      config_a: { assignments: { a: 1 } },
      config_b: { assignments: { a: 2 } },
    });
  });

  it("encodes knob profile query parameters", async () => {
    const { calls, client } = fakeService(200, {
      model: "m",
      knob: "work mem",
      lo: 0,
      hi: 1,
      breakpoints: [],
      values: [1],
    });
    await client.knobProfile("m", "work mem");
    expect(calls[0].url).toBe("http://svc/v1/knob-profile?model=m&knob=work+mem");
  });

  it("surfaces the error envelope as ApiError", async () => {
    const { client } = fakeService(422, {
      code: 422,
      message: "unknown knobs: zz",
    });
    const failure = client.estimate("m", { zz: 1 });
    await expect(failure).rejects.toBeInstanceOf(ApiError);
    await expect(failure).rejects.toMatchObject({
      code: 422,
      message: "unknown knobs: zz",
    });
  });

  it("falls back to the HTTP status when the envelope is missing", async () => {
    const { client } = fakeService(500, {});
    await expect(client.experiences()).rejects.toMatchObject({
      code: 500,
      message: "HTTP 500",
    });
  });
});
