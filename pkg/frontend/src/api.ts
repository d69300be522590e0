/** Typed client for the /v1 endpoints.

The UI never computes predictions itself; everything it shows a user
comes back through this module unchanged.
*/

import type {
  CompareResponse,
  EstimateResponse,
  ExperiencesResponse,
  KnobProfile,
  TransferRequest,
  TransferResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly code: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class Client {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body = (await res.json()) as Record<string, unknown>;
    if (!res.ok) {
      const code = typeof body.code === "number" ? body.code : res.status;
      const message =
        typeof body.message === "string" ? body.message : `HTTP ${res.status}`;
      throw new ApiError(code, message);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  estimate(
    model: string,
    assignments: Record<string, number>,
  ): Promise<EstimateResponse> {
    return this.post("/v1/estimate", { model, config: { assignments } });
  }

  compare(
    model: string,
    a: Record<string, number>,
    b: Record<string, number>,
  ): Promise<CompareResponse> {
    return this.post("/v1/compare", {
      model,
      config_a: { assignments: a },
      config_b: { assignments: b },
    });
  }

  experiences(): Promise<ExperiencesResponse> {
    return this.request("/v1/experiences");
  }

  knobProfile(model: string, knob: string): Promise<KnobProfile> {
    const query = new URLSearchParams({ model, knob });
    return this.request(`/v1/knob-profile?${query.toString()}`);
  }

  transfer(req: TransferRequest): Promise<TransferResponse> {
    return this.post("/v1/transfer", req);
  }
}
