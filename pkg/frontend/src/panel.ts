/** Knob panel controller: holds the edited configuration, asks the
service for an estimate after each change, and pushes display states to
a render sink.  DOM-free so the whole flow is testable.

Edits inside the debounce window collapse into one request; a response
renders only if no newer request was issued after it (stale responses
are discarded by sequence number).
*/

import { Client } from "./api.js";
import { RequestSequence, debounce } from "./state.js";
import type { Explanation, KnobSpec } from "./types.js";

export interface PanelView {
  model: string;
  values: Record<string, number>;
  pending: boolean;
  prediction: number | null;
  explanations: Explanation[];
  error: string | null;
}

export interface PanelOptions {
  client: Client;
  model: string;
  specs: KnobSpec[];
  render: (view: PanelView) => void;
  debounceMs?: number;
}

export class KnobPanel {
  private readonly client: Client;
  private readonly render: (view: PanelView) => void;
  private readonly sequence = new RequestSequence();
  private readonly scheduleEstimate: () => void;
  private model: string;
  private values: Record<string, number>;
  private last: PanelView;

  constructor(options: PanelOptions) {
    this.client = options.client;
    this.render = options.render;
    this.model = options.model;
    this.values = Object.fromEntries(
      options.specs.map((s) => [s.name, s.default]),
    );
    this.last = {
      model: this.model,
      values: { ...this.values },
      pending: false,
      prediction: null,
      explanations: [],
      error: null,
    };
    this.scheduleEstimate = debounce(
      () => void this.fetchEstimate(),
      options.debounceMs ?? 150,
    );
  }

  view(): PanelView {
    return this.last;
  }

  setKnob(name: string, value: number): void {
    if (!(name in this.values)) {
      throw new Error(`unknown knob ${name}`);
    }
    this.values[name] = value;
    this.push({ pending: true });
    this.scheduleEstimate();
  }

  /** Point the panel at another model (e.g. a fresh transfer) and
  refresh immediately; pending older responses become stale. */
  switchModel(model: string): void {
    this.model = model;
    this.push({ pending: true, prediction: null, explanations: [] });
    void this.fetchEstimate();
  }

  refresh(): void {
    this.push({ pending: true });
    void this.fetchEstimate();
  }

  private push(patch: Partial<PanelView>): void {
    this.last = {
      ...this.last,
      model: this.model,
      values: { ...this.values },
      ...patch,
    };
    this.render(this.last);
  }

  private async fetchEstimate(): Promise<void> {
    const token = this.sequence.next();
    try {
      const response = await this.client.estimate(this.model, {
        ...this.values,
      });
      if (!this.sequence.isCurrent(token)) return;
      this.push({
        pending: false,
        prediction: response.prediction,
        explanations: response.explanations,
        error: null,
      });
    } catch (err) {
      if (!this.sequence.isCurrent(token)) return;
      this.push({
        pending: false,
        error: err instanceof Error ? err.message : String(err),
      });
    }
  }
}
