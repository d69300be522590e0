/** Payload shapes of the /v1 service, mirrored field for field. */

export interface KnobSpec {
  name: string;
  kind: "continuous" | "integer" | "ordinal";
  range: [number, number];
  default: number;
  levels: number[];
}

export interface Fingerprint {
  suid: number[];
  ops: number[];
}

export interface QueryLogBody {
  suid_counts: number[];
  op_counts: number[];
}

export interface ExperienceEntry {
  id: string;
  fingerprint: Fingerprint;
  knobs: KnobSpec[];
  rule_count: number;
}

export interface ExperiencesResponse {
  experiences: ExperienceEntry[];
  models: string[];
}

export interface Explanation {
  rule: string;
  weight: number;
  tree: number;
  leaf: number;
  /** Present only on transferred models: which member the rule came from. */
  member?: string;
}

export interface EstimateResponse {
  prediction: number;
  explanations: Explanation[];
}

export interface CompareResponse {
  better: "a" | "b" | "tie";
  predictions: { a: number; b: number };
}

export interface KnobProfile {
  model: string;
  knob: string;
  lo: number;
  hi: number;
  breakpoints: number[];
  values: number[];
}

export interface TransferRequest {
  K: number;
  N: number;
  seed: number;
  log?: QueryLogBody;
  fingerprint?: Fingerprint;
  labels?: unknown;
  sim_scenario?: string;
  sim_seed?: number;
}

export interface TransferResponse {
  model_id: string;
}
