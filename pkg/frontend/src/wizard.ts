/** Transfer wizard: validate the user's choices, submit the transfer,
poll until the repository lists the new model, then hand its id over so
the panel can switch to it. */

import { Client } from "./api.js";
import { delay } from "./state.js";
import type { Fingerprint, QueryLogBody, TransferRequest } from "./types.js";

export type FingerprintSource =
  | { kind: "log"; log: QueryLogBody }
  | { kind: "fingerprint"; fingerprint: Fingerprint };

export type LabelSource =
  | { kind: "sim"; scenario: string; simSeed: number }
  | { kind: "labels"; labels: unknown };

export interface WizardInput {
  K: number;
  N: number;
  seed: number;
  fingerprintSource: FingerprintSource;
  labelSource: LabelSource;
}

export function buildTransferRequest(input: WizardInput): TransferRequest {
  if (!Number.isInteger(input.K) || input.K < 1) {
    throw new Error("K must be a positive integer");
  }
  if (!Number.isInteger(input.N) || input.N < 4) {
    throw new Error("N must be an integer of at least 4");
  }
  if (!Number.isInteger(input.seed)) {
    throw new Error("seed must be an integer");
  }
  const request: TransferRequest = {
    K: input.K,
    N: input.N,
    seed: input.seed,
  };
  if (input.fingerprintSource.kind === "log") {
    request.log = input.fingerprintSource.log;
  } else {
    request.fingerprint = input.fingerprintSource.fingerprint;
  }
  if (input.labelSource.kind === "sim") {
    request.sim_scenario = input.labelSource.scenario;
    request.sim_seed = input.labelSource.simSeed;
  } else {
    request.labels = input.labelSource.labels;
  }
  return request;
}

export interface RunOptions {
  pollIntervalMs?: number;
  maxPolls?: number;
  onDone: (modelId: string) => void;
}

export async function runTransfer(
  client: Client,
  input: WizardInput,
  options: RunOptions,
): Promise<string> {
  const { model_id } = await client.transfer(buildTransferRequest(input));
  const interval = options.pollIntervalMs ?? 500;
  const maxPolls = options.maxPolls ?? 20;
  for (let attempt = 0; attempt < maxPolls; attempt++) {
    const listing = await client.experiences();
    if (listing.models.includes(model_id)) {
      options.onDone(model_id);
      return model_id;
    }
    await delay(interval);
  }
  throw new Error(`transferred model ${model_id} did not appear`);
}
