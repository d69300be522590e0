/** DOM wiring for the what-if explorer.

Four areas: a knob panel with live estimates, a two-configuration
compare view, a knob profile chart, and the transfer wizard.  All
numbers on screen come from service responses via the view models;
nothing is predicted locally.
*/

import { ApiError, Client } from "./api.js";
import { resolveConfig } from "./config.js";
import { KnobPanel } from "./panel.js";
import type { ExperienceEntry, KnobSpec, QueryLogBody } from "./types.js";
import {
  compareVerdict,
  displayNumber,
  explanationRows,
  profileSegments,
  stepPolyline,
} from "./views.js";
import { runTransfer, type WizardInput } from "./wizard.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) node.textContent = text;
  return node;
}

function need(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id} in index.html`);
  return node;
}

function knobInput(spec: KnobSpec, onChange: (value: number) => void) {
  const row = el("div", { class: "knob-row" });
  row.appendChild(el("label", {}, spec.name));
  const slider = el("input", {
    type: "range",
    min: String(spec.range[0]),
    max: String(spec.range[1]),
    step: spec.kind === "continuous" ? "any" : "1",
    value: String(spec.default),
  });
  const box = el("input", { type: "number", value: String(spec.default) });
  const apply = (raw: string) => {
    const value = Number(raw);
    if (!Number.isFinite(value)) return;
    slider.value = raw;
    box.value = raw;
    onChange(value);
  };
  slider.addEventListener("input", () => apply(slider.value));
  box.addEventListener("change", () => apply(box.value));
  row.appendChild(slider);
  row.appendChild(box);
  return row;
}

function readConfig(raw: string): Record<string, number> {
  const parsed = JSON.parse(raw) as Record<string, unknown>;
  const out: Record<string, number> = {};
  for (const [name, value] of Object.entries(parsed)) {
    if (typeof value !== "number") throw new Error(`${name} is not a number`);
    out[name] = value;
  }
  return out;
}

async function boot(): Promise<void> {
  const client = new Client(resolveConfig().baseUrl);
  const status = need("status");
  const report = (err: unknown) => {
    status.textContent =
      err instanceof ApiError
        ? `service error ${err.code}: ${err.message}`
        : String(err);
  };

  let listing;
  try {
    listing = await client.experiences();
  } catch (err) {
    report(err);
    return;
  }
  if (listing.experiences.length === 0) {
    status.textContent = "repository has no experiences yet";
    return;
  }

  const modelPicker = need("model-picker") as HTMLSelectElement;
  const allModels = [
    ...listing.experiences.map((e: ExperienceEntry) => e.id),
    ...listing.models,
  ];
  for (const id of allModels) {
    modelPicker.appendChild(el("option", { value: id }, id));
  }

  const specs = listing.experiences[0].knobs;
  const prediction = need("prediction");
  const rules = need("rules");
  const panel = new KnobPanel({
    client,
    model: listing.experiences[0].id,
    specs,
    render: (view) => {
      prediction.textContent = view.error
        ? `error: ${view.error}`
        : view.prediction === null
          ? view.pending
            ? "estimating..."
            : "no estimate yet"
          : displayNumber(view.prediction);
      rules.replaceChildren(
        ...explanationRows(view.explanations).map((row) =>
          el("li", {}, `${row.weight}  ${row.text}`),
        ),
      );
    },
  });
  const knobArea = need("knobs");
  for (const spec of specs) {
    knobArea.appendChild(
      knobInput(spec, (value) => panel.setKnob(spec.name, value)),
    );
  }
  modelPicker.addEventListener("change", () =>
    panel.switchModel(modelPicker.value),
  );
  panel.refresh();

  const compareButton = need("compare-run");
  compareButton.addEventListener("click", () => {
    void (async () => {
      try {
        const a = readConfig((need("config-a") as HTMLTextAreaElement).value);
        const b = readConfig((need("config-b") as HTMLTextAreaElement).value);
        const verdict = compareVerdict(
          await client.compare(modelPicker.value, a, b),
        );
        need("compare-a").textContent = verdict.a;
        need("compare-b").textContent = verdict.b;
        need("compare-label").textContent = verdict.label;
        need("compare-a").classList.toggle("winner", verdict.winner === "a");
        need("compare-b").classList.toggle("winner", verdict.winner === "b");
      } catch (err) {
        report(err);
      }
    })();
  });

  const profileKnob = need("profile-knob") as HTMLSelectElement;
  for (const spec of specs) {
    profileKnob.appendChild(el("option", { value: spec.name }, spec.name));
  }
  need("profile-run").addEventListener("click", () => {
    void (async () => {
      try {
        const profile = await client.knobProfile(
          modelPicker.value,
          profileKnob.value,
        );
        const svg = need("profile-chart");
        const points = stepPolyline(profileSegments(profile), 600, 200);
        svg.innerHTML = `<polyline fill="none" stroke="currentColor" points="${points}"/>`;
      } catch (err) {
        report(err);
      }
    })();
  });

  need("transfer-run").addEventListener("click", () => {
    void (async () => {
      try {
        const log = JSON.parse(
          (need("transfer-log") as HTMLTextAreaElement).value,
        ) as QueryLogBody;
        const input: WizardInput = {
          K: Number((need("transfer-k") as HTMLInputElement).value),
          N: Number((need("transfer-n") as HTMLInputElement).value),
          seed: Number((need("transfer-seed") as HTMLInputElement).value),
          fingerprintSource: { kind: "log", log },
          labelSource: {
            kind: "sim",
            scenario: (need("transfer-scenario") as HTMLInputElement).value,
            simSeed: 0,
          },
        };
        status.textContent = "transferring...";
        await runTransfer(client, input, {
          onDone: (modelId) => {
            modelPicker.appendChild(el("option", { value: modelId }, modelId));
            modelPicker.value = modelId;
            panel.switchModel(modelId);
            status.textContent = `switched to ${modelId}`;
          },
        });
      } catch (err) {
        report(err);
      }
    })();
  });
}

void boot();
