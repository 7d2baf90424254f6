import { GatewayClient } from "./api";
import { bindComparison, renderDemandEditor, renderVerdict } from "./dom";
import { ConsoleApp } from "./state";

const app = new ConsoleApp(new GatewayClient(""));

function grab(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el;
}

document.addEventListener("DOMContentLoaded", async () => {
  const verdictEl = grab("verdict");
  const editorEl = grab("editor");
  const optionsEl = grab("options");
  const seedEl = grab("seed");
  const errorEl = grab("error");
  const modelSel = grab("model") as HTMLSelectElement;
  const kInput = grab("k") as HTMLInputElement;
  const negBox = grab("allow-negative") as HTMLInputElement;
  const seedInput = grab("seed-input") as HTMLInputElement;

  app.subscribe((state) => {
    renderVerdict(verdictEl, state);
    renderDemandEditor(
      editorEl, state,
      (i, v) => app.setDemand(i, v),
      (bus) => app.toggleFreeze(bus),
    );
    bindComparison(optionsEl, state);
    seedEl.textContent = state.lastSeed === null ? "" : `seed ${state.lastSeed}`;
    errorEl.textContent = state.error ?? "";
    (grab("generate") as HTMLButtonElement).disabled = !state.generationEnabled || state.busy;
    (grab("classify") as HTMLButtonElement).disabled = state.busy;

    if (modelSel.options.length === 0 && state.models.length > 0) {
      for (const m of state.models) {
        const opt = document.createElement("option");
        const acc = m.metrics ? ` (acc ${(m.metrics.accuracy * 100).toFixed(1)}%)` : "";
        opt.value = m.id;
        opt.textContent = `${m.id}${acc}`;
        modelSel.appendChild(opt);
      }
    }
  });

  modelSel.addEventListener("change", () => app.setModel(modelSel.value));
  grab("classify").addEventListener("click", () => void app.submitWhatIf());
  grab("generate").addEventListener("click", () => {
    app.setConstraints({
      k: Number(kInput.value) || 3,
      allowNegative: negBox.checked,
      seed: seedInput.value === "" ? null : Number(seedInput.value),
    });
    void app.generate();
  });

  await app.load();
});
