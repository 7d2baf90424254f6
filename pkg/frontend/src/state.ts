/** Console state and the what-if loop.
 *
 * Demand edits stay client-side until submitted; classification gates the
 * constraint panel and option generation; at most one generation request is
 * in flight (a newer submission aborts the pending one); seeds echoed by the
 * gateway are kept for the reproducibility display. */

import { GatewayClient, isGatewayError } from "./api";
import type {
  CaseSummary,
  CfOptionPayload,
  ClassifyResponse,
  ModelInfo,
} from "./types";

export interface ConstraintSet {
  freeze: number[];
  allowNegative: boolean;
  k: number;
  seed: number | null;   // null = let the server draw one
}

export interface ConsoleState {
  caseSummary: CaseSummary | null;
  models: ModelInfo[];
  selectedModel: string;
  demand: number[];
  constraints: ConstraintSet;
  classification: ClassifyResponse | null;
  generationEnabled: boolean;
  options: CfOptionPayload[];
  lastSeed: number | null;
  busy: boolean;
  error: string | null;
}

export function initialState(): ConsoleState {
  return {
    caseSummary: null,
    models: [],
    selectedModel: "",
    demand: [],
    constraints: { freeze: [], allowNegative: false, k: 3, seed: null },
    classification: null,
    generationEnabled: false,
    options: [],
    lastSeed: null,
    busy: false,
    error: null,
  };
}

export class ConsoleApp {
  state: ConsoleState = initialState();
  private pending: AbortController | null = null;
  private listeners: Array<(s: ConsoleState) => void> = [];

  constructor(private client: GatewayClient) {}

  subscribe(listener: (s: ConsoleState) => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  private patch(update: Partial<ConsoleState>): void {
    this.state = { ...this.state, ...update };
    this.emit();
  }

  async load(): Promise<void> {
    const [caseSummary, models] = await Promise.all([
      this.client.getCase(),
      this.client.getModels(),
    ]);
    this.patch({
      caseSummary,
      models: models.models,
      selectedModel: models.models[0]?.id ?? "",
      demand: caseSummary.buses.map((b) => b.load),
    });
  }

  setDemand(index: number, value: number): void {
    const demand = [...this.state.demand];
    demand[index] = value;
    // stale verdict and options no longer describe the edited vector
    this.patch({ demand, classification: null, generationEnabled: false, options: [] });
  }

  setModel(id: string): void {
    this.patch({ selectedModel: id, classification: null, generationEnabled: false });
  }

  setConstraints(update: Partial<ConstraintSet>): void {
    this.patch({ constraints: { ...this.state.constraints, ...update } });
  }

  toggleFreeze(busId: number): void {
    const freeze = this.state.constraints.freeze.includes(busId)
      ? this.state.constraints.freeze.filter((b) => b !== busId)
      : [...this.state.constraints.freeze, busId];
    this.setConstraints({ freeze });
  }

  /** Submit the edited demand vector for classification. */
  async submitWhatIf(): Promise<void> {
    const n = this.state.caseSummary?.buses.length ?? 0;
    if (this.state.demand.length !== n) {
      this.patch({ error: `demand needs ${n} entries` });
      return;
    }
    this.patch({ busy: true, error: null });
    try {
      const verdict = await this.client.classify(this.state.selectedModel, this.state.demand);
      this.patch({
        classification: verdict,
        generationEnabled: verdict.label === "infeasible",
        busy: false,
      });
    } catch (e) {
      this.patch({ busy: false, error: describeError(e) });
    }
  }

  /** Request k validated options; a newer call cancels the pending one. */
  async generate(): Promise<void> {
    if (!this.state.generationEnabled) {
      this.patch({ error: "classify an infeasible profile first" });
      return;
    }
    this.pending?.abort();
    const controller = new AbortController();
    this.pending = controller;
    this.patch({ busy: true, error: null });
    try {
      const c = this.state.constraints;
      const body = await this.client.counterfactuals(
        {
          model: this.state.selectedModel,
          demand: this.state.demand,
          k: c.k,
          freeze: c.freeze,
          allowNegative: c.allowNegative,
          ...(c.seed !== null ? { seed: c.seed } : {}),
        },
        controller.signal,
      );
      if (this.pending === controller) {
        this.patch({ options: body.options, lastSeed: body.seed, busy: false });
      }
    } catch (e) {
      if (controller.signal.aborted) return; // superseded by a newer request
      this.patch({ busy: false, options: [], error: describeError(e) });
    } finally {
      if (this.pending === controller) this.pending = null;
    }
  }

  /** Validate the demand vector produced by applying one option. */
  async validateOption(option: CfOptionPayload): Promise<boolean> {
    const ids = this.state.caseSummary?.buses.map((b) => b.id) ?? [];
    const adjusted = this.state.demand.map(
      (v, i) => v - (option.delta[String(ids[i])] ?? 0),
    );
    const res = await this.client.validate(adjusted);
    return res.feasible;
  }
}

export function describeError(e: unknown): string {
  if (isGatewayError(e)) {
    if (e.status === 409) return "Profile is already classified feasible.";
    if (e.status === 422) return "Recovery failed: no option validated; relax the constraints.";
    return `Gateway error ${e.status}: ${e.detail}`;
  }
  return e instanceof Error ? e.message : String(e);
}
