/** Gateway payload types (the wire contract of the Python service). */

export interface BusSummary {
  id: number;
  load: number;
}

export interface CaseSummary {
  name: string;
  baseMVA: number;
  slack: number;
  buses: BusSummary[];
  generators: { bus: number; pmin: number; pmax: number; cost_linear: number }[];
  branches: { from: number; to: number; limit: number; susceptance: number }[];
}

export interface ModelInfo {
  id: string;
  kind: string;
  metrics: { accuracy: number; false_feasible_rate: number } | null;
}

export interface ClassifyResponse {
  label: "feasible" | "infeasible";
  proba: number;
  logit: number;
}

/** One counterfactual option as served: per-bus MW deltas (positive = reduction). */
export interface CfOptionPayload {
  delta: Record<string, number>;
  total_mw: number;
  proba: number;
  logit: number;
  distance: number;
  n_changed: number;
  validated: boolean;
}

export interface CounterfactualsResponse {
  options: CfOptionPayload[];
  objective: { yloss: number; dist: number; dpp: number; total: number };
  seed: number;
  retries_used: number;
}

export interface BaselineResponse {
  served: number[];
  delta: number[];
  total: number;
}

export interface ValidateResponse {
  feasible: boolean;
  dispatch?: { generation: number[]; flows: number[]; cost: number };
}

export interface GatewayError {
  status: number;
  detail: string;
}
