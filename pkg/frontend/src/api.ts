/** Thin fetch client for the gateway; every helper returns parsed JSON or
 * throws a GatewayError with the server's detail message. */

import type {
  BaselineResponse,
  CaseSummary,
  ClassifyResponse,
  CounterfactualsResponse,
  GatewayError,
  ModelInfo,
  ValidateResponse,
} from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class GatewayClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.baseUrl + path, init);
    const body = await res.json().catch(() => ({}));
    if (!res.ok) {
      const err: GatewayError = {
        status: res.status,
        detail: typeof body?.detail === "string" ? body.detail : res.statusText,
      };
      throw err;
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown, signal?: AbortSignal): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
      signal,
    });
  }

  getCase(): Promise<CaseSummary> {
    return this.request<CaseSummary>("/case");
  }

  getModels(): Promise<{ models: ModelInfo[] }> {
    return this.request<{ models: ModelInfo[] }>("/models");
  }

  classify(model: string, demand: number[]): Promise<ClassifyResponse> {
    return this.post<ClassifyResponse>("/classify", { model, demand });
  }

  counterfactuals(
    payload: {
      model: string;
      demand: number[];
      k: number;
      lambda1?: number;
      lambda2?: number;
      freeze?: number[];
      allowNegative?: boolean;
      seed?: number;
    },
    signal?: AbortSignal,
  ): Promise<CounterfactualsResponse> {
    return this.post<CounterfactualsResponse>("/counterfactuals", payload, signal);
  }

  baseline(demand: number[]): Promise<BaselineResponse> {
    return this.post<BaselineResponse>("/baseline", { demand });
  }

  validate(demand: number[]): Promise<ValidateResponse> {
    return this.post<ValidateResponse>("/validate", { demand });
  }
}

export function isGatewayError(e: unknown): e is GatewayError {
  return typeof e === "object" && e !== null && "status" in e && "detail" in e;
}
