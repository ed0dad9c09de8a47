/** Thin typed client over the gateway HTTP API — the console's only backend. */

import type {
  EvalSummary,
  Plan,
  Report,
  RunStatus,
  Trace,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class GatewayError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

export class GatewayClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, body === undefined
      ? undefined
      : {
          method: "POST",
          headers: { "content-type": "application/json" },
          body: JSON.stringify(body),
        });
    if (!resp.ok) {
      const detail = JSON.stringify(await resp.json().catch(() => ({})));
      throw new GatewayError(resp.status, `${path}: ${resp.status} ${detail}`);
    }
    return (await resp.json()) as T;
  }

  submitQuery(prompt: string, expertise?: string): Promise<{ run_id: string }> {
    return this.request("/query", expertise ? { prompt, expertise } : { prompt });
  }

  runStatus(runId: string): Promise<RunStatus> {
    return this.request(`/runs/${runId}`);
  }

  plan(runId: string): Promise<Plan> {
    return this.request(`/runs/${runId}/plan`);
  }

  trace(runId: string): Promise<Trace> {
    return this.request(`/runs/${runId}/trace`);
  }

  report(runId: string): Promise<Report> {
    return this.request(`/runs/${runId}/report`);
  }

  evalStatus(evalId: string): Promise<{ status: string; summary?: EvalSummary }> {
    return this.request(`/eval/${evalId}`);
  }
}
