/** Thin typed client for the run service REST endpoints. */

import type { RunInfo, Snapshot, StepAction, StepResult } from "./types.js";

export class ApiError extends Error {
  constructor(public readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

async function detailOf(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: string };
    if (body && typeof body.detail === "string") return body.detail;
  } catch {
    // fall through to the status line
  }
  return `HTTP ${resp.status}`;
}

export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchImpl(`${this.base}${path}`, init);
    if (!resp.ok) throw new ApiError(resp.status, await detailOf(resp));
    return resp;
  }

  async createRun(config: Record<string, unknown>): Promise<RunInfo> {
    const resp = await this.request("/api/runs", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(config),
    });
    return (await resp.json()) as RunInfo;
  }

  async listRuns(): Promise<RunInfo[]> {
    const resp = await this.request("/api/runs");
    return (await resp.json()) as RunInfo[];
  }

  async runInfo(runId: string): Promise<RunInfo> {
    const resp = await this.request(`/api/runs/${runId}`);
    return (await resp.json()) as RunInfo;
  }

  async getState(runId: string, step?: number): Promise<Snapshot> {
    const query = step === undefined ? "" : `?step=${step}`;
    const resp = await this.request(`/api/runs/${runId}/state${query}`);
    return (await resp.json()) as Snapshot;
  }

  async postStep(runId: string, action: StepAction): Promise<StepResult> {
    const resp = await this.request(`/api/runs/${runId}/step`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ action }),
    });
    return (await resp.json()) as StepResult;
  }

  async exportRun(runId: string): Promise<Uint8Array> {
    const resp = await this.request(`/api/runs/${runId}/export`);
    return new Uint8Array(await resp.arrayBuffer());
  }

  eventsUrl(runId: string, from?: number): string {
    const query = from === undefined ? "" : `?from=${from}`;
    return `${this.base}/api/runs/${runId}/events${query}`;
  }
}
