// Thin typed client over the pipeline service HTTP API. Every view in the
// UI goes through this module; nothing talks to the network directly.

import type {
  DecisionResponse,
  QualityReport,
  ReviewTask,
  RunSummary,
  SearchResponse,
  TasksResponse,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  },
) => Promise<{
  ok: boolean;
  status: number;
  text(): Promise<string>;
}>;

export class ApiError extends Error {
  readonly status: number;
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

export interface TaskFilters {
  stage?: string;
  status?: string;
  run?: string;
}

export interface SearchParams {
  q: string;
  lang?: string;
  run?: string;
  limit?: number;
}

export interface CreateRunOptions {
  run_id?: string;
  until?: string;
  wait?: boolean;
}

export interface DecideOptions {
  decision: "approve" | "reject";
  feedback?: string;
  run?: string;
  wait?: boolean;
}

function buildQuery(params: Record<string, string | number | undefined>): string {
  const parts: string[] = [];
  for (const [key, value] of Object.entries(params)) {
    if (value !== undefined && value !== "") {
      parts.push(`${encodeURIComponent(key)}=${encodeURIComponent(String(value))}`);
    }
  }
  return parts.length > 0 ? `?${parts.join("&")}` : "";
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;
  private readonly token: string | undefined;

  constructor(baseUrl: string, fetchImpl: FetchLike, token?: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl;
    this.token = token;
  }

  private async request(method: string, path: string, body?: unknown): Promise<string> {
    const headers: Record<string, string> = {};
    if (this.token !== undefined) {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    let payload: string | undefined;
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      payload = JSON.stringify(body);
    }
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: payload,
    });
    const text = await response.text();
    if (!response.ok) {
      let detail = text;
      try {
        const parsed: unknown = JSON.parse(text);
        if (
          typeof parsed === "object" &&
          parsed !== null &&
          typeof (parsed as { detail?: unknown }).detail === "string"
        ) {
          detail = (parsed as { detail: string }).detail;
        }
      } catch {
        // non-JSON error body: keep raw text
      }
      throw new ApiError(response.status, detail);
    }
    return text;
  }

  private async json<T>(method: string, path: string, body?: unknown): Promise<T> {
    return JSON.parse(await this.request(method, path, body)) as T;
  }

  health(): Promise<{ status: string; version: string }> {
    return this.json("GET", "/api/health");
  }

  async listRuns(): Promise<RunSummary[]> {
    const data = await this.json<{ runs: RunSummary[] }>("GET", "/api/runs");
    return data.runs;
  }

  createRun(options: CreateRunOptions = {}): Promise<RunSummary> {
    return this.json("POST", "/api/runs", options);
  }

  runSummary(runId: string): Promise<RunSummary> {
    return this.json("GET", `/api/runs/${encodeURIComponent(runId)}`);
  }

  // Raw report text, exactly as served. The dashboard renders numbers from
  // this payload verbatim, so the unparsed bytes are kept available.
  reportRaw(runId: string): Promise<string> {
    return this.request("GET", `/api/runs/${encodeURIComponent(runId)}/report`);
  }

  async report(runId: string): Promise<QualityReport> {
    return JSON.parse(await this.reportRaw(runId)) as QualityReport;
  }

  async artifact<T>(runId: string, name: string): Promise<T> {
    const path = `/api/runs/${encodeURIComponent(runId)}/artifacts/${encodeURIComponent(name)}`;
    return JSON.parse(await this.request("GET", path)) as T;
  }

  async listTasks(filters: TaskFilters = {}): Promise<TasksResponse> {
    return this.json("GET", `/api/tasks${buildQuery({ ...filters })}`);
  }

  async openTasks(filters: Omit<TaskFilters, "status"> = {}): Promise<TasksResponse> {
    return this.listTasks({ ...filters, status: "open" });
  }

  async task(taskId: string, run?: string): Promise<ReviewTask | undefined> {
    const data = await this.listTasks(run !== undefined ? { run } : {});
    return data.tasks.find((t) => t.id === taskId);
  }

  decide(taskId: string, options: DecideOptions): Promise<DecisionResponse> {
    return this.json("POST", `/api/tasks/${encodeURIComponent(taskId)}/decision`, options);
  }

  search(params: SearchParams): Promise<SearchResponse> {
    return this.json("GET", `/api/termbase/search${buildQuery({ ...params })}`);
  }
}
