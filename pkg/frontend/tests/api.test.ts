import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, type FetchLike } from "../src/api.js";

interface Call {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: string | undefined;
}

function fakeFetch(
  handler: (call: Call) => { status: number; body: string },
): { fetch: FetchLike; calls: Call[] } {
  const calls: Call[] = [];
  const fetch: FetchLike = (input, init) => {
    const call: Call = {
      url: input,
      method: init?.method ?? "GET",
      headers: init?.headers ?? {},
      body: init?.body,
    };
    calls.push(call);
    const { status, body } = handler(call);
    return Promise.resolve({
      ok: status >= 200 && status < 300,
      status,
      text: () => Promise.resolve(body),
    });
  };
  return { fetch, calls };
}

const ok = (body: unknown) => ({ status: 200, body: JSON.stringify(body) });

describe("ApiClient requests", () => {
  it("joins the base URL and strips trailing slashes", async () => {
    const { fetch, calls } = fakeFetch(() => ok({ status: "ok", version: "1" }));
    const client = new ApiClient("http://127.0.0.1:8400/", fetch);
    await client.health();
    expect(calls[0]?.url).toBe("http://127.0.0.1:8400/api/health");
  });

  it("sends a bearer token when configured", async () => {
    const { fetch, calls } = fakeFetch(() => ok({ runs: [] }));
    const client = new ApiClient("", fetch, "sesame");
    await client.listRuns();
    expect(calls[0]?.headers["Authorization"]).toBe("Bearer sesame");
  });

  it("omits the authorization header without a token", async () => {
    const { fetch, calls } = fakeFetch(() => ok({ runs: [] }));
    const client = new ApiClient("", fetch);
    await client.listRuns();
    expect(calls[0]?.headers["Authorization"]).toBeUndefined();
  });

  it("posts run-creation options as JSON", async () => {
    const { fetch, calls } = fakeFetch(() => ({ status: 201, body: "{}" }));
    const client = new ApiClient("", fetch);
    await client.createRun({ until: "align", wait: true });
    expect(calls[0]?.method).toBe("POST");
    expect(calls[0]?.headers["Content-Type"]).toBe("application/json");
    expect(JSON.parse(calls[0]?.body ?? "")).toEqual({ until: "align", wait: true });
  });

  it("builds task filters into the query string", async () => {
    const { fetch, calls } = fakeFetch(() => ok({ run_id: "run-0001", tasks: [] }));
    const client = new ApiClient("", fetch);
    await client.listTasks({ stage: "alignment", status: "open", run: "run-0001" });
    expect(calls[0]?.url).toBe("/api/tasks?stage=alignment&status=open&run=run-0001");
  });

  it("omits undefined filters entirely", async () => {
    const { fetch, calls } = fakeFetch(() => ok({ run_id: "run-0001", tasks: [] }));
    const client = new ApiClient("", fetch);
    await client.listTasks();
    expect(calls[0]?.url).toBe("/api/tasks");
  });

  it("percent-encodes search queries", async () => {
    const { fetch, calls } = fakeFetch(() => ok({ run_id: "r", count: 0, entries: [] }));
    const client = new ApiClient("", fetch);
    await client.search({ q: "数据 安全", lang: "zh", limit: 5 });
    const url = calls[0]?.url ?? "";
    expect(url).toContain("/api/termbase/search?");
    expect(url).toContain(`q=${encodeURIComponent("数据 安全")}`);
    expect(url).toContain("lang=zh");
    expect(url).toContain("limit=5");
  });

  it("addresses artifacts by run and name", async () => {
    const { fetch, calls } = fakeFetch(() => ok({ segments: [], warnings: [] }));
    const client = new ApiClient("", fetch);
    await client.artifact("run-0001", "segments.json");
    expect(calls[0]?.url).toBe("/api/runs/run-0001/artifacts/segments.json");
  });

  it("posts decisions with feedback and wait flags", async () => {
    const { fetch, calls } = fakeFetch(() =>
      ok({ task: {}, run: {}, rerun_started: true }),
    );
    const client = new ApiClient("", fetch);
    await client.decide("task-0002", {
      decision: "reject",
      feedback: "needs work",
      run: "run-0001",
      wait: true,
    });
    expect(calls[0]?.url).toBe("/api/tasks/task-0002/decision");
    expect(JSON.parse(calls[0]?.body ?? "")).toEqual({
      decision: "reject",
      feedback: "needs work",
      run: "run-0001",
      wait: true,
    });
  });
});

describe("ApiClient responses", () => {
  it("returns the raw report text without reserialization", async () => {
    // Key order and spacing preserved exactly as served.
    const raw = `{"overall_score": 91.20, "grade": "A"}`;
    const { fetch } = fakeFetch(() => ({ status: 200, body: raw }));
    const client = new ApiClient("", fetch);
    expect(await client.reportRaw("run-0001")).toBe(raw);
  });

  it("raises ApiError with the detail string from JSON error bodies", async () => {
    const { fetch } = fakeFetch(() => ({
      status: 409,
      body: JSON.stringify({ detail: "task task-0001 already approved" }),
    }));
    const client = new ApiClient("", fetch);
    try {
      await client.decide("task-0001", { decision: "approve" });
      expect.unreachable("decide should have thrown");
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      const apiErr = err as ApiError;
      expect(apiErr.status).toBe(409);
      expect(apiErr.detail).toBe("task task-0001 already approved");
    }
  });

  it("falls back to the raw body for non-JSON errors", async () => {
    const { fetch } = fakeFetch(() => ({ status: 502, body: "bad gateway" }));
    const client = new ApiClient("", fetch);
    await expect(client.health()).rejects.toMatchObject({ status: 502, detail: "bad gateway" });
  });

  it("finds a task by id across the task list", async () => {
    const tasks = [
      { id: "task-0001", status: "approved" },
      { id: "task-0002", status: "open" },
    ];
    const { fetch } = fakeFetch(() => ok({ run_id: "run-0001", tasks }));
    const client = new ApiClient("", fetch);
    const found = await client.task("task-0002");
    expect(found?.id).toBe("task-0002");
    expect(await client.task("task-0009")).toBeUndefined();
  });
});
