import { describe, expect, it } from "vitest";

import { ApiClient, type FetchLike } from "../src/api.js";
import { QueueStore } from "../src/state.js";
import type { ReviewTask } from "../src/types.js";

function task(id: string, overrides: Partial<ReviewTask> = {}): ReviewTask {
  return {
    id,
    kind: "item",
    stage: "extraction",
    title: `title for ${id}`,
    status: "open",
    payload: {},
    qc_notes: [],
    rerun_ref: null,
    created_at: "2024-01-01T00:00:00Z",
    decided_at: null,
    feedback: null,
    ...overrides,
  };
}

interface Call {
  url: string;
  method: string;
  body: string | undefined;
}

interface Responder {
  status: number;
  body: unknown;
  delay?: Promise<void>;
}

// Scripted fetch: matches calls against URL prefixes in order of registration.
function scriptedFetch(script: (call: Call) => Responder): { fetch: FetchLike; calls: Call[] } {
  const calls: Call[] = [];
  const fetch: FetchLike = async (input, init) => {
    const call: Call = { url: input, method: init?.method ?? "GET", body: init?.body };
    calls.push(call);
    const responder = script(call);
    if (responder.delay !== undefined) {
      await responder.delay;
    }
    return {
      ok: responder.status >= 200 && responder.status < 300,
      status: responder.status,
      text: () => Promise.resolve(JSON.stringify(responder.body)),
    };
  };
  return { fetch, calls };
}

function deferred(): { promise: Promise<void>; resolve: () => void } {
  let resolve!: () => void;
  const promise = new Promise<void>((r) => {
    resolve = r;
  });
  return { promise, resolve };
}

describe("QueueStore.refresh", () => {
  it("loads open tasks and records the run id", async () => {
    const tasks = [task("task-0001"), task("task-0002")];
    const { fetch, calls } = scriptedFetch(() => ({
      status: 200,
      body: { run_id: "run-0001", tasks },
    }));
    const store = new QueueStore(new ApiClient("", fetch));
    await store.refresh();
    expect(store.state.runId).toBe("run-0001");
    expect(store.state.tasks.map((t) => t.id)).toEqual(["task-0001", "task-0002"]);
    expect(calls[0]?.url).toContain("status=open");
  });

  it("applies stage filters to the query", async () => {
    const { fetch, calls } = scriptedFetch(() => ({
      status: 200,
      body: { run_id: "run-0001", tasks: [] },
    }));
    const store = new QueueStore(new ApiClient("", fetch), { stage: "alignment" });
    await store.refresh();
    expect(calls[0]?.url).toContain("stage=alignment");
  });

  it("surfaces API failures as an error banner", async () => {
    const { fetch } = scriptedFetch(() => ({ status: 404, body: { detail: "no runs yet" } }));
    const store = new QueueStore(new ApiClient("", fetch));
    await store.refresh();
    expect(store.state.error).toBe("no runs yet");
    expect(store.state.tasks).toEqual([]);
  });
});

describe("QueueStore.decide validation", () => {
  it("rejecting without feedback never reaches the network", async () => {
    const { fetch, calls } = scriptedFetch(() => ({
      status: 200,
      body: { run_id: "run-0001", tasks: [task("task-0001")] },
    }));
    const store = new QueueStore(new ApiClient("", fetch));
    await store.refresh();
    const before = calls.length;

    const result = await store.decide("task-0001", "reject", "   ");
    expect(result).toEqual({
      ok: false,
      reason: "validation",
      message: "Feedback is required to reject a task.",
    });
    expect(store.state.validation).toBe("Feedback is required to reject a task.");
    expect(calls.length).toBe(before); // no decision POST was sent
    expect(store.state.tasks.map((t) => t.id)).toEqual(["task-0001"]); // queue untouched
  });
});

describe("QueueStore.decide optimistic flow", () => {
  it("removes the task immediately and confirms from the server", async () => {
    const gate = deferred();
    const remaining = [task("task-0002")];
    let decided = false;
    const { fetch } = scriptedFetch((call) => {
      if (call.url.startsWith("/api/tasks/task-0001/decision")) {
        decided = true;
        return {
          status: 200,
          body: { task: task("task-0001", { status: "approved" }), run: {}, rerun_started: false },
          delay: gate.promise,
        };
      }
      return {
        status: 200,
        body: { run_id: "run-0001", tasks: decided ? remaining : [task("task-0001"), ...remaining] },
      };
    });
    const store = new QueueStore(new ApiClient("", fetch));
    await store.refresh();
    expect(store.state.tasks).toHaveLength(2);

    const pending = store.decide("task-0001", "approve", "");
    // Optimistic: the task is gone before the server has answered.
    expect(store.state.tasks.map((t) => t.id)).toEqual(["task-0002"]);
    expect(store.state.pending).toBe(true);

    gate.resolve();
    const result = await pending;
    expect(result.ok).toBe(true);
    expect(store.state.tasks.map((t) => t.id)).toEqual(["task-0002"]);
    expect(store.state.pending).toBe(false);
    expect(store.state.conflict).toBeNull();
  });

  it("passes feedback and run context in the decision body", async () => {
    const { fetch, calls } = scriptedFetch((call) => {
      if (call.url.startsWith("/api/tasks/")) {
        return {
          status: 200,
          body: { task: task("task-0001", { status: "rejected" }), run: {}, rerun_started: true },
        };
      }
      return { status: 200, body: { run_id: "run-0001", tasks: [task("task-0001")] } };
    });
    const store = new QueueStore(new ApiClient("", fetch));
    await store.refresh();
    await store.decide("task-0001", "reject", "  tighten the renderings  ");
    const post = calls.find((c) => c.method === "POST");
    expect(JSON.parse(post?.body ?? "")).toEqual({
      decision: "reject",
      feedback: "tighten the renderings",
      run: "run-0001",
      wait: true,
    });
  });
});

describe("QueueStore.decide conflict handling", () => {
  it("rolls back, shows a conflict banner, and refreshes on 409", async () => {
    const serverTruth = [task("task-0001", { title: "server copy" }), task("task-0002")];
    let refreshes = 0;
    const { fetch } = scriptedFetch((call) => {
      if (call.method === "POST") {
        return { status: 409, body: { detail: "task task-0001 already approved" } };
      }
      refreshes += 1;
      return { status: 200, body: { run_id: "run-0001", tasks: serverTruth } };
    });
    const store = new QueueStore(new ApiClient("", fetch));
    await store.refresh();
    expect(refreshes).toBe(1);

    const result = await store.decide("task-0001", "approve", "");
    expect(result).toEqual({
      ok: false,
      reason: "conflict",
      message: "task task-0001 already approved",
    });
    expect(store.state.conflict).toBe("task task-0001 already approved");
    // the queue was re-fetched after the rollback
    expect(refreshes).toBe(2);
    expect(store.state.tasks.map((t) => t.id)).toEqual(["task-0001", "task-0002"]);
  });

  it("restores the exact snapshot on other server errors without refreshing", async () => {
    const original = [task("task-0001"), task("task-0002")];
    let listCalls = 0;
    const { fetch } = scriptedFetch((call) => {
      if (call.method === "POST") {
        return { status: 400, body: { detail: "feedback is required" } };
      }
      listCalls += 1;
      return { status: 200, body: { run_id: "run-0001", tasks: original } };
    });
    const store = new QueueStore(new ApiClient("", fetch));
    await store.refresh();

    const result = await store.decide("task-0002", "approve", "");
    expect(result.ok).toBe(false);
    expect(result.ok === false && result.reason).toBe("error");
    expect(store.state.error).toBe("feedback is required");
    expect(store.state.tasks.map((t) => t.id)).toEqual(["task-0001", "task-0002"]);
    expect(listCalls).toBe(1); // only the initial refresh hit the list endpoint
  });
});

describe("QueueStore notices", () => {
  it("clears banners and validation messages", async () => {
    const { fetch } = scriptedFetch(() => ({ status: 404, body: { detail: "gone" } }));
    const store = new QueueStore(new ApiClient("", fetch));
    await store.refresh();
    expect(store.state.error).toBe("gone");
    store.clearNotices();
    expect(store.state.error).toBeNull();
    expect(store.state.conflict).toBeNull();
    expect(store.state.validation).toBeNull();
  });

  it("notifies listeners on every state change", async () => {
    const { fetch } = scriptedFetch(() => ({
      status: 200,
      body: { run_id: "run-0001", tasks: [] },
    }));
    const store = new QueueStore(new ApiClient("", fetch));
    const seen: boolean[] = [];
    store.onChange((state) => seen.push(state.pending));
    await store.refresh();
    expect(seen).toEqual([true, false]);
  });
});
