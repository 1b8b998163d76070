// Review-queue state. The store applies decisions optimistically, rolls the
// queue back when the server reports the task was already decided, and
// enforces the reject-requires-feedback rule before any network call.

import { ApiClient, ApiError } from "./api.js";
import type { Decision, DecisionResponse, ReviewTask } from "./types.js";

export interface QueueFilters {
  stage?: string;
  run?: string;
}

export interface QueueState {
  runId: string | null;
  tasks: ReviewTask[];
  /** conflict banner text after a 409 (first decision won elsewhere) */
  conflict: string | null;
  /** generic API error banner text */
  error: string | null;
  /** client-side validation message (reject without feedback) */
  validation: string | null;
  pending: boolean;
}

export type DecideResult =
  | { ok: true; response: DecisionResponse }
  | { ok: false; reason: "validation" | "conflict" | "error"; message: string };

type Listener = (state: QueueState) => void;

export class QueueStore {
  private readonly api: ApiClient;
  private readonly waitForReruns: boolean;
  private filters: QueueFilters;
  private listeners: Listener[] = [];

  state: QueueState = {
    runId: null,
    tasks: [],
    conflict: null,
    error: null,
    validation: null,
    pending: false,
  };

  constructor(api: ApiClient, filters: QueueFilters = {}, options: { wait?: boolean } = {}) {
    this.api = api;
    this.filters = filters;
    this.waitForReruns = options.wait ?? true;
  }

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }

  setFilters(filters: QueueFilters): void {
    this.filters = filters;
  }

  private emit(): void {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  private update(patch: Partial<QueueState>): void {
    this.state = { ...this.state, ...patch };
    this.emit();
  }

  async refresh(): Promise<void> {
    this.update({ pending: true });
    try {
      const data = await this.api.listTasks({ ...this.filters, status: "open" });
      this.update({ runId: data.run_id, tasks: data.tasks, error: null, pending: false });
    } catch (err) {
      const message = err instanceof ApiError ? err.detail : String(err);
      this.update({ tasks: [], error: message, pending: false });
    }
  }

  async decide(taskId: string, decision: Decision, feedback: string): Promise<DecideResult> {
    const trimmed = feedback.trim();
    if (decision === "reject" && trimmed === "") {
      const message = "Feedback is required to reject a task.";
      this.update({ validation: message });
      return { ok: false, reason: "validation", message };
    }

    // Optimistic removal: the task disappears from the queue immediately and
    // is restored verbatim if the server refuses the decision.
    const snapshot = this.state.tasks;
    this.update({
      tasks: snapshot.filter((task) => task.id !== taskId),
      validation: null,
      conflict: null,
      error: null,
      pending: true,
    });

    try {
      const response = await this.api.decide(taskId, {
        decision,
        ...(trimmed === "" ? {} : { feedback: trimmed }),
        ...(this.state.runId === null ? {} : { run: this.state.runId }),
        wait: this.waitForReruns,
      });
      await this.refresh();
      return { ok: true, response };
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // First decision wins server-side: roll back, surface the conflict,
        // and resynchronize the queue with the server.
        this.update({ tasks: snapshot, conflict: err.detail, pending: false });
        await this.refresh();
        this.update({ conflict: err.detail });
        return { ok: false, reason: "conflict", message: err.detail };
      }
      const message = err instanceof ApiError ? err.detail : String(err);
      this.update({ tasks: snapshot, error: message, pending: false });
      return { ok: false, reason: "error", message };
    }
  }

  clearNotices(): void {
    this.update({ conflict: null, error: null, validation: null });
  }
}
