// Browser entry point: hash routing and DOM wiring. All data comes from the
// pipeline service API via ApiClient; views are rendered by render.ts and the
// queue is managed by QueueStore.

import { ApiClient, ApiError } from "./api.js";
import {
  renderArticle,
  renderConflictBanner,
  renderDashboard,
  renderErrorBanner,
  renderRunList,
  renderSearchResults,
  renderTaskDetail,
  renderTaskList,
  type TaskDetailContext,
} from "./render.js";
import { QueueStore } from "./state.js";
import type {
  AlignmentPayload,
  AlignmentsArtifact,
  ExtractionEvent,
  ExtractionStatsArtifact,
  QualityReport,
  ReviewTask,
  SegmentsArtifact,
  StandardizationPayload,
  StandardizationReportArtifact,
} from "./types.js";

const api = new ApiClient("", (input, init) => window.fetch(input, init));
const store = new QueueStore(api);

const app = document.getElementById("app") as HTMLElement;
const runIndicator = document.getElementById("run-indicator") as HTMLElement;

let currentRun: string | null = null;

async function resolveRun(): Promise<string | null> {
  const runs = await api.listRuns();
  const latest = runs[runs.length - 1];
  currentRun = latest === undefined ? null : latest.run_id;
  runIndicator.textContent = currentRun === null ? "no runs" : `run: ${currentRun}`;
  return currentRun;
}

function banners(): string {
  const parts: string[] = [];
  if (store.state.conflict !== null) {
    parts.push(renderConflictBanner(store.state.conflict));
  }
  if (store.state.error !== null) {
    parts.push(renderErrorBanner(store.state.error));
  }
  return parts.join("");
}

// ---------------------------------------------------------------------------
// Views
// ---------------------------------------------------------------------------

async function showTasks(stage: string | null): Promise<void> {
  store.setFilters({
    ...(stage === null ? {} : { stage }),
    ...(currentRun === null ? {} : { run: currentRun }),
  });
  await store.refresh();
  app.innerHTML = `<h2>Review tasks</h2>${banners()}${renderTaskList(store.state.tasks, stage)}`;
}

async function taskContext(task: ReviewTask): Promise<TaskDetailContext> {
  const run = store.state.runId ?? currentRun;
  if (run === null || task.kind === "gate") {
    return {};
  }
  const ctx: TaskDetailContext = {};
  try {
    if (task.stage === "alignment") {
      const payload = task.payload as unknown as AlignmentPayload;
      const segments = await api.artifact<SegmentsArtifact>(run, "segments.json");
      ctx.sourceSegment = segments.segments.find(
        (s) =>
          s.statute_id === payload.law_id &&
          s.language === "zh" &&
          s.article_number === payload.article_number,
      );
      ctx.targetSegment = segments.segments.find(
        (s) =>
          s.statute_id === payload.law_id &&
          s.language === payload.language &&
          s.article_number === payload.article_number,
      );
      const alignments = await api.artifact<AlignmentsArtifact>(run, "alignments.json");
      const law = alignments.laws.find((l) => l.law_id === payload.law_id);
      const records = payload.language === "ja" ? law?.ja : law?.en;
      ctx.pairRecord = records?.find(
        (record) => record.candidate.source_ref[1] === payload.article_number,
      );
    } else if (task.stage === "standardization") {
      const payload = task.payload as unknown as StandardizationPayload;
      const report = await api.artifact<StandardizationReportArtifact>(
        run,
        "standardization_report.json",
      );
      ctx.group = report.groups.find(
        (g) => g.law_id === payload.law_id && g.chinese === payload.chinese,
      );
    }
  } catch {
    // artifact not produced yet: the detail view falls back to payload-only rendering
  }
  return ctx;
}

async function showTaskDetail(taskId: string): Promise<void> {
  const task = await api.task(taskId, currentRun ?? undefined);
  if (task === undefined) {
    app.innerHTML = `<div class="empty-state">Task ${taskId} not found.</div>`;
    return;
  }
  const ctx = await taskContext(task);
  app.innerHTML = `<h2>Task ${task.id}</h2>${banners()}${renderTaskDetail(task, ctx)}`;
  wireDecisionForm();
}

function wireDecisionForm(): void {
  const form = app.querySelector<HTMLFormElement>("[data-testid=decision-form]");
  if (form === null) {
    return;
  }
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const submitter = (event as SubmitEvent).submitter as HTMLButtonElement | null;
    const decision = submitter?.value === "reject" ? "reject" : "approve";
    const textarea = form.querySelector<HTMLTextAreaElement>("textarea[name=feedback]");
    const feedback = textarea === null ? "" : textarea.value;
    const taskId = form.dataset["taskId"] ?? "";
    void store.decide(taskId, decision, feedback).then((result) => {
      if (result.ok) {
        window.location.hash = "#/tasks";
        return;
      }
      if (result.reason === "validation") {
        const slot = form.querySelector<HTMLElement>("[data-testid=validation-error]");
        if (slot !== null) {
          slot.textContent = result.message;
          slot.hidden = false;
        }
        return;
      }
      // conflict or server error: re-render the queue with the banner
      window.location.hash = "#/tasks";
      void route();
    });
  });
}

async function showDashboard(): Promise<void> {
  const run = currentRun;
  if (run === null) {
    app.innerHTML = `<h2>Quality dashboard</h2>${renderDashboard(null)}`;
    return;
  }
  let report: QualityReport | null = null;
  try {
    report = JSON.parse(await api.reportRaw(run)) as QualityReport;
  } catch (err) {
    if (!(err instanceof ApiError && err.status === 404)) {
      app.innerHTML = renderErrorBanner(err instanceof ApiError ? err.detail : String(err));
      return;
    }
  }
  let flagged: ExtractionEvent[] = [];
  try {
    const stats = await api.artifact<ExtractionStatsArtifact>(run, "extraction_stats.json");
    flagged = stats.events.filter((event) => event.type === "hallucination");
  } catch {
    // stats artifact absent: dashboard still renders the report
  }
  app.innerHTML = `<h2>Quality dashboard</h2>${renderDashboard(report, flagged)}`;
}

async function showSearch(): Promise<void> {
  app.innerHTML = `
    <h2>Termbase search</h2>
    <form class="search-form" data-testid="search-form">
      <input type="text" name="q" placeholder="Search terms…" />
      <select name="lang">
        <option value="">all languages</option>
        <option value="zh">zh</option>
        <option value="en">en</option>
        <option value="ja">ja</option>
      </select>
      <button type="submit">Search</button>
    </form>
    <div id="search-results"></div>`;
  const form = app.querySelector<HTMLFormElement>("[data-testid=search-form]");
  form?.addEventListener("submit", (event) => {
    event.preventDefault();
    const q = form.querySelector<HTMLInputElement>("input[name=q]")?.value ?? "";
    const lang = form.querySelector<HTMLSelectElement>("select[name=lang]")?.value ?? "";
    const results = document.getElementById("search-results");
    if (results === null) {
      return;
    }
    void api
      .search({
        q,
        ...(lang === "" ? {} : { lang }),
        ...(currentRun === null ? {} : { run: currentRun }),
      })
      .then((response) => {
        results.innerHTML = renderSearchResults(response);
      })
      .catch((err: unknown) => {
        results.innerHTML = renderErrorBanner(err instanceof ApiError ? err.detail : String(err));
      });
  });
}

async function showArticle(lawId: string, language: string, articleNumber: number): Promise<void> {
  const run = currentRun;
  if (run === null) {
    app.innerHTML = `<div class="empty-state">No runs yet.</div>`;
    return;
  }
  try {
    const segments = await api.artifact<SegmentsArtifact>(run, "segments.json");
    const segment = segments.segments.find(
      (s) =>
        s.statute_id === lawId && s.language === language && s.article_number === articleNumber,
    );
    app.innerHTML = renderArticle(segment, lawId, language, articleNumber);
  } catch (err) {
    app.innerHTML = renderErrorBanner(err instanceof ApiError ? err.detail : String(err));
  }
}

async function showRuns(): Promise<void> {
  const runs = await api.listRuns();
  app.innerHTML = `<h2>Runs</h2>${renderRunList(runs, currentRun)}`;
}

// ---------------------------------------------------------------------------
// Router
// ---------------------------------------------------------------------------

async function route(): Promise<void> {
  const hash = window.location.hash || "#/tasks";
  const parts = hash.replace(/^#\//, "").split("/").map(decodeURIComponent);
  try {
    const head = parts[0] ?? "tasks";
    if (head === "tasks") {
      await showTasks(parts[1] ?? null);
    } else if (head === "task" && parts[1] !== undefined) {
      await showTaskDetail(parts[1]);
    } else if (head === "dashboard") {
      await showDashboard();
    } else if (head === "search") {
      await showSearch();
    } else if (head === "runs") {
      await showRuns();
    } else if (head === "article" && parts.length >= 4) {
      await showArticle(parts[1] ?? "", parts[2] ?? "", Number(parts[3]));
    } else {
      await showTasks(null);
    }
  } catch (err) {
    app.innerHTML = renderErrorBanner(err instanceof ApiError ? err.detail : String(err));
  }
}

async function start(): Promise<void> {
  try {
    await api.health();
    await resolveRun();
  } catch (err) {
    app.innerHTML = renderErrorBanner(
      err instanceof ApiError ? err.detail : `service unreachable: ${String(err)}`,
    );
    return;
  }
  window.addEventListener("hashchange", () => {
    void route();
  });
  await route();
}

void start();
