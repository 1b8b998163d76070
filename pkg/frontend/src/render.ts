// Pure HTML renderers. Each function maps API payloads to markup and never
// recomputes, reformats, or rounds a number: whatever the service sent is
// what appears on screen.

import type {
  AlignedPairRecord,
  AlignmentPayload,
  ExtractionEvent,
  GatePayload,
  QualityReport,
  ReviewTask,
  RunSummary,
  SearchResponse,
  SegmentRecord,
  SegmentationPayload,
  StandardizationGroup,
  StandardizationPayload,
} from "./types.js";

export function escapeHtml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

// Numbers are shown via String() of the parsed JSON value. For the report
// the pre-formatted `display` strings are used instead, so nothing here ever
// applies its own rounding.
function num(value: number | null | undefined): string {
  return value === null || value === undefined ? "—" : escapeHtml(String(value));
}

const LANGUAGE_LABELS: Record<string, string> = {
  zh: "Chinese (zh)",
  en: "English (en)",
  ja: "Japanese (ja)",
};

export function languageLabel(code: string): string {
  return LANGUAGE_LABELS[code] ?? code;
}

export function articleHash(lawId: string, language: string, articleNumber: number): string {
  return `#/article/${encodeURIComponent(lawId)}/${encodeURIComponent(language)}/${articleNumber}`;
}

function articleLink(lawId: string, language: string, articleNumber: number): string {
  const label = `${escapeHtml(lawId)} article ${num(articleNumber)} (${escapeHtml(language)})`;
  return `<a href="${articleHash(lawId, language, articleNumber)}">${label}</a>`;
}

function badge(text: string, cls: string): string {
  return `<span class="badge ${cls}">${escapeHtml(text)}</span>`;
}

function qcNotes(notes: readonly string[]): string {
  if (notes.length === 0) {
    return "";
  }
  const items = notes.map((note) => `<li>${escapeHtml(note)}</li>`).join("");
  return `<ul class="qc-notes">${items}</ul>`;
}

// ---------------------------------------------------------------------------
// Task queue
// ---------------------------------------------------------------------------

export const TASK_STAGES = ["segmentation", "alignment", "extraction", "standardization"] as const;

export function renderStageFilters(activeStage: string | null): string {
  const links = [
    `<a href="#/tasks" class="${activeStage === null ? "active" : ""}">all stages</a>`,
    ...TASK_STAGES.map(
      (stage) =>
        `<a href="#/tasks/${stage}" class="${activeStage === stage ? "active" : ""}">${stage}</a>`,
    ),
  ];
  return `<div class="filters">${links.join("")}</div>`;
}

export function renderTaskList(tasks: readonly ReviewTask[], activeStage: string | null): string {
  const filters = renderStageFilters(activeStage);
  if (tasks.length === 0) {
    return `${filters}<div class="empty-state" data-testid="tasks-empty">No pending review tasks.</div>`;
  }
  const rows = tasks
    .map(
      (task) => `
      <tr class="task-row" data-task-id="${escapeHtml(task.id)}">
        <td><a href="#/task/${encodeURIComponent(task.id)}">${escapeHtml(task.id)}</a></td>
        <td>${badge(task.kind, `kind-${task.kind}`)}</td>
        <td>${escapeHtml(task.stage)}</td>
        <td>${escapeHtml(task.title)}</td>
        <td>${badge(task.status, `status-${task.status}`)}</td>
      </tr>`,
    )
    .join("");
  return `${filters}
    <table data-testid="task-table">
      <thead><tr><th>Task</th><th>Kind</th><th>Stage</th><th>Title</th><th>Status</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

// ---------------------------------------------------------------------------
// Task detail
// ---------------------------------------------------------------------------

export interface TaskDetailContext {
  // zh segment and target-language segment for alignment tasks
  sourceSegment?: SegmentRecord | undefined;
  targetSegment?: SegmentRecord | undefined;
  // matching pair record from alignments.json, for the similarity column
  pairRecord?: AlignedPairRecord | undefined;
  // matching group from standardization_report.json
  group?: StandardizationGroup | undefined;
}

function articlePane(title: string, segment: SegmentRecord | undefined): string {
  const body =
    segment === undefined
      ? `<p class="muted">article text unavailable</p>`
      : `<div class="article-text">${escapeHtml(segment.text)}</div>`;
  return `<div class="article-pane"><h4>${escapeHtml(title)}</h4>${body}</div>`;
}

function renderSegmentationDetail(payload: SegmentationPayload): string {
  return `
    <dl>
      <dt>Source document</dt><dd class="mono">${escapeHtml(payload.source_id)}</dd>
      <dt>Language</dt><dd>${escapeHtml(languageLabel(payload.language))}</dd>
      <dt>Warning</dt><dd>${escapeHtml(payload.message)}</dd>
    </dl>`;
}

function renderAlignmentDetail(payload: AlignmentPayload, ctx: TaskDetailContext): string {
  const record = ctx.pairRecord;
  const similarity =
    record === undefined
      ? "—"
      : `embedding similarity ${num(record.candidate.similarity)}` +
        (record.rerank_score === null ? "" : `, rerank score ${num(record.rerank_score)}`);
  const sourceTitle = `${payload.law_id} article ${payload.article_number} — ${languageLabel("zh")}`;
  const targetTitle = `${payload.law_id} article ${payload.article_number} — ${languageLabel(payload.language)}`;
  return `
    <p>Alignment status: ${badge(payload.status, `status-${payload.status}`)} &middot; ${similarity}</p>
    <div class="side-by-side">
      ${articlePane(sourceTitle, ctx.sourceSegment)}
      ${articlePane(targetTitle, ctx.targetSegment)}
    </div>
    ${qcNotes(payload.qc_notes)}`;
}

function renderExtractionDetail(payload: ExtractionEvent): string {
  const rows = Object.entries(payload)
    .map(
      ([key, value]) =>
        `<tr><th>${escapeHtml(key)}</th><td>${escapeHtml(
          typeof value === "string" ? value : JSON.stringify(value),
        )}</td></tr>`,
    )
    .join("");
  const link =
    payload.law_id !== undefined && payload.article_number !== undefined
      ? `<p>Source article: ${articleLink(payload.law_id, "zh", payload.article_number)}</p>`
      : "";
  return `<table>${rows}</table>${link}`;
}

export function renderVariantTable(group: StandardizationGroup): string {
  const decision = group.decision;
  if (decision === null || decision === undefined) {
    return `<p class="muted">No standardization decision recorded for this group.</p>`;
  }
  const rows: string[] = [];
  if (decision.best !== null) {
    rows.push(
      `<tr class="canonical" data-testid="canonical-row">
        <td>${escapeHtml(decision.best[0])}</td>
        <td>${escapeHtml(decision.best[1])}</td>
        <td>canonical proposal</td>
      </tr>`,
    );
  }
  for (const pair of decision.merged) {
    rows.push(
      `<tr><td>${escapeHtml(pair[0])}</td><td>${escapeHtml(pair[1])}</td><td>merge into canonical</td></tr>`,
    );
  }
  for (const pair of decision.distinct) {
    rows.push(
      `<tr><td>${escapeHtml(pair[0])}</td><td>${escapeHtml(pair[1])}</td><td>keep distinct</td></tr>`,
    );
  }
  const rationale =
    decision.rationale === null || decision.rationale === ""
      ? ""
      : `<p>Rationale: ${escapeHtml(decision.rationale)}</p>`;
  return `
    <table data-testid="variant-table">
      <thead><tr><th>English rendering</th><th>Japanese rendering</th><th>Disposition</th></tr></thead>
      <tbody>${rows.join("")}</tbody>
    </table>
    ${rationale}`;
}

function renderStandardizationDetail(
  payload: StandardizationPayload,
  ctx: TaskDetailContext,
): string {
  const violation =
    payload.violation === null
      ? ""
      : `<p class="validation-error">Constraint violation: ${escapeHtml(payload.violation)}</p>`;
  const variants =
    ctx.group === undefined
      ? `<p class="muted">Variant group not found in the standardization report.</p>`
      : renderVariantTable(ctx.group);
  return `
    <dl>
      <dt>Chinese term</dt><dd>${escapeHtml(payload.chinese)}</dd>
      <dt>Law</dt><dd class="mono">${escapeHtml(payload.law_id)}</dd>
      <dt>Occurrences</dt><dd>${num(payload.occurrences)}</dd>
    </dl>
    ${violation}
    ${variants}`;
}

function renderGateDetail(payload: GatePayload): string {
  return `
    <p>
      Review gate for pipeline stage <strong>${escapeHtml(payload.pipeline_stage)}</strong>
      (revision ${num(payload.revision)}). Approving releases the next stage; rejecting
      with feedback re-runs this stage.
    </p>`;
}

export function renderDecisionForm(task: ReviewTask): string {
  if (task.status !== "open") {
    const feedback =
      task.feedback === null ? "" : `<p>Feedback: ${escapeHtml(task.feedback)}</p>`;
    return `
      <div class="card" data-testid="decision-record">
        <p>Decision: ${badge(task.status, `status-${task.status}`)}
           ${task.decided_at === null ? "" : `at ${escapeHtml(task.decided_at)}`}</p>
        ${feedback}
      </div>`;
  }
  return `
    <form class="decision-form" data-testid="decision-form" data-task-id="${escapeHtml(task.id)}">
      <label for="feedback-${escapeHtml(task.id)}">Feedback (required to reject)</label>
      <textarea id="feedback-${escapeHtml(task.id)}" name="feedback"></textarea>
      <p class="validation-error" data-testid="validation-error" hidden></p>
      <div class="decision-actions">
        <button type="submit" class="approve" name="decision" value="approve">Approve</button>
        <button type="submit" class="reject" name="decision" value="reject">Reject</button>
      </div>
    </form>`;
}

export function renderTaskDetail(task: ReviewTask, ctx: TaskDetailContext = {}): string {
  let body: string;
  if (task.kind === "gate") {
    body = renderGateDetail(task.payload as unknown as GatePayload);
  } else if (task.stage === "segmentation") {
    body = renderSegmentationDetail(task.payload as unknown as SegmentationPayload);
  } else if (task.stage === "alignment") {
    body = renderAlignmentDetail(task.payload as unknown as AlignmentPayload, ctx);
  } else if (task.stage === "extraction") {
    body = renderExtractionDetail(task.payload as unknown as ExtractionEvent);
  } else {
    body = renderStandardizationDetail(task.payload as unknown as StandardizationPayload, ctx);
  }
  const notes = task.kind === "gate" || task.stage === "alignment" ? "" : qcNotes(task.qc_notes);
  return `
    <div class="card" data-testid="task-detail" data-task-id="${escapeHtml(task.id)}">
      <p>
        ${badge(task.kind, `kind-${task.kind}`)}
        ${badge(task.stage, "")}
        ${badge(task.status, `status-${task.status}`)}
      </p>
      <h3>${escapeHtml(task.title)}</h3>
      ${body}
      ${notes}
    </div>
    ${renderDecisionForm(task)}`;
}

// ---------------------------------------------------------------------------
// Quality dashboard
// ---------------------------------------------------------------------------

const DIMENSION_ORDER = [
  "coverage",
  "consistency",
  "completeness",
  "professionalism",
  "translation_quality",
] as const;

function metricCard(label: string, value: string): string {
  return `
    <div class="metric" data-metric="${escapeHtml(label)}">
      <span class="label">${escapeHtml(label)}</span>
      <span class="value">${escapeHtml(value)}</span>
    </div>`;
}

export function renderDashboard(
  report: QualityReport | null,
  hallucinations: readonly ExtractionEvent[] = [],
): string {
  if (report === null) {
    return `<div class="empty-state" data-testid="report-empty">No evaluation report yet.</div>`;
  }
  const display = report.display;
  const overall = display["overall_score"] ?? String(report.overall_score);

  const dimensionKeys: string[] = [
    ...DIMENSION_ORDER.filter((key) => key in report.dimension_scores),
    ...Object.keys(report.dimension_scores).filter(
      (key) => !(DIMENSION_ORDER as readonly string[]).includes(key),
    ),
  ];
  const dimensionCards = dimensionKeys
    .map((key) => metricCard(key, String(report.dimension_scores[key])))
    .join("");
  const weightRows = dimensionKeys
    .filter((key) => key in report.weights.values)
    .map(
      (key) =>
        `<tr><td>${escapeHtml(key)}</td><td data-weight="${escapeHtml(key)}">${num(
          report.weights.values[key],
        )}</td></tr>`,
    )
    .join("");
  const metricCards = Object.entries(display)
    .filter(([key]) => key !== "overall_score" && key !== "grade")
    .map(([key, value]) => metricCard(key, value))
    .join("");

  const hallucinationBlock =
    hallucinations.length === 0
      ? `<p class="muted">No hallucination flags.</p>`
      : `<ul class="hallucination-list" data-testid="hallucination-list">${hallucinations
          .map((event) => {
            const languages = Array.isArray(event["languages"])
              ? (event["languages"] as string[]).join(", ")
              : "";
            const term = typeof event["chinese"] === "string" ? event["chinese"] : "";
            const link =
              event.law_id !== undefined && event.article_number !== undefined
                ? articleLink(event.law_id, "zh", event.article_number)
                : "";
            return `<li><span class="mono">${escapeHtml(term)}</span> — flagged in ${escapeHtml(
              languages,
            )} ${link}</li>`;
          })
          .join("")}</ul>`;

  return `
    <div class="card" data-testid="dashboard">
      <p>
        <span class="grade-badge" data-testid="grade-badge">${escapeHtml(report.grade)}</span>
        <strong data-testid="overall-score">${escapeHtml(overall)}</strong>
        &middot; weight preset:
        <span class="mono" data-testid="weight-preset">${
          report.weights.preset === null ? "custom" : escapeHtml(report.weights.preset)
        }</span>
        &middot; generated at ${escapeHtml(report.generated_at)}
      </p>
      <h3>Dimension scores</h3>
      <div class="metric-grid" data-testid="dimension-scores">${dimensionCards}</div>
      <h3>Weights</h3>
      <table data-testid="weight-table">
        <thead><tr><th>Dimension</th><th>Weight</th></tr></thead>
        <tbody>${weightRows}</tbody>
      </table>
      <h3>Corpus metrics</h3>
      <div class="metric-grid" data-testid="corpus-metrics">${metricCards}</div>
      <p class="muted">
        Scored sample: ${num(report.sample.size)} of ${num(report.sample.population)} entries
        (seed ${num(report.sample.seed)}).
      </p>
      <h3>Hallucination flags</h3>
      ${hallucinationBlock}
      ${report.notes.length > 0 ? qcNotes(report.notes) : ""}
    </div>`;
}

// ---------------------------------------------------------------------------
// Search, runs, article view
// ---------------------------------------------------------------------------

export function renderSearchResults(response: SearchResponse): string {
  if (response.entries.length === 0) {
    return `<div class="empty-state">No matching termbase entries.</div>`;
  }
  const rows = response.entries
    .map(
      (entry) => `
      <tr>
        <td>${escapeHtml(entry.chinese)}</td>
        <td>${entry.english === null ? "—" : escapeHtml(entry.english)}</td>
        <td>${entry.japanese === null ? "—" : escapeHtml(entry.japanese)}</td>
        <td>${articleLink(entry.law_id, "zh", entry.article_number)}</td>
        <td>${escapeHtml(entry.status)}</td>
      </tr>`,
    )
    .join("");
  return `
    <p class="muted">${num(response.count)} matching entries (showing ${num(
      response.entries.length,
    )}).</p>
    <table data-testid="search-results">
      <thead><tr><th>Chinese</th><th>English</th><th>Japanese</th><th>Source</th><th>Status</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

export function renderRunList(runs: readonly RunSummary[], activeRunId: string | null): string {
  if (runs.length === 0) {
    return `<div class="empty-state">No runs yet.</div>`;
  }
  const rows = runs
    .map(
      (run) => `
      <tr class="${run.run_id === activeRunId ? "canonical" : ""}">
        <td><a href="#/run/${encodeURIComponent(run.run_id)}">${escapeHtml(run.run_id)}</a></td>
        <td>${badge(run.status, `status-${run.status}`)}</td>
        <td>${num(run.revision)}</td>
        <td>${escapeHtml(run.created_at)}</td>
        <td>${run.error === null ? "" : escapeHtml(run.error)}</td>
      </tr>`,
    )
    .join("");
  return `
    <table data-testid="run-table">
      <thead><tr><th>Run</th><th>Status</th><th>Revision</th><th>Created</th><th>Error</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

export function renderArticle(segment: SegmentRecord | undefined, lawId: string,
                              language: string, articleNumber: number): string {
  if (segment === undefined) {
    return `<div class="empty-state">Article ${num(articleNumber)} of ${escapeHtml(
      lawId,
    )} (${escapeHtml(language)}) not found in this run.</div>`;
  }
  return `
    <div class="card">
      <h3>${escapeHtml(lawId)} — article ${num(segment.article_number)} (${escapeHtml(
        languageLabel(segment.language),
      )})</h3>
      <div class="article-text">${escapeHtml(segment.text)}</div>
      <p class="muted">word count: ${num(segment.word_count)}</p>
    </div>`;
}

export function renderErrorBanner(message: string): string {
  return `<div class="error-banner" data-testid="error-banner">${escapeHtml(message)}</div>`;
}

export function renderConflictBanner(message: string): string {
  return `<div class="conflict-banner" data-testid="conflict-banner">${escapeHtml(message)}</div>`;
}
