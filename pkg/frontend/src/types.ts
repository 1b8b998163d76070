// Payload shapes of the pipeline service HTTP API (see docs/api.md in the
// repository root). The client renders these verbatim and never mutates them.

export type RunStatus =
  | "created"
  | "running"
  | "awaiting_review"
  | "partial"
  | "complete"
  | "failed";

export type PipelineStage =
  | "preprocess"
  | "align"
  | "extract"
  | "standardize"
  | "evaluate";

export type ReviewStage =
  | "segmentation"
  | "alignment"
  | "extraction"
  | "standardization";

export type TaskStatus = "open" | "approved" | "rejected" | "superseded";
export type TaskKind = "item" | "gate";
export type Decision = "approve" | "reject";

export interface StageState {
  status: string;
  completed_at: string | null;
  artifacts: string[];
  gate_task_id: string | null;
}

export interface RunSummary {
  run_id: string;
  status: RunStatus;
  created_at: string;
  revision: number;
  mock: boolean;
  seed: number;
  strict_review: boolean;
  error: string | null;
  stages: Record<PipelineStage, StageState>;
}

export interface ReviewTask {
  id: string;
  kind: TaskKind;
  stage: ReviewStage;
  title: string;
  status: TaskStatus;
  payload: Record<string, unknown>;
  qc_notes: string[];
  rerun_ref: Record<string, unknown> | null;
  created_at: string;
  decided_at: string | null;
  feedback: string | null;
}

// Stage-specific payload shapes carried in ReviewTask.payload.
export interface SegmentationPayload {
  source_id: string;
  language: string;
  message: string;
}

export interface AlignmentPayload {
  law_id: string;
  article_number: number;
  language: string;
  status: string;
  qc_notes: string[];
}

export interface ExtractionPayload {
  type: string;
  law_id?: string;
  article_number?: number;
  [extra: string]: unknown;
}

export interface StandardizationPayload {
  law_id: string;
  chinese: string;
  occurrences: number;
  violation: string | null;
}

export interface GatePayload {
  pipeline_stage: PipelineStage;
  revision: number;
}

export interface TasksResponse {
  run_id: string;
  tasks: ReviewTask[];
}

export interface DecisionResponse {
  task: ReviewTask;
  run: RunSummary;
  rerun_started: boolean;
}

export interface QualityReport {
  schema_version: number;
  generated_at: string;
  weights: { preset: string | null; values: Record<string, number> };
  sample: { size: number; population: number; seed: number };
  dimension_scores: Record<string, number>;
  overall_score: number;
  grade: string;
  metrics: Record<string, number>;
  agreement: Record<string, number | null> | null;
  display: Record<string, string>;
  notes: string[];
}

export interface TermEntry {
  chinese: string;
  japanese: string | null;
  english: string | null;
  context: string | null;
  ja_context: string | null;
  en_context: string | null;
  explanation: string | null;
  concept_id: string | null;
  law_id: string;
  article_number: number;
  provenance: string;
  status: string;
}

export interface SearchResponse {
  run_id: string;
  count: number;
  entries: TermEntry[];
}

// segments.json artifact
export interface SegmentRecord {
  statute_id: string;
  language: string;
  article_number: number;
  structural_path: (string | number)[][];
  text: string;
  word_count: number;
}

export interface SegmentsArtifact {
  segments: SegmentRecord[];
  warnings: { source_id: string; language: string; message: string }[];
}

// alignments.json artifact
export interface AlignmentCandidate {
  source_ref: (string | number)[];
  target_ref: (string | number)[] | null;
  method: string;
  similarity: number;
}

export interface AlignedPairRecord {
  candidate: AlignmentCandidate;
  rerank_score: number | null;
  attempts: number;
  status: string;
  qc_notes: string[];
}

export interface AlignmentsArtifact {
  laws: {
    law_id: string;
    en: AlignedPairRecord[];
    ja: AlignedPairRecord[];
    unmatched: { zh_ref: (string | number)[]; missing: string[]; notes: string[] }[];
  }[];
}

// standardization_report.json artifact: rendering pairs serialize as
// two-element [english, japanese] arrays.
export type VariantPair = [string, string];

export interface StandardizationGroup {
  law_id: string;
  chinese: string;
  occurrences: number;
  violation: string | null;
  decision: {
    best: VariantPair | null;
    merged: VariantPair[];
    distinct: VariantPair[];
    rationale: string | null;
    llm_called: boolean;
  } | null;
}

export interface StandardizationReportArtifact {
  stats: {
    original: number;
    standardized: number;
    variants_merged: number;
    unique_chinese: number;
    reduction_rate: number;
    independence_rate: number;
    extra: Record<string, number>;
  };
  groups: StandardizationGroup[];
}

// extraction_stats.json artifact
export interface ExtractionEvent {
  type: string;
  law_id?: string;
  article_number?: number;
  [extra: string]: unknown;
}

export interface ExtractionStatsArtifact {
  articles_total: number;
  articles_succeeded: number;
  success_rate: number;
  extracted: number;
  unique_terms: number;
  avg_per_article: number;
  ja_covered: number;
  en_covered: number;
  hallucination: { checked: number; flagged: number; rate: number | null };
  events: ExtractionEvent[];
}

// raw.termbase.json / standardized.termbase.json artifacts
export interface TermbaseArtifact {
  schema_version: number;
  created_at: string;
  revised_at: string | null;
  laws: Record<string, unknown>[];
  entries: TermEntry[];
}
